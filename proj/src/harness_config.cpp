#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "fisherlab/errors.hpp"
#include "fisherlab/harness.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

namespace {

using nlohmann::json;

// Object reader that remembers which keys were consumed, so that leftovers
// (typically misspellings) can be reported.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + " must be an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& at(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("missing key " + where(key));
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigError(where(key) + " must be a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where(key) + " must be finite");
    return x;
  }
  double number(const std::string& key, double fallback) {
    return has(key) ? number(key) : (used_.insert(key), fallback);
  }

  std::size_t count(const std::string& key) {
    const json& v = at(key);
    if (!v.is_number_unsigned()) throw ConfigError(where(key) + " must be a non-negative integer");
    return v.get<std::size_t>();
  }
  std::size_t count(const std::string& key, std::size_t fallback) {
    return has(key) ? count(key) : (used_.insert(key), fallback);
  }

  bool flag(const std::string& key, bool fallback) {
    if (!has(key)) return used_.insert(key), fallback;
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigError(where(key) + " must be true or false");
    return v.get<bool>();
  }

  std::string text(const std::string& key) {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigError(where(key) + " must be a string");
    return v.get<std::string>();
  }
  std::string text(const std::string& key, const std::string& fallback) {
    return has(key) ? text(key) : (used_.insert(key), fallback);
  }

  std::vector<double> numbers(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + " must be a non-empty array");
    std::vector<double> out;
    for (const json& e : v) {
      if (!e.is_number()) throw ConfigError(where(key) + " must contain numbers only");
      out.push_back(e.get<double>());
    }
    return out;
  }
  std::vector<std::size_t> counts(const std::string& key) {
    const json& v = at(key);
    if (!v.is_array() || v.empty()) throw ConfigError(where(key) + " must be a non-empty array");
    std::vector<std::size_t> out;
    for (const json& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError(where(key) + " must contain non-negative integers");
      out.push_back(e.get<std::size_t>());
    }
    return out;
  }

  Reader child(const std::string& key) { return Reader(at(key), path_ + "." + key); }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!used_.count(key)) throw ConfigError("unknown key " + where(key));
  }

  std::string where(const std::string& key = {}) const {
    return "'" + (key.empty() ? path_ : path_ + "." + key) + "'";
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

ModelConfig read_model(Reader r) {
  ModelConfig m;
  try {
    m.kind = model_kind_from_string(r.text("kind"));
  } catch (const InvalidInput& e) {
    throw ConfigError(r.where("kind") + ": " + e.what());
  }
  m.dim = r.count("dim");
  require(m.dim >= 1, r.where("dim") + " must be at least 1");
  if (r.has("theta")) {
    m.theta = r.numbers("theta");
    require(m.theta.size() == m.dim, r.where("theta") + " must have dim entries");
    require(!r.has("theta_norm") && !r.has("direction"),
            r.where() + ": give either theta or theta_norm, not both");
  } else {
    const double norm_value = r.number("theta_norm", 0.0);
    const std::string dir = r.text("direction", "diagonal");
    m.theta.assign(m.dim, 0.0);
    if (dir == "diagonal") {
      for (double& v : m.theta) v = norm_value / std::sqrt(static_cast<double>(m.dim));
    } else if (dir == "e1") {
      m.theta[0] = norm_value;
    } else {
      throw ConfigError(r.where("direction") + " must be \"diagonal\" or \"e1\"");
    }
  }
  r.finish();
  return m;
}

// "C": number or "calibrate".
std::optional<double> read_constant(Reader& r, const std::string& key, double fallback) {
  if (!r.has(key)) {
    r.number(key, fallback);
    return fallback;
  }
  const json& v = r.at(key);
  if (v.is_string() && v.get<std::string>() == "calibrate") return std::nullopt;
  if (!v.is_number() || !(v.get<double>() > 0.0))
    throw ConfigError(r.where(key) + " must be a positive number or \"calibrate\"");
  return v.get<double>();
}

std::vector<std::uint64_t> read_seeds(Reader& r) {
  const json& v = r.at("seeds");
  std::vector<std::uint64_t> seeds;
  if (v.is_number_unsigned()) {
    const auto k = v.get<std::uint64_t>();
    for (std::uint64_t i = 0; i < k; ++i) seeds.push_back(i);
  } else if (v.is_array()) {
    for (const json& e : v) {
      if (!e.is_number_unsigned()) throw ConfigError("'seeds' must contain non-negative integers");
      seeds.push_back(e.get<std::uint64_t>());
    }
  } else {
    throw ConfigError("'seeds' must be a count or an array of integers");
  }
  require(!seeds.empty(), "'seeds' must not be empty");
  std::vector<std::uint64_t> sorted = seeds;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(), "'seeds' must be distinct");
  return seeds;
}

ConfigA read_a(Reader& r) {
  ConfigA c;
  c.model = read_model(r.child("model"));
  c.n_grid = r.counts("n_grid");
  require(std::is_sorted(c.n_grid.begin(), c.n_grid.end()) &&
              std::adjacent_find(c.n_grid.begin(), c.n_grid.end()) == c.n_grid.end(),
          "'n_grid' must be strictly ascending");
  require(c.n_grid.front() >= 1, "'n_grid' entries must be at least 1");
  const auto C = read_constant(r, "C", 1.0);
  c.calibrate_C = !C;
  c.C = C.value_or(0.0);
  c.calibration_reps = r.count("calibration_reps", 200);
  try {
    c.estimator = estimator_from_string(r.text("estimator", "plain"));
  } catch (const InvalidInput& e) {
    throw ConfigError(std::string("'estimator': ") + e.what());
  }
  require(c.estimator != Estimator::Smoothed, "'estimator' smoothed belongs to experiment C");
  c.batches = r.count("batches", 1);
  require(c.batches >= 1, "'batches' must be at least 1");
  c.holdout_n = r.count("holdout_n", 1000);
  c.fit_gd = r.flag("fit_gd", true);
  c.fit_tol = r.number("fit_tol", 1e-8);
  c.fit_max_iter = r.count("fit_max_iter", 20000);
  c.mc_budget = r.count("mc_budget", 200000);
  return c;
}

ConfigB read_b(Reader& r) {
  ConfigB c;
  {
    Reader a = r.child("above");
    c.above.model = read_model(a.child("model"));
    c.above.n = a.count("n");
    c.above.steps = a.count("steps", 200);
    c.above.init_radius = a.number("init_radius", 1.0);
    c.above.C = a.number("C", 1.0);
    c.above.mc_budget = a.count("mc_budget", 200000);
    a.finish();
  }
  {
    Reader b = r.child("below");
    c.below.model = read_model(b.child("model"));
    c.below.n = b.count("n");
    c.below.rho_grid = b.numbers("rho_grid");
    require(std::is_sorted(c.below.rho_grid.begin(), c.below.rho_grid.end()),
            "'below.rho_grid' must be ascending");
    require(c.below.rho_grid.front() >= 0.0, "'below.rho_grid' must be non-negative");
    c.below.trials = b.count("trials", 2000);
    c.below.mc_budget = b.count("mc_budget", 200000);
    c.below.c0 = b.number("c0", 0.125);
    c.below.C = b.number("C", 1.0);
    c.below.C_KL_prime = read_constant(b, "C_KL_prime", 1.0);
    if (b.has("calibration_rhos")) c.below.calibration_rhos = b.numbers("calibration_rhos");
    b.finish();
  }
  if (r.has("gaussian_check")) {
    Reader g = r.child("gaussian_check");
    c.gaussian.dim = g.count("dim", 1);
    c.gaussian.n = g.count("n", 100);
    if (g.has("rho_sqrt_n")) c.gaussian.rho_sqrt_n = g.numbers("rho_sqrt_n");
    c.gaussian.trials = g.count("trials", 4000);
    g.finish();
  }
  return c;
}

ConfigC read_c(Reader& r) {
  ConfigC c;
  c.model = read_model(r.child("model"));
  if (r.has("control")) c.control = read_model(r.child("control"));
  c.n = r.count("n", 1000);
  c.sigma_grid = r.numbers("sigma_grid");
  require(std::is_sorted(c.sigma_grid.begin(), c.sigma_grid.end()) && c.sigma_grid.front() >= 0.0,
          "'sigma_grid' must be ascending and non-negative");
  c.m_smooth = r.count("m_smooth", 256);
  c.C = r.number("C", 1.0);
  return c;
}

ConfigD read_d(Reader& r) {
  ConfigD c;
  c.model = read_model(r.child("model"));
  c.n = r.count("n", 2000);
  c.tau_grid = r.numbers("tau_grid");
  c.beta = r.number("beta", 10.0);
  c.batch_size = r.count("batch_size", 64);
  c.eta = r.number("eta", 0.05);
  c.steps = r.count("steps", 400);
  c.init_norm = r.number("init_norm", 0.5);
  c.C = r.number("C", 1.0);
  return c;
}

ConfigE read_e(Reader& r) {
  ConfigE c;
  c.model = read_model(r.child("model"));
  c.n = r.count("n", 2000);
  {
    Reader t = r.child("training");
    c.training.tau = t.number("tau", 0.2);
    c.training.beta = t.number("beta", 10.0);
    c.training.batch_size = t.count("batch_size", 64);
    c.training.eta = t.number("eta", 0.05);
    c.training.steps = t.count("steps", 500);
    c.training.L_dir = t.number("L_dir", 0.0);
    t.finish();
  }
  c.init_norm = r.number("init_norm", 0.5);
  c.K = r.count("K", 3);
  c.power_iters = r.count("power_iters", 2);
  c.frozen_diagonal = r.numbers("frozen_diagonal");
  c.frozen_steps = r.count("frozen_steps", 300);
  require(c.K >= 1 && c.K <= c.model.dim, "'K' must lie in [1, dim]");
  require(c.frozen_diagonal.size() >= c.K, "'frozen_diagonal' must have at least K entries");
  return c;
}

}  // namespace

ModelSpec ModelConfig::spec() const {
  switch (kind) {
    case ModelKind::GaussianLocation: return ModelSpec::gaussian_location(theta);
    case ModelKind::SymmetricGMM: return ModelSpec::symmetric_gmm(theta);
    case ModelKind::Logistic: return ModelSpec::logistic(theta);
  }
  throw ConfigError("unknown model kind");
}

std::uint64_t cell_seed(const CommonConfig& c, std::uint64_t grid_index, std::uint64_t seed) {
  return mix_seed(c.master_seed, static_cast<std::uint64_t>(c.experiment), grid_index, seed);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  Reader r(j, "config");
  ExperimentConfig out;
  const std::string id = r.text("experiment");
  require(id.size() == 1 && id[0] >= 'A' && id[0] <= 'E', "'experiment' must be one of A, B, C, D, E");
  out.common.experiment = id[0];
  out.common.master_seed = r.has("master_seed") ? r.at("master_seed").get<std::uint64_t>() : 1;
  out.common.seeds = read_seeds(r);
  out.common.delta = r.number("delta", 0.05);
  require(out.common.delta > 0.0 && out.common.delta < 1.0, "'delta' must lie in (0, 1)");
  out.common.output_dir = r.text("output_dir", "");
  switch (out.common.experiment) {
    case 'A': out.spec = read_a(r); break;
    case 'B': out.spec = read_b(r); break;
    case 'C': out.spec = read_c(r); break;
    case 'D': out.spec = read_d(r); break;
    case 'E': out.spec = read_e(r); break;
  }
  r.finish();
  return out;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace fisherlab

// Prints one PASS/FAIL line per acceptance criterion and exits non-zero if
// any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "fisherlab/fisher.hpp"
#include "fisherlab/floor.hpp"
#include "fisherlab/geometry.hpp"
#include "fisherlab/harness.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/precond.hpp"
#include "fisherlab/spectral.hpp"

using namespace fisherlab;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

ExperimentConfig config(const std::string& name) {
  return load_config(std::string(FISHERLAB_SOURCE_DIR) + "/configs/" + name + ".json");
}

template <class T>
const T& part(const ExperimentConfig& c) {
  return std::get<T>(c.spec);
}

Verdict coverage() {
  const std::vector<std::size_t> grid{100, 400, 1600};
  const double delta = 0.05;
  const std::vector<std::pair<const char*, ModelSpec>> models{
      {"gaussian", ModelSpec::gaussian_location(Vector(8, 0.0))},
      {"logistic", ModelSpec::logistic(Vector(8, 0.0))}};
  Verdict v{true, ""};
  for (const auto& [name, m] : models) {
    const CalibrationResult cal = calibrate_C_detailed(m, grid, delta, 200, 101);
    // Coverage of the calibrated C on 200 fresh replications per n.
    const CalibrationResult fresh = calibrate_C_detailed(m, grid, delta, 200, 202);
    double worst = 1.0;
    for (const auto& r : fresh.ratios) {
      const auto hits = std::count_if(r.begin(), r.end(), [&](double x) { return x <= cal.C; });
      worst = std::min(worst, static_cast<double>(hits) / static_cast<double>(r.size()));
    }
    v.pass = v.pass && cal.C <= 4.0 && worst >= 1.0 - delta;
    v.detail += std::string(name) + " C=" + fmt("%.2f", cal.C) + " fresh coverage min " +
                fmt("%.3f", worst) + "; ";
  }
  return v;
}

Verdict phase_transition() {
  const ExperimentConfig c = config("exp_a");
  const ConfigA& a = part<ConfigA>(c);
  const ResultA r = run_experiment_A(c.common, a);
  bool monotone = true;
  for (std::size_t i = 1; i < r.above_fraction.size(); ++i)
    monotone = monotone && r.above_fraction[i] >= r.above_fraction[i - 1];
  const double head = r.iqr_param_error.front(), tail = r.iqr_param_error.back();

  const ExperimentConfig c16 = config("exp_a_scaling_d16");
  const ExperimentConfig c32 = config("exp_a_scaling_d32");
  const ResultA r16 = run_experiment_A(c16.common, part<ConfigA>(c16));
  const ResultA r32 = run_experiment_A(c32.common, part<ConfigA>(c32));
  double scaling = NAN;
  if (r16.n_star && r32.n_star) scaling = static_cast<double>(*r32.n_star) / static_cast<double>(*r16.n_star);

  Verdict v;
  v.pass = r.n_star.has_value() && a.n_grid.size() == 9 && c.common.seeds.size() == 20 && monotone &&
           tail <= 0.5 * head && scaling >= 1.5 && scaling <= 3.0;
  v.detail = "n*=" + (r.n_star ? std::to_string(*r.n_star) : std::string("NA")) +
             (monotone ? " above-fraction monotone" : " above-fraction NOT monotone") + " IQR head " +
             fmt("%.4g", head) + " tail " + fmt("%.4g", tail) + " n*(32)/n*(16)=" + fmt("%.3f", scaling);
  return v;
}

Verdict pl_geometry(const ResultB& r, std::size_t seeds) {
  const auto pass = r.above.numeric_column("pass");
  const auto slope = r.above.numeric_column("slope_hat");
  const auto mu = r.above.numeric_column("mu_min");
  const auto frac = r.above.numeric_column("fraction_ok");
  std::size_t good = 0;
  for (std::size_t i = 0; i < pass.size(); ++i) good += slope[i] >= mu[i] && frac[i] >= 0.95;
  Verdict v;
  const double share = pass.empty() ? 0.0 : static_cast<double>(good) / static_cast<double>(pass.size());
  v.pass = seeds == 20 && share >= 0.9;
  v.detail = std::to_string(good) + "/" + std::to_string(pass.size()) + " seeds with slope >= mu_min and fraction_ok >= 0.95";
  return v;
}

Verdict le_cam(const ResultB& r, const ConfigB& cfg) {
  const auto rho = r.below.numeric_column("rho");
  const auto err = r.below.numeric_column("error_rate");
  const auto se = r.below.numeric_column("std_err");
  const auto nkl = r.below.numeric_column("n_times_kl");
  bool floor_ok = true, zero_ok = false, monotone = true;
  std::size_t budget_rows = 0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (nkl[i] <= 0.125) {
      ++budget_rows;
      floor_ok = floor_ok && err[i] >= 0.25 - 3 * se[i];
    }
    if (rho[i] == 0.0) zero_ok = std::abs(err[i] - 0.5) <= 3 * se[i];
    if (i > 0) monotone = monotone && err[i] <= err[i - 1] + 2 * std::max(se[i], se[i - 1]);
  }
  const auto z = r.gaussian.numeric_column("z");
  bool gauss_ok = z.size() >= 3;
  double zmax = 0.0;
  for (double x : z) {
    gauss_ok = gauss_ok && std::abs(x) <= 3.0;
    zmax = std::max(zmax, std::abs(x));
  }
  Verdict v;
  v.pass = cfg.below.trials >= 2000 && budget_rows > 0 && floor_ok && zero_ok && monotone && gauss_ok;
  v.detail = std::to_string(budget_rows) + " rows within budget" + (floor_ok ? ", floor held" : ", floor BROKEN") +
             (zero_ok ? ", rho=0 at 0.5" : ", rho=0 off 0.5") + (monotone ? ", monotone" : ", NOT monotone") +
             ", gaussian max|z| " + fmt("%.2f", zmax);
  return v;
}

Verdict smoothing() {
  const ExperimentConfig c = config("exp_c");
  const ResultC r = run_experiment_C(c.common, part<ConfigC>(c));
  const bool control_ok = r.control_max_z && *r.control_max_z <= 1.0;
  Verdict v;
  v.pass = r.sigma_star.has_value() && control_ok;
  v.detail = "sigma*=" + (r.sigma_star ? fmt("%.2f", *r.sigma_star) : std::string("NA")) +
             " control max |diff|/(3 SE)=" + (r.control_max_z ? fmt("%.3f", *r.control_max_z) : std::string("NA"));
  const auto arm = r.summary.rows();
  const auto med = r.summary.numeric_column("median_ratio");
  double first = NAN, last = NAN;
  for (std::size_t i = 0; i < arm.size(); ++i)
    if (std::get<std::string>(arm[i][0]) == "treatment") {
      if (std::isnan(first)) first = med[i];
      last = med[i];
    }
  v.detail += " treatment median ratio " + fmt("%.3f", first) + " -> " + fmt("%.3f", last);
  return v;
}

Verdict fisher_floor() {
  const ExperimentConfig c = config("exp_d");
  const ConfigD& d = part<ConfigD>(c);
  const ResultD r = run_experiment_D(c.common, d);
  Verdict v;
  v.pass = d.tau_grid.size() == 5 && c.common.seeds.size() == 10 && r.treatment_win_fraction >= 0.9 &&
           r.certificate_fraction == 1.0 && r.slope >= 0.7 && r.slope <= 1.3 && r.r_squared >= 0.9;
  v.detail = "wins " + fmt("%.2f", r.treatment_win_fraction) + " certified " + fmt("%.2f", r.certificate_fraction) +
             " slope " + fmt("%.3f", r.slope) + " R2 " + fmt("%.3f", r.r_squared);
  return v;
}

Verdict monitoring() {
  const ExperimentConfig c = config("exp_e");
  const ConfigE& e = part<ConfigE>(c);
  const ResultE r = run_experiment_E(c.common, e);
  Verdict v;
  v.pass = e.training.steps >= 500 && r.violations_lower == 0 && r.violations_upper == 0 &&
           r.frozen_gap_at_200 <= 1e-6;
  v.detail = "lower violations " + std::to_string(r.violations_lower) + " upper violations " +
             std::to_string(r.violations_upper) + " frozen gap at 200 " + fmt("%.3g", r.frozen_gap_at_200);
  return v;
}

Verdict preconditioning() {
  Rng rng(8);
  std::size_t general = 0, kappa = 0, cases = 0;
  while (cases < 200) {
    const std::size_t d = 1 + rng.index(8);
    Matrix m(d, d);
    for (double& x : m.data()) x = rng.normal();
    Preconditioner p;
    try {
      p = Preconditioner::from_matrix(m);
    } catch (const SingularCovariance&) {
      continue;
    }
    const SymMatrix g = oracle::random_spd(d, rng, 0.0);
    general += !sandwich_check_general(g, p).ok;
    kappa += !sandwich_check_kappa(g, p).ok;
    ++cases;
  }
  const double alpha = 0.1;
  std::size_t whitening = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 2 + rng.index(7);
    const SymMatrix sigma = oracle::random_spd(d, rng);
    SymMatrix e = oracle::random_sym(d, rng);
    e *= 0.95 * alpha * rng.uniform() / std::max(opnorm(e), 1e-300);
    const SymMatrix root =
        spectral_function(eig_sym(sigma), [](double x) { return std::sqrt(std::max(x, 0.0)); });
    const SymMatrix sigma_hat = congruence(SymMatrix::identity(d) + e, root.matrix());
    whitening += !sandwich_check_whitening(oracle::random_spd(d, rng, 0.0), sigma, sigma_hat, alpha).ok;
  }
  Verdict v;
  v.pass = general == 0 && kappa == 0 && whitening == 0;
  v.detail = "violations: general " + std::to_string(general) + "/200, kappa " + std::to_string(kappa) +
             "/200, whitening " + std::to_string(whitening) + "/100";
  return v;
}

Verdict kernel_oracles() {
  Rng rng(9);
  std::size_t eig_bad = 0;
  for (int k = 0; k < 200; ++k) {
    const SymMatrix a = oracle::random_sym(1 + rng.index(4), rng, 2.0);
    const Spectrum s = eig_sym(a);
    const std::vector<double> ref = oracle::eigenvalues(a);
    for (std::size_t i = 0; i < ref.size(); ++i) eig_bad += std::abs(s.eigenvalues[i] - ref[i]) > 1e-8;
  }

  std::size_t score_bad = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 1 + rng.index(5);
    Vector theta(d);
    rng.fill_normal(theta, 0.7);
    const ModelSpec m = k % 3 == 0   ? ModelSpec::gaussian_location(theta)
                        : k % 3 == 1 ? ModelSpec::symmetric_gmm(theta)
                                     : ModelSpec::logistic(theta);
    const Dataset data = sample(m, 1, 500 + k);
    Vector at(d);
    rng.fill_normal(at, 0.7);
    const Vector s = score(m, at, data.sample(0));
    const Vector fd = oracle::fd_gradient([&](const Vector& t) { return loss(m, t, data.sample(0)); }, at);
    score_bad += norm(subtract(s, fd)) > 1e-4 * std::max(norm(fd), 1e-6);
  }

  std::size_t floor_bad = 0, floor_cases = 0;
  for (int attempt = 0; floor_cases < 50 && attempt < 5000; ++attempt) {
    const std::size_t d = 2 + rng.index(3);
    Vector theta(d);
    rng.fill_normal(theta, 0.5);
    const ModelSpec m = attempt % 2 ? ModelSpec::logistic(theta) : ModelSpec::symmetric_gmm(theta);
    const Dataset batch = sample(m, 16, 900 + attempt);
    const Spectrum sp = eig_sym(empirical_fisher(compute_scores(m, theta, batch)).matrix);
    if (sp.eigenvalues[d - 2] - sp.eigenvalues[d - 1] <= 0.05) continue;
    const double tau = sp.lambda_min() + 0.3;
    const Vector g = floor_gradient(m, theta, batch, tau);
    const Vector fd = oracle::fd_gradient(
        [&](const Vector& t) {
          return rayleigh_floor_penalty(empirical_fisher(compute_scores(m, t, batch)), tau).value;
        },
        theta);
    floor_bad += norm(subtract(g, fd)) > 1e-3 * std::max(norm(fd), 1e-8);
    ++floor_cases;
  }

  std::size_t weyl_bad = 0;
  for (int k = 0; k < 200; ++k) {
    const std::size_t d = 1 + rng.index(8);
    const SymMatrix a = oracle::random_sym(d, rng, 3.0);
    const SymMatrix e = oracle::random_sym(d, rng, 0.5);
    const Spectrum sa = eig_sym(a), sb = eig_sym(a + e);
    const double bound = opnorm(e);
    for (std::size_t i = 0; i < d; ++i) weyl_bad += std::abs(sb.eigenvalues[i] - sa.eigenvalues[i]) > bound + 1e-12;
  }

  std::size_t descent_bad = 0;
  const ModelSpec lm = ModelSpec::logistic(Vector{0.5, -0.5, 0.25});
  const Dataset ld = sample(lm, 2000, 6);
  const Vector ref = gd_minimize(lm, ld, Vector(3, 0.0), 1e-12).theta;
  for (int k = 0; k < 100; ++k) {
    Vector u(3);
    rng.fill_normal(u);
    const Vector th = add(ref, scaled(normalized(u), rng.uniform()));
    descent_bad += !descent_lemma_check(lm, ld, th, ref).ok;
  }

  Verdict v;
  v.pass = eig_bad == 0 && score_bad == 0 && floor_cases == 50 && floor_bad == 0 && weyl_bad == 0 &&
           descent_bad == 0;
  v.detail = "mismatches: eig " + std::to_string(eig_bad) + ", score " + std::to_string(score_bad) + "/100, floor " +
             std::to_string(floor_bad) + "/" + std::to_string(floor_cases) + ", weyl " + std::to_string(weyl_bad) +
             ", descent " + std::to_string(descent_bad) + "/100";
  return v;
}

Verdict determinism() {
  std::size_t differing = 0, checked = 0;
  for (const char* name : {"exp_a", "exp_b", "exp_c", "exp_d", "exp_e"}) {
    const ExperimentConfig c = config(name);
    auto csv = [&] {
      std::string s;
      for (const Table& t : run_experiment(c)) s += t.to_csv();
      return s;
    };
    kernels::set_thread_count(1);
    const std::string one = csv();
    kernels::set_thread_count(4);
    const std::string four = csv();
    differing += one != four;
    ++checked;
  }
  kernels::set_thread_count(0);
  Verdict v;
  v.pass = differing == 0;
  v.detail = std::to_string(checked - differing) + "/" + std::to_string(checked) +
             " experiments byte-identical with 1 and 4 threads";
  return v;
}

}  // namespace

int main() {
  int failures = 0;
  ResultB b;
  ConfigB bcfg;
  std::size_t b_seeds = 0;
  double b_seconds = 0.0;

  auto report = [&](int id, const char* name, double limit_s, const std::function<Verdict()>& fn,
                    double extra_s = 0.0) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() + extra_s;
    if (limit_s > 0 && secs > limit_s) {
      v.pass = false;
      v.detail += " (over the " + fmt("%.0f", limit_s) + " s budget)";
    }
    failures += !v.pass;
    std::printf("criterion %2d: %s  %-22s %7.2f s  %s\n", id, v.pass ? "PASS" : "FAIL", name, secs,
                v.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "concentration", 60, coverage);
  report(2, "phase transition", 300, phase_transition);
  {
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const ExperimentConfig c = config("exp_b");
      bcfg = part<ConfigB>(c);
      b_seeds = c.common.seeds.size();
      b = run_experiment_B(c.common, bcfg);
    } catch (const std::exception& e) {
      std::printf("experiment B failed: %s\n", e.what());
    }
    b_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  report(3, "PL geometry", 120, [&] { return pl_geometry(b, b_seeds); }, b_seconds);
  report(4, "Le Cam floor", 180, [&] { return le_cam(b, bcfg); }, b_seconds);
  report(5, "smoothing crossover", 180, smoothing);
  report(6, "Fisher floor", 300, fisher_floor);
  report(7, "monitoring", 30, monitoring);
  report(8, "preconditioning", 10, preconditioning);
  report(9, "kernel oracles", 0, kernel_oracles);
  report(10, "determinism", 0, determinism);

  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

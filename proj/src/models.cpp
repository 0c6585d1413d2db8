#include "fisherlab/models.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

#include "fisherlab/errors.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

namespace {

double half_log_2pi(std::size_t d) {
  return 0.5 * static_cast<double>(d) * std::log(2.0 * std::numbers::pi);
}

bool is_identity(const SymMatrix& s) {
  for (std::size_t i = 0; i < s.dim(); ++i)
    for (std::size_t j = 0; j < s.dim(); ++j)
      if (s(i, j) != (i == j ? 1.0 : 0.0)) return false;
  return true;
}

// Σ_x^{1/2}, or an empty matrix when Σ_x = I.
Matrix design_root(const ModelSpec& m) {
  if (m.kind != ModelKind::Logistic || is_identity(m.design_cov)) return {};
  return spectral_function(eig_sym(m.design_cov),
                           [](double l) { return std::sqrt(std::max(l, 0.0)); })
      .matrix();
}

// Draws one observation of `m` into x (and returns y).
double draw(const ModelSpec& m, const Matrix& root, Rng& rng, std::span<double> x) {
  const std::size_t d = m.dim();
  rng.fill_normal(x);
  switch (m.kind) {
    case ModelKind::GaussianLocation:
      for (std::size_t j = 0; j < d; ++j) x[j] += m.theta_star[j];
      return 0.0;
    case ModelKind::SymmetricGMM: {
      const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
      for (std::size_t j = 0; j < d; ++j) x[j] += sign * m.theta_star[j];
      return 0.0;
    }
    case ModelKind::Logistic: {
      if (!root.empty()) {
        const Vector z(x.begin(), x.end());
        const Vector rz = root * z;
        std::copy(rz.begin(), rz.end(), x.begin());
      }
      return rng.bernoulli(sigmoid(dot(m.theta_star, x))) ? 1.0 : 0.0;
    }
  }
  return 0.0;
}

void check_theta(const ModelSpec& m, std::span<const double> theta) {
  if (theta.size() != m.dim()) throw InvalidInput("parameter dimension mismatch");
}

// Sums per-block d×d matrices in block order.
Matrix blocked_matrix_mean(std::size_t count, std::uint64_t seed, std::size_t d,
                           const std::function<Matrix(std::uint64_t, std::size_t)>& block) {
  const std::size_t nblocks = (count + kernels::kMcBlockSize - 1) / kernels::kMcBlockSize;
  std::vector<Matrix> partial(nblocks);
  kernels::parallel_for(nblocks, [&](std::size_t b) {
    const std::size_t len = std::min(kernels::kMcBlockSize, count - b * kernels::kMcBlockSize);
    partial[b] = block(mix_seed(seed, b), len);
  });
  Matrix total(d, d);
  for (const Matrix& p : partial) total += p;
  total *= 1.0 / static_cast<double>(count);
  return total;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::GaussianLocation: return "gaussian_location";
    case ModelKind::SymmetricGMM: return "symmetric_gmm";
    case ModelKind::Logistic: return "logistic";
  }
  return "unknown";
}

ModelKind model_kind_from_string(std::string_view name) {
  if (name == "gaussian_location") return ModelKind::GaussianLocation;
  if (name == "symmetric_gmm") return ModelKind::SymmetricGMM;
  if (name == "logistic") return ModelKind::Logistic;
  throw InvalidInput("unknown model kind '" + std::string(name) + "'");
}

void ModelSpec::validate() const {
  if (theta_star.empty()) throw InvalidInput("model dimension must be at least 1");
  if (!all_finite(theta_star)) throw InvalidInput("non-finite model parameter");
  if (kind == ModelKind::Logistic) {
    if (design_cov.dim() != dim()) throw InvalidInput("design covariance dimension mismatch");
    design_cov.validate();
    const double lmin = eig_sym(design_cov).lambda_min();
    if (lmin < -1e-12 * (1.0 + opnorm(design_cov)))
      throw InvalidInput("design covariance is not PSD");
  }
}

ModelSpec ModelSpec::gaussian_location(Vector theta_star) {
  ModelSpec m{ModelKind::GaussianLocation, std::move(theta_star), {}};
  m.validate();
  return m;
}

ModelSpec ModelSpec::symmetric_gmm(Vector mu_star) {
  ModelSpec m{ModelKind::SymmetricGMM, std::move(mu_star), {}};
  m.validate();
  return m;
}

ModelSpec ModelSpec::logistic(Vector theta_star) {
  const std::size_t d = theta_star.size();
  return logistic(std::move(theta_star), SymMatrix::identity(d));
}

ModelSpec ModelSpec::logistic(Vector theta_star, SymMatrix design_cov) {
  ModelSpec m{ModelKind::Logistic, std::move(theta_star), std::move(design_cov)};
  m.validate();
  return m;
}

void Dataset::validate() const {
  if (n() == 0) throw InvalidDataset("dataset is empty");
  if (dim() == 0) throw InvalidDataset("dataset has zero dimension");
  if (!all_finite(x.data())) throw InvalidDataset("non-finite coordinate");
  if (kind == ModelKind::Logistic) {
    if (y.size() != n()) throw InvalidDataset("label count differs from sample count");
    for (double v : y)
      if (v != 0.0 && v != 1.0) throw InvalidDataset("labels must be 0 or 1");
  } else if (!y.empty()) {
    throw InvalidDataset("labels given for an unlabelled model");
  }
}

double log_cosh(double t) {
  const double a = std::abs(t);
  return a + std::log1p(std::exp(-2.0 * a)) - std::numbers::ln2;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double softplus(double t) { return std::max(t, 0.0) + std::log1p(std::exp(-std::abs(t))); }

Dataset sample(const ModelSpec& model, std::size_t n, std::uint64_t seed) {
  model.validate();
  if (n == 0) throw InvalidInput("sample size must be at least 1");
  const std::size_t d = model.dim();
  const Matrix root = design_root(model);
  Dataset out;
  out.kind = model.kind;
  out.x = Matrix(n, d);
  if (model.kind == ModelKind::Logistic) out.y.resize(n);
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    const double y = draw(model, root, rng, out.x.row(i));
    if (model.kind == ModelKind::Logistic) out.y[i] = y;
  }
  return out;
}

double loss(const ModelSpec& model, std::span<const double> theta, const SampleView& s) {
  check_theta(model, theta);
  switch (model.kind) {
    case ModelKind::GaussianLocation: {
      double q = 0.0;
      for (std::size_t j = 0; j < theta.size(); ++j) q += (s.x[j] - theta[j]) * (s.x[j] - theta[j]);
      return 0.5 * q + half_log_2pi(theta.size());
    }
    case ModelKind::SymmetricGMM:
      return half_log_2pi(theta.size()) + 0.5 * (dot(s.x, s.x) + dot(theta, theta)) -
             log_cosh(dot(theta, s.x));
    case ModelKind::Logistic: {
      const double t = dot(theta, s.x);
      return softplus(t) - s.y * t;
    }
  }
  return 0.0;
}

Vector score(const ModelSpec& model, std::span<const double> theta, const SampleView& s) {
  check_theta(model, theta);
  const std::size_t d = theta.size();
  Vector g(d);
  switch (model.kind) {
    case ModelKind::GaussianLocation:
      for (std::size_t j = 0; j < d; ++j) g[j] = theta[j] - s.x[j];
      break;
    case ModelKind::SymmetricGMM: {
      const double t = std::tanh(dot(theta, s.x));
      for (std::size_t j = 0; j < d; ++j) g[j] = theta[j] - t * s.x[j];
      break;
    }
    case ModelKind::Logistic: {
      const double r = sigmoid(dot(theta, s.x)) - s.y;
      for (std::size_t j = 0; j < d; ++j) g[j] = r * s.x[j];
      break;
    }
  }
  return g;
}

Vector score_dir_jvp(const ModelSpec& model, std::span<const double> theta,
                     const SampleView& s, std::span<const double> u) {
  check_theta(model, theta);
  if (u.size() != theta.size()) throw InvalidDirection("direction dimension mismatch");
  const std::size_t d = theta.size();
  switch (model.kind) {
    case ModelKind::GaussianLocation:
      return Vector(u.begin(), u.end());
    case ModelKind::SymmetricGMM: {
      const double c = std::cosh(dot(theta, s.x));
      const double sech2 = std::isfinite(c) ? 1.0 / (c * c) : 0.0;
      const double w = sech2 * dot(u, s.x);
      Vector g(u.begin(), u.end());
      for (std::size_t j = 0; j < d; ++j) g[j] -= w * s.x[j];
      return g;
    }
    case ModelKind::Logistic: {
      const double p = sigmoid(dot(theta, s.x));
      const double w = p * (1.0 - p) * dot(u, s.x);
      Vector g(d);
      for (std::size_t j = 0; j < d; ++j) g[j] = w * s.x[j];
      return g;
    }
  }
  return {};
}

Dataset select_rows(const Dataset& data, std::span<const std::size_t> indices) {
  Dataset out;
  out.kind = data.kind;
  out.x = Matrix(indices.size(), data.dim());
  if (!data.y.empty()) out.y.resize(indices.size());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    const std::size_t i = indices[k];
    if (i >= data.n()) throw InvalidInput("row index out of range");
    std::copy(data.x.row(i).begin(), data.x.row(i).end(), out.x.row(k).begin());
    if (!data.y.empty()) out.y[k] = data.y[i];
  }
  return out;
}

ModelSpec at_parameter(const ModelSpec& model, std::span<const double> theta) {
  check_theta(model, theta);
  ModelSpec m = model;
  m.theta_star.assign(theta.begin(), theta.end());
  return m;
}

SymMatrix population_fisher(const ModelSpec& model, std::span<const double> theta,
                            std::size_t mc_budget, std::uint64_t seed) {
  model.validate();
  check_theta(model, theta);
  const std::size_t d = model.dim();
  if (model.kind == ModelKind::GaussianLocation) return SymMatrix::identity(d);
  const bool at_zero = std::all_of(theta.begin(), theta.end(), [](double v) { return v == 0.0; });
  if (at_zero) {
    if (model.kind == ModelKind::Logistic) return model.design_cov * 0.25;
    return SymMatrix(d);
  }
  if (mc_budget == 0) throw InvalidInput("Monte Carlo budget must be at least 1");

  const ModelSpec at = at_parameter(model, theta);
  const Matrix root = design_root(at);
  const Matrix sum = blocked_matrix_mean(mc_budget, seed, d, [&](std::uint64_t s, std::size_t len) {
    Rng rng(s);
    Matrix acc(d, d);
    Vector x(d);
    for (std::size_t k = 0; k < len; ++k) {
      draw(at, root, rng, x);
      if (at.kind == ModelKind::Logistic) {
        // E[ssᵀ | x] = σ(1 − σ) xxᵀ, so y is integrated out.
        const double p = sigmoid(dot(theta, x));
        const double w = p * (1.0 - p);
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) acc(i, j) += w * x[i] * x[j];
      } else {
        const Vector sc = score(at, theta, {x, 0.0});
        for (std::size_t i = 0; i < d; ++i)
          for (std::size_t j = 0; j < d; ++j) acc(i, j) += sc[i] * sc[j];
      }
    }
    return acc;
  });
  return psd_project(SymMatrix::symmetrize(sum));
}

MonteCarloValue kl(const ModelSpec& model, std::span<const double> theta1,
                   std::span<const double> theta2, std::size_t mc_budget, std::uint64_t seed) {
  model.validate();
  check_theta(model, theta1);
  check_theta(model, theta2);
  if (!all_finite(theta1) || !all_finite(theta2)) throw InvalidInput("non-finite parameter");
  const std::size_t d = model.dim();
  if (model.kind == ModelKind::GaussianLocation) {
    const Vector diff = subtract(theta1, theta2);
    return {0.5 * dot(diff, diff), 0.0};
  }
  if (std::equal(theta1.begin(), theta1.end(), theta2.begin())) return {0.0, 0.0};
  if (mc_budget == 0) throw InvalidInput("Monte Carlo budget must be at least 1");

  const ModelSpec at = at_parameter(model, theta1);
  const Matrix root = design_root(at);
  const kernels::MomentSums m =
      kernels::blocked_mc_sum(mc_budget, seed, [&](std::uint64_t s, std::size_t len) {
        Rng rng(s);
        Vector x(d);
        kernels::MomentSums acc;
        for (std::size_t k = 0; k < len; ++k) {
          draw(at, root, rng, x);
          double v = 0.0;
          if (at.kind == ModelKind::Logistic) {
            const double t1 = dot(theta1, x);
            const double t2 = dot(theta2, x);
            // Bernoulli KL(σ(t1) ‖ σ(t2)) in terms of log-sigmoids.
            const double p = sigmoid(t1);
            v = p * (softplus(-t2) - softplus(-t1)) + (1.0 - p) * (softplus(t2) - softplus(t1));
          } else {
            const double log_r = 0.5 * (dot(theta1, theta1) - dot(theta2, theta2)) +
                                 log_cosh(dot(theta2, x)) - log_cosh(dot(theta1, x));
            v = std::expm1(log_r) - log_r;
          }
          v = std::max(v, 0.0);
          acc.sum += v;
          acc.sum_sq += v * v;
          ++acc.count;
        }
        return acc;
      });
  const double n = static_cast<double>(m.count);
  const double mean = m.sum / n;
  const double var = std::max(0.0, m.sum_sq / n - mean * mean) * n / std::max(1.0, n - 1.0);
  return {mean, std::sqrt(var / n)};
}

double smoothness_bound(const ModelSpec& model, const Dataset& data) {
  if (data.n() == 0) throw InvalidDataset("dataset is empty");
  switch (model.kind) {
    case ModelKind::GaussianLocation:
      return 1.0;
    case ModelKind::Logistic:
      return 0.25 * lambda_max(kernels::outer_product_mean(data.x));
    case ModelKind::SymmetricGMM:
      return lambda_max(kernels::outer_product_mean(data.x)) + 1.0;
  }
  return 0.0;
}

void write_dataset_csv(std::ostream& os, const Dataset& data) {
  const std::size_t d = data.dim();
  const bool labelled = data.kind == ModelKind::Logistic;
  os << "# fisherlab dataset kind=" << to_string(data.kind) << " dim=" << d << " schema=1\n";
  for (std::size_t j = 0; j < d; ++j) os << (j ? "," : "") << 'x' << j;
  if (labelled) os << ",y";
  os << '\n';
  char buf[32];
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", data.x(i, j));
      os << (j ? "," : "") << buf;
    }
    if (labelled) os << ',' << (data.y[i] != 0.0 ? 1 : 0);
    os << '\n';
  }
}

Dataset read_dataset_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("# fisherlab dataset", 0) != 0)
    throw InvalidDataset("missing dataset header comment");
  std::string kind_name;
  std::size_t dim = 0;
  {
    std::istringstream hs(line.substr(std::string("# fisherlab dataset").size()));
    std::string tok;
    while (hs >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "kind") kind_name = val;
      if (key == "dim") dim = std::stoul(val);
    }
  }
  Dataset out;
  try {
    out.kind = model_kind_from_string(kind_name);
  } catch (const InvalidInput& e) {
    throw InvalidDataset(e.what());
  }
  if (dim == 0) throw InvalidDataset("header lacks a positive dim");
  if (!std::getline(is, line)) throw InvalidDataset("missing column header");

  const bool labelled = out.kind == ModelKind::Logistic;
  const std::size_t ncols = dim + (labelled ? 1 : 0);
  std::vector<double> values;
  std::size_t rows = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::size_t c = 0;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        values.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw InvalidDataset("unparsable value '" + cell + "' on row " + std::to_string(rows + 1));
      }
      ++c;
    }
    if (c != ncols) throw InvalidDataset("row " + std::to_string(rows + 1) + " has wrong column count");
    ++rows;
  }
  out.x = Matrix(rows, dim);
  if (labelled) out.y.resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < dim; ++j) out.x(i, j) = values[i * ncols + j];
    if (labelled) out.y[i] = values[i * ncols + dim];
  }
  out.validate();
  return out;
}

}  // namespace fisherlab

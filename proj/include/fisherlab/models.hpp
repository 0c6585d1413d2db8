#pragma once

// Synthetic statistical models. Every loss is the per-sample negative
// log-likelihood including normalising constants:
//
//   GaussianLocation  ℓ = ½‖x − θ‖² + (d/2)·log 2π
//   SymmetricGMM      ℓ = (d/2)·log 2π + ½(‖x‖² + ‖μ‖²) − log cosh(μᵀx)
//                     (mixture ½N(μ, I) + ½N(−μ, I))
//   Logistic          ℓ = log(1 + exp(θᵀx)) − y·θᵀx
//                     (conditional likelihood of y given x; the design
//                     density does not depend on θ and is left out)

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>

#include "fisherlab/linalg.hpp"

namespace fisherlab {

enum class ModelKind { GaussianLocation, SymmetricGMM, Logistic };

std::string_view to_string(ModelKind kind);
/// Accepts "gaussian_location", "symmetric_gmm", "logistic". Throws InvalidInput.
ModelKind model_kind_from_string(std::string_view name);

struct ModelSpec {
  ModelKind kind = ModelKind::GaussianLocation;
  /// θ* for GaussianLocation and Logistic, μ* for SymmetricGMM.
  Vector theta_star;
  /// Σ_x; only used by Logistic. Identity when left empty.
  SymMatrix design_cov;

  std::size_t dim() const noexcept { return theta_star.size(); }
  void validate() const;

  static ModelSpec gaussian_location(Vector theta_star);
  static ModelSpec symmetric_gmm(Vector mu_star);
  static ModelSpec logistic(Vector theta_star);
  static ModelSpec logistic(Vector theta_star, SymMatrix design_cov);
};

/// One observation. `y` is meaningful for Logistic only.
struct SampleView {
  std::span<const double> x;
  double y = 0.0;
};

struct Dataset {
  ModelKind kind = ModelKind::GaussianLocation;
  Matrix x;  ///< n × d
  Vector y;  ///< n labels in {0, 1} (Logistic), empty otherwise

  std::size_t n() const noexcept { return x.rows(); }
  std::size_t dim() const noexcept { return x.cols(); }
  SampleView sample(std::size_t i) const {
    return {x.row(i), y.empty() ? 0.0 : y[i]};
  }
  void validate() const;
};

/// Per-sample score vectors evaluated at `theta`.
struct ScoreSet {
  Matrix scores;  ///< n × d
  Vector theta;

  std::size_t n() const noexcept { return scores.rows(); }
  std::size_t dim() const noexcept { return scores.cols(); }
};

struct MonteCarloValue {
  double value = 0.0;
  double std_err = 0.0;
};

/// i.i.d. draws from P_{θ*}; bit-identical for identical (model, n, seed).
Dataset sample(const ModelSpec& model, std::size_t n, std::uint64_t seed);

double loss(const ModelSpec& model, std::span<const double> theta, const SampleView& s);
Vector score(const ModelSpec& model, std::span<const double> theta, const SampleView& s);
/// ∇_θ (uᵀ s(θ; sample)).
Vector score_dir_jvp(const ModelSpec& model, std::span<const double> theta,
                     const SampleView& s, std::span<const double> u);

/// Γ(θ) = E_θ[s sᵀ]. Analytic where available, Monte Carlo otherwise;
/// negative eigenvalues are clipped.
SymMatrix population_fisher(const ModelSpec& model, std::span<const double> theta,
                            std::size_t mc_budget, std::uint64_t seed);

/// KL(P_θ1 ‖ P_θ2). Exact for GaussianLocation; otherwise a Monte Carlo
/// estimate using the non-negative integrand r − 1 − log r, r = p₂/p₁.
MonteCarloValue kl(const ModelSpec& model, std::span<const double> theta1,
                   std::span<const double> theta2, std::size_t mc_budget,
                   std::uint64_t seed);

/// Upper bound on ‖∇²L‖_op for the empirical risk on `data`.
double smoothness_bound(const ModelSpec& model, const Dataset& data);

/// Rows of `data` at the given indices, in order (repeats allowed).
Dataset select_rows(const Dataset& data, std::span<const std::size_t> indices);

/// Model with θ* replaced; sampling from P_θ goes through this.
ModelSpec at_parameter(const ModelSpec& model, std::span<const double> theta);

/// log cosh(t), stable for large |t|.
double log_cosh(double t);
double sigmoid(double t);
/// log(1 + eᵗ)
double softplus(double t);

/// CSV with a `# fisherlab dataset kind=<k> dim=<d> schema=1` comment line,
/// a header row `x0,…,x{d-1}[,y]`, and one row per sample.
void write_dataset_csv(std::ostream& os, const Dataset& data);
Dataset read_dataset_csv(std::istream& is);

}  // namespace fisherlab

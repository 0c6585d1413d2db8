#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "fisherlab/fisher.hpp"
#include "fisherlab/models.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

struct LeCamConfig {
  double c0 = 0.125;
  double C_KL_prime = 1.0;
  double rho = 0.0;
  std::size_t trials = 2000;
  std::size_t n = 100;

  void validate() const;
};

/// θ± = θ* ± ρv with v the unit min-eigenvector of Γ.
struct TwoPointInstance {
  Vector theta_plus;
  Vector theta_minus;
  Vector v;
  double rho = 0.0;
};

/// The sign of v is fixed so its first nonzero coordinate is positive.
TwoPointInstance two_point_pair(std::span<const double> theta_star, const Spectrum& spectrum,
                                double rho);

struct RhoBudget {
  double rho = 0.0;
  /// λ_min = 0: the direction is free and ρ is unbounded (+∞).
  bool unbounded_separation = false;
};

/// √(c0/(n·C'_KL·λ_min))
RhoBudget rho_for_budget(std::size_t n, double lambda_min, double C_KL_prime, double c0);

struct TwoPointKL {
  double kl = 0.0;
  double std_err = 0.0;
  double n_times_kl = 0.0;
  /// n·kl ≤ c0 + 3·n·SE
  bool budget_ok = false;
};

TwoPointKL kl_two_point(const ModelSpec& model, const TwoPointInstance& inst, std::size_t n,
                        double c0, std::size_t mc_budget, std::uint64_t seed);

struct LrtResult {
  double error_rate = 0.0;
  double std_err = 0.0;
  std::size_t trials = 0;
};

/// Per trial: fair label, n draws from P_θ±, decide by the sign of the
/// log-likelihood ratio (ties broken by a fair coin). Trial k uses seed
/// mix_seed(seed, k), so runs with equal seeds share random numbers across ρ.
LrtResult lrt_error(const ModelSpec& model, const TwoPointInstance& inst, std::size_t n,
                    std::size_t trials, std::uint64_t seed);

struct KLCalibration {
  double C_KL_prime = 0.0;
  /// kl/(ρ²λ_min) per ρ.
  std::vector<double> ratios;
};

/// Smallest C with kl(θ₊, θ₋) ≤ C·ρ²·λ_min on every ρ of the grid.
KLCalibration calibrate_C_KL(const ModelSpec& model, std::span<const double> theta_star,
                             const Spectrum& spectrum, std::span<const double> rho_grid,
                             std::size_t mc_budget, std::uint64_t seed);

struct LeCamRow {
  double rho = 0.0;
  std::size_t n = 0;
  double n_times_kl = 0.0;
  double error_rate = 0.0;
  double std_err = 0.0;
  Regime regime = Regime::Indeterminate;
};

/// Columns rho, n, n_times_kl, error_rate, std_err, regime.
void write_lecam_csv(std::ostream& os, std::span<const LeCamRow> rows);

}  // namespace fisherlab

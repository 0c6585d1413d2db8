#pragma once

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

#include "fisherlab/linalg.hpp"
#include "fisherlab/models.hpp"

namespace fisherlab {

enum class Estimator { Plain, MoM, Catoni, Smoothed };
enum class Regime { Above, Below, Indeterminate };

std::string_view to_string(Estimator e);
std::string_view to_string(Regime r);
Estimator estimator_from_string(std::string_view name);

struct FisherEstimate {
  SymMatrix matrix;
  Estimator estimator = Estimator::Plain;
  std::size_t n = 0;
  std::size_t batches = 1;
  double sigma = 0.0;
  Vector theta;
};

struct ThresholdInputs {
  std::size_t n = 0;
  std::size_t d = 0;
  double delta = 0.0;
  double C = 0.0;
  double sigma_eff = 0.0;
  double L_sm = 0.0;
};

struct ThresholdReport {
  double lambda_min = 0.0;
  double Lambda_star = 0.0;
  Regime regime = Regime::Indeterminate;
  /// PL constant (λ_min − Λ*)²/L_sm, present iff regime == Above.
  std::optional<double> mu;
  ThresholdInputs inputs;
};

/// Scores at θ for every sample of `data`.
ScoreSet compute_scores(const ModelSpec& model, std::span<const double> theta, const Dataset& data);

/// (1/n) Σ sᵢsᵢᵀ
FisherEstimate empirical_fisher(const ScoreSet& scores);

/// M contiguous batches (the remainder goes to the last one), plain Fisher
/// per batch, element-wise median across batches, then PSD projection.
FisherEstimate mom_fisher(const ScoreSet& scores, std::size_t batches);

/// Entrywise Catoni M-estimate of E[ssᵀ] with influence
/// ψ(x) = sign(x)·log(1 + |x| + x²/2), solved by bisection.
FisherEstimate catoni_fisher(const ScoreSet& scores, double scale);
/// Same, with the per-entry scale √(2 log(1/δ) / (n v̂)), v̂ the entry's
/// second moment floored at 1e-12.
FisherEstimate catoni_fisher_auto(const ScoreSet& scores, double delta);

/// Averages score(θ + z_m, xᵢ) over z_1..z_M ~ N(0, σ²I). The same z_m are
/// used for every sample. sigma = 0 gives the exact scores.
ScoreSet smoothed_scores(const ModelSpec& model, std::span<const double> theta,
                         const Dataset& data, double sigma, std::size_t m_smooth,
                         std::uint64_t seed);
/// Plain Fisher of smoothed_scores, tagged as Smoothed.
FisherEstimate smoothed_fisher(const ModelSpec& model, std::span<const double> theta,
                               const Dataset& data, double sigma, std::size_t m_smooth,
                               std::uint64_t seed);

/// Λ* = C·σ_eff·√((d + log(1/δ))/n)
double fluctuation_radius(std::size_t n, std::size_t d, double delta, double sigma_eff, double C);

struct SigmaEff {
  double value = 0.0;
  /// Set when every score is zero (value is then 0).
  bool degenerate_scores = false;
};
/// √λ_max(Γ̂)
SigmaEff sigma_eff_estimate(const ScoreSet& scores);

struct CalibrationOptions {
  double grid_step = 0.25;
  double grid_max = 8.0;
  std::size_t mc_budget = 200000;
};

struct CalibrationResult {
  double C = 0.0;
  /// Coverage at C for each entry of n_grid.
  std::vector<double> coverage;
  /// err/(σ_eff·√((d + log(1/δ))/n)) per (n index, replicate).
  std::vector<std::vector<double>> ratios;
};

/// Smallest C on {step, 2·step, …, grid_max} for which the plain estimator
/// satisfies ‖Γ̂ − Γ‖_op ≤ Λ* in at least a (1 − δ) fraction of `reps`
/// replications at every n in n_grid. Γ is taken at θ*. Throws
/// CalibrationFailed when no grid value suffices.
CalibrationResult calibrate_C_detailed(const ModelSpec& model, std::span<const std::size_t> n_grid,
                                       double delta, std::size_t reps, std::uint64_t seed,
                                       const CalibrationOptions& options = {});
double calibrate_C(const ModelSpec& model, std::span<const std::size_t> n_grid, double delta,
                   std::size_t reps, std::uint64_t seed);

/// Above iff λ_min ≥ 2Λ*, Below iff λ_min ≤ Λ*/2, Indeterminate otherwise.
ThresholdReport classify_regime(double lambda_min, double Lambda_star, double L_sm);

/// Full report from an estimate: λ_min(Γ̂), σ_eff from the same scores,
/// Λ*, and the regime.
ThresholdReport threshold_report(const ScoreSet& scores, const FisherEstimate& estimate,
                                 double delta, double C, double L_sm);

}  // namespace fisherlab

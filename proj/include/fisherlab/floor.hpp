#pragma once

// Fisher-floor regularisation: R_τ(θ) = (τ − λ_min(Γ̂_B(θ)))₊², its Danskin
// gradient, an SGD trainer using it, certified lower bounds on the final
// λ_min, and a K-direction monitor that tracks λ_min without a full
// eigensolve.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "fisherlab/fisher.hpp"
#include "fisherlab/geometry.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

struct FloorConfig {
  double tau = 0.2;
  double beta = 1.0;
  /// Directional sensitivity constant; 0 means estimate it on the first
  /// batch as 2·maxᵢ‖jvpᵢ‖‖sᵢ‖/B.
  double L_dir = 0.0;
  std::size_t batch_size = 64;
  /// Monitor power steps per update.
  std::size_t eig_iters = 2;
  double eta = 0.05;
  std::size_t steps = 400;
  /// Confidence level and constant used for ε_stat = Λ*.
  double delta = 0.05;
  double C = 1.0;

  void validate() const;
};

struct FloorPenalty {
  double value = 0.0;
  double phi = 0.0;  ///< λ_min of the estimate
  Vector u_star;     ///< unit eigenvector of φ
};

/// (τ − λ_min)₊² and the minimising direction.
FloorPenalty rayleigh_floor_penalty(const FisherEstimate& gamma_hat, double tau);

/// ∇_θ R_τ on `batch`: zero when φ ≥ τ, otherwise
/// −2(τ − φ)·(2/B)Σᵢ(u*ᵀsᵢ)·∇_θ(u*ᵀsᵢ).
Vector floor_gradient(const ModelSpec& model, std::span<const double> theta, const Dataset& batch,
                      double tau);

/// 2·maxᵢ‖∇_θ(u*ᵀsᵢ)‖·‖sᵢ‖/B with u* the min-eigenvector of Γ̂_B(θ).
double estimate_L_dir(const ModelSpec& model, std::span<const double> theta, const Dataset& batch);

struct FloorRun {
  /// Full-dataset task loss and task-gradient norm at every iterate.
  Trajectory trajectory;
  /// λ_min(Γ̂_B(θ_t)) on the mini-batch drawn at step t.
  Vector lambda_min_trace;
  /// Batch Fisher matrices Γ̂_B(θ_t), kept when requested.
  std::vector<SymMatrix> batch_fishers;
  double L_dir = 0.0;
};

/// Mini-batch SGD (batches drawn with replacement) on L_task + β·R_τ, or
/// on L_task alone when enable_floor is false or β = 0.
FloorRun train_with_floor(const ModelSpec& model, const Dataset& data,
                          std::span<const double> theta0, const FloorConfig& config,
                          bool enable_floor, std::uint64_t seed, bool keep_batch_fishers = false);

struct CertificateInputs {
  double tau = 0.0;
  double eps_opt = 0.0;
  double beta = 0.0;
  double L_dir = 0.0;
  double eps_stat = 0.0;
  double eps_mini = 0.0;
};

struct FloorCertificate {
  CertificateInputs inputs;
  std::optional<double> Delta_B;
  std::optional<double> sin2_theta;
  double bound = 0.0;
};

/// τ − ε_opt/(2βL_dir) − ε_stat − ε_mini
FloorCertificate certified_floor_bound(const CertificateInputs& in);
/// τ − ε_opt/(2βL_dir) − Δ_B·sin²ϑ − ε_stat − ε_mini
FloorCertificate finite_k_floor_bound(const CertificateInputs& in, double Delta_B,
                                      double sin2_theta);

struct MeasuredCertificate {
  FloorCertificate certificate;
  /// ‖∇L_task‖ at the final iterate, reported alongside ε_opt.
  double eps_task = 0.0;
  /// λ_min of the full-dataset Fisher at the final iterate.
  double lambda_min_full = 0.0;
  /// λ_min of the batch Fisher used for ε_mini.
  double lambda_min_batch = 0.0;
};

/// Measures the certificate inputs at θ on the full dataset: ε_opt is
/// ‖∇(L_task + βR_τ)‖, ε_stat is Λ*, ε_mini is ‖Γ̂_B − Γ̂‖_op on one batch
/// drawn with `seed`.
MeasuredCertificate measure_certificate(const ModelSpec& model, const Dataset& data,
                                        std::span<const double> theta, const FloorConfig& config,
                                        double L_dir, std::uint64_t seed);

struct MonitorRecord {
  double phi_K = 0.0;
  double lambda_min = 0.0;
  double Delta_B = 0.0;
  double sin2_theta = 0.0;
  double penalty = 0.0;
  /// λ_min + Δ_B·sin²ϑ, the tilt upper bound on φ_K.
  double bound = 0.0;
};

struct MonitorState {
  Subspace U;
  double phi_K = 0.0;
  std::vector<MonitorRecord> history;
};

/// K random orthonormal directions in ℝᵈ.
MonitorState monitor_init(std::size_t d, std::size_t K, std::uint64_t seed);
MonitorState monitor_init(Subspace U);

/// `iters` steps of subspace iteration on (c·I − Γ̂), c the Gershgorin bound
/// on λ_max, then a Rayleigh–Ritz rotation so that φ_K = min_j u_jᵀΓ̂u_j is
/// the minimum of the Rayleigh quotient over span(U). A column that
/// collapses to zero is replaced by a fixed pseudo-random direction.
/// Appends a diagnostics record computed with a full eigensolve.
MonitorState monitor_update(MonitorState state, const SymMatrix& gamma_hat, std::size_t iters);
MonitorState monitor_update(MonitorState state, const FisherEstimate& gamma_hat, std::size_t iters);

struct AnglePenalty {
  double Delta_B = 0.0;
  double sin2_theta = 0.0;
  double penalty = 0.0;
};

/// Δ_B = λ_max − λ_min, sin²ϑ of the largest principal angle between U and
/// the min-eigenspace, and their product.
AnglePenalty angle_penalty(const SymMatrix& gamma_hat, const Subspace& U);
AnglePenalty angle_penalty(const FisherEstimate& gamma_hat, const Subspace& U);

/// Columns step, phi_K, lambda_min, Delta_B, sin2_theta, penalty, bound.
void write_monitor_csv(std::ostream& os, const MonitorState& state);

}  // namespace fisherlab

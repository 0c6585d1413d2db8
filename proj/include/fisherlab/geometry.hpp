#pragma once

#include <iosfwd>
#include <vector>

#include "fisherlab/errors.hpp"
#include "fisherlab/linalg.hpp"
#include "fisherlab/models.hpp"

namespace fisherlab {

/// (λ_min − Λ*)²/L_sm. Throws NotAboveThreshold when λ_min ≤ Λ*.
double pl_constant(double lambda_min, double Lambda_star, double L_sm);

struct Trajectory {
  std::vector<Vector> thetas;  ///< θ_0 … θ_T
  Vector losses;
  Vector grad_norms;
  double eta = 0.0;
  ModelKind model = ModelKind::GaussianLocation;
  /// Smoothness bound of the dataset the run used.
  double L_sm = 0.0;
  /// Set when eta > 1/L_sm.
  bool step_size_warning = false;

  std::size_t steps() const noexcept { return losses.empty() ? 0 : losses.size() - 1; }
};

/// Raised when the loss exceeds 1e12 or becomes non-finite. The trajectory
/// recorded up to that point is kept.
class DivergedTrajectory : public Error {
 public:
  DivergedTrajectory(const std::string& what, Trajectory partial)
      : Error("DivergedTrajectory: " + what), partial_(std::move(partial)) {}
  const Trajectory& partial() const noexcept { return partial_; }

 private:
  Trajectory partial_;
};

/// T steps of θ ← θ − η∇L(θ) on the empirical risk of `data`.
Trajectory gd_run(const ModelSpec& model, const Dataset& data, std::span<const double> theta0,
                  double eta, std::size_t T);

struct MinimizeResult {
  Vector theta;
  double loss = 0.0;
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// GD with η = 1/L_sm until ‖∇L‖ ≤ grad_tol or max_iter steps.
MinimizeResult gd_minimize(const ModelSpec& model, const Dataset& data,
                           std::span<const double> theta0, double grad_tol = 1e-10,
                           std::size_t max_iter = 100000);

struct PLReport {
  double mu_min = 0.0;
  /// Least-squares slope through the origin of ½‖∇L‖² against L − L*.
  double slope_hat = 0.0;
  /// Share of usable points with ½‖∇L‖² ≥ mu_min·(L − L*).
  double fraction_ok = 0.0;
  std::size_t usable_points = 0;
};

/// Uses points whose gap L − L* exceeds min_gap. Throws InvalidInput when
/// L_star is above the smallest recorded loss by more than 1e-9, and
/// InsufficientTrajectory with fewer than 3 usable points.
PLReport pl_slope_check(const Trajectory& traj, double L_star, double mu_min,
                        double min_gap = 1e-10);

struct DescentCheck {
  double gap = 0.0;    ///< L(θ) − L(θ_ref)
  double bound = 0.0;  ///< (L_sm/2)‖θ − θ_ref‖²
  bool ok = false;
};

/// Smoothness-based upper bound on the loss gap. Only meaningful when θ_ref
/// is a stationary point of L.
DescentCheck descent_lemma_check(const ModelSpec& model, const Dataset& data,
                                 std::span<const double> theta, std::span<const double> theta_ref);

struct GradDistanceCheck {
  double lhs = 0.0;  ///< ‖∇L(θ)‖
  double rhs = 0.0;  ///< (λ_min − Λ*)‖θ − θ_ref‖
  bool ok = false;
};

/// Throws NotAboveThreshold unless λ_min ≥ 2Λ* and λ_min > Λ*.
GradDistanceCheck grad_distance_check(const ModelSpec& model, const Dataset& data,
                                      std::span<const double> theta,
                                      std::span<const double> theta_ref, double lambda_min,
                                      double Lambda_star);

/// Columns t, loss, grad_norm, dist_to_ref.
void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::span<const double> theta_ref);

}  // namespace fisherlab

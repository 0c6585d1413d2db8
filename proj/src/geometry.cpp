#include "fisherlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fisherlab/kernels.hpp"

namespace fisherlab {

namespace {

bool diverged(double loss) { return !std::isfinite(loss) || loss > 1e12; }

}  // namespace

double pl_constant(double lambda_min, double Lambda_star, double L_sm) {
  if (!(L_sm > 0.0)) throw InvalidInput("L_sm must be positive");
  if (!(lambda_min > Lambda_star))
    throw NotAboveThreshold("lambda_min must exceed Lambda_star");
  const double gap = lambda_min - Lambda_star;
  return gap * gap / L_sm;
}

Trajectory gd_run(const ModelSpec& model, const Dataset& data, std::span<const double> theta0,
                  double eta, std::size_t T) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw InvalidInput("step size must be positive");
  if (theta0.size() != model.dim()) throw InvalidInput("initial point has wrong dimension");
  data.validate();

  Trajectory traj;
  traj.eta = eta;
  traj.model = model.kind;
  traj.L_sm = smoothness_bound(model, data);
  traj.step_size_warning = eta * traj.L_sm > 1.0 + 1e-12;

  Vector theta(theta0.begin(), theta0.end());
  for (std::size_t t = 0;; ++t) {
    const kernels::LossGrad lg = kernels::loss_and_gradient(model, theta, data);
    const double gn = norm(lg.grad);
    if (diverged(lg.loss) || !std::isfinite(gn))
      throw DivergedTrajectory("loss left the finite range at step " + std::to_string(t),
                               std::move(traj));
    traj.thetas.push_back(theta);
    traj.losses.push_back(lg.loss);
    traj.grad_norms.push_back(gn);
    if (t == T) break;
    axpy(-eta, lg.grad, theta);
  }
  return traj;
}

MinimizeResult gd_minimize(const ModelSpec& model, const Dataset& data,
                           std::span<const double> theta0, double grad_tol,
                           std::size_t max_iter) {
  if (theta0.size() != model.dim()) throw InvalidInput("initial point has wrong dimension");
  const double eta = 1.0 / smoothness_bound(model, data);
  MinimizeResult r;
  r.theta.assign(theta0.begin(), theta0.end());
  for (std::size_t it = 0;; ++it) {
    const kernels::LossGrad lg = kernels::loss_and_gradient(model, r.theta, data);
    r.loss = lg.loss;
    r.grad_norm = norm(lg.grad);
    r.iterations = it;
    if (diverged(r.loss)) {
      Trajectory partial;
      partial.eta = eta;
      partial.model = model.kind;
      throw DivergedTrajectory("loss left the finite range during minimisation", partial);
    }
    if (r.grad_norm <= grad_tol) {
      r.converged = true;
      return r;
    }
    if (it == max_iter) return r;
    axpy(-eta, lg.grad, r.theta);
  }
}

PLReport pl_slope_check(const Trajectory& traj, double L_star, double mu_min, double min_gap) {
  if (traj.losses.empty()) throw InsufficientTrajectory("empty trajectory");
  const double lowest = *std::min_element(traj.losses.begin(), traj.losses.end());
  if (L_star > lowest + 1e-9) throw InvalidInput("L_star lies above the recorded losses");
  double sxy = 0.0;
  double sxx = 0.0;
  std::size_t usable = 0;
  std::size_t ok = 0;
  for (std::size_t t = 0; t < traj.losses.size(); ++t) {
    const double gap = traj.losses[t] - L_star;
    if (!(gap > min_gap)) continue;
    const double half_sq = 0.5 * traj.grad_norms[t] * traj.grad_norms[t];
    sxy += gap * half_sq;
    sxx += gap * gap;
    ++usable;
    if (half_sq >= mu_min * gap) ++ok;
  }
  if (usable < 3) throw InsufficientTrajectory("fewer than 3 points with a positive loss gap");
  return {mu_min, sxy / sxx, static_cast<double>(ok) / static_cast<double>(usable), usable};
}

DescentCheck descent_lemma_check(const ModelSpec& model, const Dataset& data,
                                 std::span<const double> theta, std::span<const double> theta_ref) {
  const double gap = kernels::mean_loss(model, theta, data) - kernels::mean_loss(model, theta_ref, data);
  const Vector diff = subtract(theta, theta_ref);
  const double bound = 0.5 * smoothness_bound(model, data) * dot(diff, diff);
  return {gap, bound, gap <= bound + 1e-10};
}

GradDistanceCheck grad_distance_check(const ModelSpec& model, const Dataset& data,
                                      std::span<const double> theta,
                                      std::span<const double> theta_ref, double lambda_min,
                                      double Lambda_star) {
  if (!(lambda_min >= 2.0 * Lambda_star && lambda_min > Lambda_star))
    throw NotAboveThreshold("inputs are not in the above-threshold regime");
  const double lhs = norm(kernels::loss_and_gradient(model, theta, data).grad);
  const double rhs = (lambda_min - Lambda_star) * norm(subtract(theta, theta_ref));
  return {lhs, rhs, lhs >= rhs - 1e-10};
}

void write_trajectory_csv(std::ostream& os, const Trajectory& traj,
                          std::span<const double> theta_ref) {
  os << "t,loss,grad_norm,dist_to_ref\n";
  char buf[128];
  for (std::size_t t = 0; t < traj.losses.size(); ++t) {
    const double dist = norm(subtract(traj.thetas[t], theta_ref));
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", t, traj.losses[t],
                  traj.grad_norms[t], dist);
    os << buf;
  }
}

}  // namespace fisherlab

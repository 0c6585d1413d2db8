#include "fisherlab/floor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "fisherlab/errors.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

namespace {

// −2(τ − φ)·(2/B)Σᵢ(u*ᵀsᵢ)·∇_θ(u*ᵀsᵢ), or zero when φ ≥ τ.
Vector danskin_gradient(const ModelSpec& model, std::span<const double> theta,
                        const Dataset& batch, const Matrix& scores, const Spectrum& spec,
                        double tau) {
  const std::size_t d = model.dim();
  const double phi = spec.lambda_min();
  Vector g(d, 0.0);
  if (phi >= tau) return g;
  const Vector u = spec.min_eigenvector();
  const std::size_t B = batch.n();
  for (std::size_t i = 0; i < B; ++i) {
    const double us = dot(u, scores.row(i));
    const Vector jvp = score_dir_jvp(model, theta, batch.sample(i), u);
    axpy(us, jvp, g);
  }
  const double scale = -2.0 * (tau - phi) * 2.0 / static_cast<double>(B);
  for (double& v : g) v *= scale;
  return g;
}

double L_dir_from(const ModelSpec& model, std::span<const double> theta, const Dataset& batch,
                  const Matrix& scores, const Spectrum& spec) {
  const Vector u = spec.min_eigenvector();
  double worst = 0.0;
  for (std::size_t i = 0; i < batch.n(); ++i) {
    const Vector jvp = score_dir_jvp(model, theta, batch.sample(i), u);
    worst = std::max(worst, norm(jvp) * norm(scores.row(i)));
  }
  return 2.0 * worst / static_cast<double>(batch.n());
}

std::vector<std::size_t> draw_batch(Rng& rng, std::size_t n, std::size_t B) {
  std::vector<std::size_t> idx(B);
  for (std::size_t& i : idx) i = rng.index(n);
  return idx;
}

// Gram–Schmidt that replaces collapsed columns with pseudo-random ones.
Matrix orthonormalize_with_reseed(Matrix y) {
  const std::size_t d = y.rows();
  const std::size_t K = y.cols();
  double scale = 0.0;
  for (std::size_t j = 0; j < K; ++j) scale = std::max(scale, norm(y.column(j)));
  const double tol = 1e-12 * scale;
  Rng rng(0x6d6f6e69746f72ULL);
  for (std::size_t j = 0; j < K; ++j) {
    Vector v = y.column(j);
    for (int attempt = 0;; ++attempt) {
      for (int pass = 0; pass < 2; ++pass)
        for (std::size_t k = 0; k < j; ++k) {
          const Vector qk = y.column(k);
          axpy(-dot(qk, v), qk, v);
        }
      const double nv = norm(v);
      if (nv > tol && nv > 0.0) {
        for (double& x : v) x /= nv;
        break;
      }
      if (attempt > 100) throw InvalidSubspace("could not complete an orthonormal basis");
      v.assign(d, 0.0);
      rng.fill_normal(v);
    }
    y.set_column(j, v);
  }
  return y;
}

}  // namespace

void FloorConfig::validate() const {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  if (!(beta >= 0.0)) throw InvalidInput("beta must be non-negative");
  if (!(L_dir >= 0.0)) throw InvalidInput("L_dir must be non-negative");
  if (batch_size == 0) throw InvalidInput("batch size must be at least 1");
  if (!(eta > 0.0)) throw InvalidInput("step size must be positive");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (!(C > 0.0)) throw InvalidInput("C must be positive");
}

FloorPenalty rayleigh_floor_penalty(const FisherEstimate& gamma_hat, double tau) {
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  const Spectrum s = eig_sym(gamma_hat.matrix);
  const double phi = s.lambda_min();
  const double gap = std::max(0.0, tau - phi);
  return {gap * gap, phi, s.min_eigenvector()};
}

Vector floor_gradient(const ModelSpec& model, std::span<const double> theta, const Dataset& batch,
                      double tau) {
  if (batch.n() == 0) throw InvalidInput("empty batch");
  if (!(tau > 0.0)) throw InvalidInput("tau must be positive");
  const Matrix scores = kernels::score_matrix(model, theta, batch);
  const Spectrum spec = eig_sym(kernels::outer_product_mean(scores));
  return danskin_gradient(model, theta, batch, scores, spec, tau);
}

double estimate_L_dir(const ModelSpec& model, std::span<const double> theta, const Dataset& batch) {
  if (batch.n() == 0) throw InvalidInput("empty batch");
  const Matrix scores = kernels::score_matrix(model, theta, batch);
  return L_dir_from(model, theta, batch, scores, eig_sym(kernels::outer_product_mean(scores)));
}

FloorRun train_with_floor(const ModelSpec& model, const Dataset& data,
                          std::span<const double> theta0, const FloorConfig& config,
                          bool enable_floor, std::uint64_t seed, bool keep_batch_fishers) {
  config.validate();
  data.validate();
  if (theta0.size() != model.dim()) throw InvalidInput("initial point has wrong dimension");
  const bool floor_on = enable_floor && config.beta > 0.0;

  FloorRun run;
  run.L_dir = config.L_dir;
  Trajectory& traj = run.trajectory;
  traj.eta = config.eta;
  traj.model = model.kind;
  traj.L_sm = smoothness_bound(model, data);
  traj.step_size_warning = config.eta * traj.L_sm > 1.0 + 1e-12;

  Rng rng(seed);
  Vector theta(theta0.begin(), theta0.end());
  for (std::size_t t = 0;; ++t) {
    const kernels::LossGrad full = kernels::loss_and_gradient(model, theta, data);
    const double gn = norm(full.grad);
    if (!std::isfinite(full.loss) || full.loss > 1e12 || !std::isfinite(gn))
      throw DivergedTrajectory("loss left the finite range at step " + std::to_string(t),
                               std::move(traj));
    traj.thetas.push_back(theta);
    traj.losses.push_back(full.loss);
    traj.grad_norms.push_back(gn);
    if (t == config.steps) break;

    const auto idx = draw_batch(rng, data.n(), config.batch_size);
    const Dataset batch = select_rows(data, idx);
    const Matrix scores = kernels::score_matrix(model, theta, batch);
    const SymMatrix gamma_b = kernels::outer_product_mean(scores);
    const Spectrum spec = eig_sym(gamma_b);
    run.lambda_min_trace.push_back(spec.lambda_min());
    if (keep_batch_fishers) run.batch_fishers.push_back(gamma_b);

    Vector step(model.dim(), 0.0);
    const double invB = 1.0 / static_cast<double>(batch.n());
    for (std::size_t i = 0; i < batch.n(); ++i) axpy(invB, scores.row(i), step);
    if (floor_on) {
      if (run.L_dir == 0.0) run.L_dir = L_dir_from(model, theta, batch, scores, spec);
      axpy(config.beta, danskin_gradient(model, theta, batch, scores, spec, config.tau), step);
    }
    axpy(-config.eta, step, theta);
  }
  return run;
}

FloorCertificate certified_floor_bound(const CertificateInputs& in) {
  if (!(in.tau >= 0.0 && in.eps_opt >= 0.0 && in.beta >= 0.0 && in.L_dir >= 0.0 &&
        in.eps_stat >= 0.0 && in.eps_mini >= 0.0))
    throw InvalidInput("certificate inputs must be non-negative");
  if (!(in.beta * in.L_dir > 0.0)) throw InvalidInput("beta * L_dir must be positive");
  FloorCertificate c;
  c.inputs = in;
  c.bound = in.tau - in.eps_opt / (2.0 * in.beta * in.L_dir) - in.eps_stat - in.eps_mini;
  return c;
}

FloorCertificate finite_k_floor_bound(const CertificateInputs& in, double Delta_B,
                                      double sin2_theta) {
  if (!(Delta_B >= 0.0)) throw InvalidInput("Delta_B must be non-negative");
  if (!(sin2_theta >= 0.0 && sin2_theta <= 1.0)) throw InvalidInput("sin2_theta must lie in [0, 1]");
  FloorCertificate c = certified_floor_bound(in);
  c.Delta_B = Delta_B;
  c.sin2_theta = sin2_theta;
  c.bound = in.tau - in.eps_opt / (2.0 * in.beta * in.L_dir) - Delta_B * sin2_theta -
            in.eps_stat - in.eps_mini;
  return c;
}

MeasuredCertificate measure_certificate(const ModelSpec& model, const Dataset& data,
                                        std::span<const double> theta, const FloorConfig& config,
                                        double L_dir, std::uint64_t seed) {
  config.validate();
  const kernels::LossGrad full = kernels::loss_and_gradient(model, theta, data);
  const Matrix scores = kernels::score_matrix(model, theta, data);
  const SymMatrix gamma = kernels::outer_product_mean(scores);
  const Spectrum spec = eig_sym(gamma);

  Vector total = full.grad;
  axpy(config.beta, danskin_gradient(model, theta, data, scores, spec, config.tau), total);

  const ScoreSet ss{scores, Vector(theta.begin(), theta.end())};
  const SigmaEff se = sigma_eff_estimate(ss);
  const double eps_stat =
      se.degenerate_scores ? 0.0
                           : fluctuation_radius(data.n(), model.dim(), config.delta, se.value, config.C);

  Rng rng(seed);
  const Dataset batch = select_rows(data, draw_batch(rng, data.n(), config.batch_size));
  const SymMatrix gamma_b = kernels::outer_product_mean(kernels::score_matrix(model, theta, batch));

  MeasuredCertificate m;
  m.eps_task = norm(full.grad);
  m.lambda_min_full = spec.lambda_min();
  m.lambda_min_batch = lambda_min(gamma_b);
  m.certificate = certified_floor_bound(
      {config.tau, norm(total), config.beta, L_dir, eps_stat, opnorm(gamma_b - gamma)});
  return m;
}

MonitorState monitor_init(std::size_t d, std::size_t K, std::uint64_t seed) {
  if (K == 0 || K > d) throw InvalidSubspace("monitor rank must lie in [1, d]");
  Rng rng(seed);
  Matrix m(d, K);
  rng.fill_normal(m.data());
  return monitor_init(Subspace::orthonormalize(m));
}

MonitorState monitor_init(Subspace U) {
  MonitorState s;
  s.U = std::move(U);
  return s;
}

MonitorState monitor_update(MonitorState state, const SymMatrix& gamma_hat, std::size_t iters) {
  gamma_hat.validate();
  const std::size_t d = gamma_hat.dim();
  if (state.U.ambient_dim() != d) throw InvalidSubspace("monitor dimension differs from matrix");
  const double c = gershgorin_upper(gamma_hat);
  Matrix u = state.U.basis();
  for (std::size_t it = 0; it < iters; ++it) {
    Matrix y = gamma_hat.matrix() * u;
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < u.cols(); ++j) y(i, j) = c * u(i, j) - y(i, j);
    u = orthonormalize_with_reseed(std::move(y));
  }
  // Rayleigh–Ritz: rotate within span(U) onto the eigenvectors of UᵀΓ̂U.
  const SymMatrix h = congruence(gamma_hat, u);
  const Spectrum hs = eig_sym(h);
  u = orthonormalize_with_reseed(u * hs.eigenvectors);
  state.U = Subspace::from_basis(std::move(u));
  state.phi_K = hs.lambda_min();

  const Spectrum full = eig_sym(gamma_hat);
  MonitorRecord rec;
  rec.phi_K = state.phi_K;
  rec.lambda_min = full.lambda_min();
  rec.Delta_B = full.lambda_max() - full.lambda_min();
  rec.sin2_theta = sin2_principal_angle(state.U, min_eigenspace(full));
  rec.penalty = rec.Delta_B * rec.sin2_theta;
  rec.bound = rec.lambda_min + rec.penalty;
  state.history.push_back(rec);
  return state;
}

MonitorState monitor_update(MonitorState state, const FisherEstimate& gamma_hat, std::size_t iters) {
  return monitor_update(std::move(state), gamma_hat.matrix, iters);
}

AnglePenalty angle_penalty(const SymMatrix& gamma_hat, const Subspace& U) {
  const Spectrum s = eig_sym(gamma_hat);
  if (U.ambient_dim() != s.dim()) throw InvalidSubspace("subspace dimension differs from matrix");
  AnglePenalty a;
  a.Delta_B = s.lambda_max() - s.lambda_min();
  a.sin2_theta = sin2_principal_angle(U, min_eigenspace(s));
  a.penalty = a.Delta_B * a.sin2_theta;
  return a;
}

AnglePenalty angle_penalty(const FisherEstimate& gamma_hat, const Subspace& U) {
  return angle_penalty(gamma_hat.matrix, U);
}

void write_monitor_csv(std::ostream& os, const MonitorState& state) {
  os << "step,phi_K,lambda_min,Delta_B,sin2_theta,penalty,bound\n";
  char buf[256];
  for (std::size_t t = 0; t < state.history.size(); ++t) {
    const MonitorRecord& r = state.history[t];
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", t, r.phi_K,
                  r.lambda_min, r.Delta_B, r.sin2_theta, r.penalty, r.bound);
    os << buf;
  }
}

}  // namespace fisherlab

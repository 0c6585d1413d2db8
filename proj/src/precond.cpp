#include "fisherlab/precond.hpp"

#include <cmath>

#include "fisherlab/errors.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

namespace {

constexpr double kSlack = 1e-9;

SymMatrix inverse_sqrt(const SymMatrix& a, const char* what) {
  const Spectrum s = eig_sym(a);
  if (!(s.lambda_min() > 1e-10)) throw SingularCovariance(std::string(what) + " is not positive definite");
  return spectral_function(s, [](double l) { return 1.0 / std::sqrt(l); });
}

}  // namespace

Preconditioner Preconditioner::from_matrix(Matrix T) {
  if (T.rows() != T.cols() || T.rows() == 0) throw InvalidMatrix("preconditioner must be square");
  if (!all_finite(T.data())) throw InvalidMatrix("non-finite preconditioner entry");
  const Spectrum s = eig_sym(SymMatrix::symmetrize(transpose_times(T, T)));
  const double smax = std::sqrt(std::max(0.0, s.lambda_max()));
  const double smin = std::sqrt(std::max(0.0, s.lambda_min()));
  if (!(smin > 1e-12 * smax)) throw SingularCovariance("preconditioner is singular");
  return {std::move(T), smin, smax, smax / smin};
}

Preconditioner whiten_transform(const SymMatrix& sigma_hat) {
  const Spectrum s = eig_sym(sigma_hat);
  if (!(s.lambda_min() > 1e-10)) throw SingularCovariance("covariance is (nearly) singular");
  Preconditioner p;
  p.T = spectral_function(s, [](double l) { return 1.0 / std::sqrt(l); }).matrix();
  p.sigma_max = 1.0 / std::sqrt(s.lambda_min());
  p.sigma_min = 1.0 / std::sqrt(s.lambda_max());
  p.kappa = p.sigma_max / p.sigma_min;
  return p;
}

SymMatrix precondition_fisher(const SymMatrix& gamma, const Preconditioner& T) {
  if (T.T.rows() != gamma.dim()) throw InvalidMatrix("dimension mismatch");
  return congruence(gamma, T.T);
}

SandwichCheck sandwich_check_general(const SymMatrix& gamma, const Preconditioner& T) {
  const Spectrum g = eig_sym(gamma);
  SandwichCheck c;
  c.lower = T.sigma_min * T.sigma_min * g.lambda_min();
  c.upper = T.sigma_max * T.sigma_max * g.lambda_max();
  c.value = lambda_min(precondition_fisher(gamma, T));
  c.ok = c.lower - kSlack <= c.value && c.value <= c.upper + kSlack;
  return c;
}

SandwichCheck sandwich_check_kappa(const SymMatrix& gamma, const Preconditioner& T) {
  const Spectrum g = eig_sym(gamma);
  const Preconditioner scaled_t = Preconditioner::from_matrix(T.T * (1.0 / T.sigma_max));
  SandwichCheck c;
  c.lower = g.lambda_min() / (T.kappa * T.kappa);
  c.upper = g.lambda_max();
  c.value = lambda_min(precondition_fisher(gamma, scaled_t));
  c.ok = c.lower - kSlack <= c.value && c.value <= c.upper + kSlack;
  return c;
}

SandwichCheck sandwich_check_whitening(const SymMatrix& gamma, const SymMatrix& sigma,
                                       const SymMatrix& sigma_hat, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidInput("alpha must lie in (0, 1)");
  if (gamma.dim() != sigma.dim() || sigma.dim() != sigma_hat.dim())
    throw InvalidMatrix("dimension mismatch");
  const double low_gap = lambda_min(sigma_hat - sigma * (1.0 - alpha));
  if (low_gap < -kSlack) throw PreconditionFailed("(1 - alpha) Sigma <= Sigma_hat fails", low_gap);
  const double high_gap = lambda_min(sigma * (1.0 + alpha) - sigma_hat);
  if (high_gap < -kSlack) throw PreconditionFailed("Sigma_hat <= (1 + alpha) Sigma fails", high_gap);

  const SymMatrix r = inverse_sqrt(sigma, "Sigma");
  const SymMatrix a = congruence(gamma, r.matrix());
  const SymMatrix s = inverse_sqrt(congruence(sigma_hat, r.matrix()), "whitened Sigma_hat");
  const double la = lambda_min(a);
  SandwichCheck c;
  c.lower = la / (1.0 + alpha);
  c.upper = la / (1.0 - alpha);
  c.value = lambda_min(congruence(a, s.matrix()));
  c.ok = c.lower - kSlack <= c.value && c.value <= c.upper + kSlack;
  return c;
}

}  // namespace fisherlab

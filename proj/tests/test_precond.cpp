#include <doctest.h>

#include <cmath>

#include "fisherlab/errors.hpp"
#include "fisherlab/precond.hpp"
#include "fisherlab/spectral.hpp"
#include "oracles.hpp"

using namespace fisherlab;

namespace {

SymMatrix sqrt_psd(const SymMatrix& a) {
  return spectral_function(eig_sym(a), [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

// Σ̂ = Σ^{1/2}(I + E)Σ^{1/2} with ‖E‖_op ≤ 0.9α, so (1−α)Σ ⪯ Σ̂ ⪯ (1+α)Σ.
SymMatrix perturbed(const SymMatrix& sigma, double alpha, Rng& rng) {
  const std::size_t d = sigma.dim();
  SymMatrix e = oracle::random_sym(d, rng);
  const double nrm = opnorm(e);
  if (nrm > 0) e *= 0.9 * alpha * rng.uniform() / nrm;
  const SymMatrix root = sqrt_psd(sigma);
  return congruence(SymMatrix::identity(d) + e, root.matrix());
}

}  // namespace

TEST_CASE("whitening transform") {
  CHECK(whiten_transform(SymMatrix::identity(3)).T == Matrix::identity(3));
  const Preconditioner p = whiten_transform(SymMatrix::diagonal(Vector{4.0, 1.0}));
  CHECK(p.T(0, 0) == doctest::Approx(0.5));
  CHECK(p.T(1, 1) == doctest::Approx(1.0));
  CHECK(p.T(0, 1) == doctest::Approx(0.0));
  CHECK(p.kappa == doctest::Approx(2.0));

  Rng rng(3);
  for (int k = 0; k < 20; ++k) {
    const SymMatrix s = oracle::random_spd(1 + rng.index(8), rng);
    const SymMatrix w = precondition_fisher(s, whiten_transform(s));
    CHECK(max_abs((w - SymMatrix::identity(s.dim())).matrix()) <= 1e-8);
  }
  CHECK_THROWS_AS(whiten_transform(SymMatrix::diagonal(Vector{1.0, 0.0})), SingularCovariance);
  CHECK_THROWS_AS(Preconditioner::from_matrix(Matrix::from_rows({{1, 2}, {2, 4}})), SingularCovariance);
}

TEST_CASE("preconditioned Fisher") {
  Rng rng(4);
  const SymMatrix g = oracle::random_spd(3, rng);
  CHECK(precondition_fisher(g, Preconditioner::from_matrix(Matrix::identity(3))) == g);
  const Preconditioner t = Preconditioner::from_matrix(Matrix::diagonal(Vector{2.0, 1.0}));
  CHECK(precondition_fisher(SymMatrix::identity(2), t) == SymMatrix::diagonal(Vector{4.0, 1.0}));
}

TEST_CASE("general and condition-number sandwiches") {
  const Preconditioner t = Preconditioner::from_matrix(Matrix::diagonal(Vector{2.0, 1.0}));
  const SandwichCheck c = sandwich_check_general(SymMatrix::identity(2), t);
  CHECK(c.lower == doctest::Approx(1.0));
  CHECK(c.value == doctest::Approx(1.0));
  CHECK(c.upper == doctest::Approx(4.0));
  CHECK(c.ok);

  const double a = std::cos(0.7), b = std::sin(0.7);
  const Preconditioner rot = Preconditioner::from_matrix(Matrix::from_rows({{a, -b}, {b, a}}));
  const SandwichCheck iso = sandwich_check_general(SymMatrix::identity(2) * 2.5, rot);
  CHECK(std::abs(iso.lower - iso.value) <= 1e-9);

  Rng rng(5);
  int general = 0, kappa = 0, cases = 0;
  while (cases < 200) {
    const std::size_t d = 1 + rng.index(8);
    Matrix m(d, d);
    for (double& v : m.data()) v = rng.normal();
    Preconditioner p;
    try {
      p = Preconditioner::from_matrix(m);
    } catch (const SingularCovariance&) {
      continue;
    }
    SymMatrix gamma = oracle::random_spd(d, rng, 0.0);
    if (cases % 4 == 0) gamma = SymMatrix::identity(d) * 0.3;
    general += !sandwich_check_general(gamma, p).ok;
    kappa += !sandwich_check_kappa(gamma, p).ok;
    ++cases;
  }
  CHECK(general == 0);
  CHECK(kappa == 0);
}

TEST_CASE("robust whitening sandwich") {
  Rng rng(6);
  const SymMatrix sigma = oracle::random_spd(4, rng);
  const SymMatrix gamma = oracle::random_spd(4, rng);

  const SandwichCheck same = sandwich_check_whitening(gamma, sigma, sigma, 0.3);
  const Preconditioner w = whiten_transform(sigma);
  CHECK(same.value == doctest::Approx(lambda_min(precondition_fisher(gamma, w))).epsilon(1e-9));
  CHECK(same.ok);

  const double alpha = 0.1;
  const SandwichCheck edge = sandwich_check_whitening(gamma, sigma, sigma * (1 + alpha), alpha);
  CHECK(edge.value == doctest::Approx(edge.lower).epsilon(1e-9));
  CHECK(edge.ok);

  int violations = 0;
  for (int k = 0; k < 100; ++k) {
    const std::size_t d = 2 + rng.index(6);
    const SymMatrix s = oracle::random_spd(d, rng);
    const SymMatrix g = oracle::random_spd(d, rng, 0.0);
    const SymMatrix sh = perturbed(s, alpha, rng);
    const SandwichCheck c = sandwich_check_whitening(g, s, sh, alpha);
    violations += !c.ok;
    const double direct = lambda_min(precondition_fisher(g, whiten_transform(sh)));
    CHECK(c.value == doctest::Approx(direct).epsilon(1e-7));
  }
  CHECK(violations == 0);

  try {
    sandwich_check_whitening(gamma, sigma, sigma * 2.0, alpha);
    FAIL("expected PreconditionFailed");
  } catch (const PreconditionFailed& e) {
    CHECK(e.witness() < 0.0);
  }
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fisherlab/errors.hpp"
#include "fisherlab/spectral.hpp"
#include "oracles.hpp"

using namespace fisherlab;

namespace {
const double kPi = std::numbers::pi;
Subspace span1(Vector v) { return Subspace::span_of(std::vector<Vector>{std::move(v)}); }
}  // namespace

TEST_CASE("eig_sym on small closed-form cases") {
  const Spectrum i3 = eig_sym(SymMatrix::identity(3));
  for (double l : i3.eigenvalues) CHECK(l == doctest::Approx(1.0).epsilon(1e-14));

  const Spectrum d = eig_sym(SymMatrix::diagonal(Vector{1.0, 3.0}));
  CHECK(d.eigenvalues[0] == doctest::Approx(3.0));
  CHECK(d.eigenvalues[1] == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.eigenvectors(0, 1)) == doctest::Approx(1.0));

  const Spectrum s = eig_sym(SymMatrix::from_rows({{2, 1}, {1, 2}}));
  CHECK(s.eigenvalues[0] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(s.eigenvalues[1] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eig_sym agrees with the characteristic polynomial") {
  Rng rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rep % 4;
    const SymMatrix a = oracle::random_sym(d, rng, 2.0);
    const Spectrum s = eig_sym(a);
    const std::vector<double> ref = oracle::eigenvalues(a);
    REQUIRE(ref.size() == d);
    for (std::size_t k = 0; k < d; ++k) CHECK(std::abs(s.eigenvalues[k] - ref[k]) <= 1e-8);
  }
}

TEST_CASE("eig_sym output satisfies the spectrum invariants") {
  Rng rng(12);
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 2 + rep % 16;
    const SymMatrix a = oracle::random_sym(d, rng);
    const Spectrum s = eig_sym(a);
    const Matrix& V = s.eigenvectors;
    const Matrix vtv = transpose_times(V, V);
    CHECK(max_abs(vtv - Matrix::identity(d)) <= 1e-8);
    const Matrix rec = V * Matrix::diagonal(s.eigenvalues) * V.transposed();
    CHECK(max_abs(rec - a.matrix()) <= 1e-8 * (1.0 + max_abs(a.matrix())));
    CHECK(std::is_sorted(s.eigenvalues.rbegin(), s.eigenvalues.rend()));
  }
}

TEST_CASE("SymMatrix rejects invalid input") {
  CHECK_THROWS_AS(SymMatrix::from_rows({{1, 2}, {0, 1}}), InvalidMatrix);
  CHECK_THROWS_AS(SymMatrix::from_rows({{1, NAN}, {NAN, 1}}), InvalidMatrix);
}

TEST_CASE("lambda_min, opnorm and lambda_min_power") {
  CHECK(lambda_min(SymMatrix::identity(3)) == doctest::Approx(1.0));
  CHECK(lambda_min(SymMatrix::diagonal(Vector{0.5, 0.1})) == doctest::Approx(0.1));
  CHECK(lambda_min(SymMatrix::from_rows({{2, 1}, {1, 2}})) == doctest::Approx(1.0));
  CHECK(opnorm(SymMatrix::identity(3)) == doctest::Approx(1.0));
  CHECK(opnorm(SymMatrix(3)) == 0.0);
  CHECK(opnorm(SymMatrix::diagonal(Vector{-3.0, 2.0})) == doctest::Approx(3.0));

  Rng rng(13);
  for (int rep = 0; rep < 20; ++rep) {
    const SymMatrix a = oracle::random_spd(5, rng);
    const auto p = lambda_min_power(a, 1e-12, 200000);
    REQUIRE(p.has_value());
    CHECK(*p == doctest::Approx(lambda_min(a)).epsilon(1e-6));
  }
}

TEST_CASE("rayleigh") {
  const SymMatrix a = SymMatrix::diagonal(Vector{1.0, 3.0});
  CHECK(rayleigh(a, Vector{1.0, 0.0}) == doctest::Approx(1.0));
  CHECK(rayleigh(SymMatrix::identity(2), normalized(Vector{0.3, -0.7})) == doctest::Approx(1.0));
  CHECK(rayleigh(a, Vector{std::cos(kPi / 6), std::sin(kPi / 6)}) == doctest::Approx(1.5));
  CHECK_THROWS_AS(rayleigh(a, Vector{1.0, 1.0}), InvalidDirection);
}

TEST_CASE("principal angles") {
  CHECK(principal_angle(span1({1, 0}), span1({1, 0})) == doctest::Approx(0.0));
  CHECK(principal_angle(span1({1, 0}), span1({0, 1})) == doctest::Approx(kPi / 2));
  CHECK(principal_angle(span1({1, 0}), span1({std::cos(kPi / 6), std::sin(kPi / 6)})) ==
        doctest::Approx(0.5236).epsilon(1e-4));
  CHECK(sin2_principal_angle(span1({1, 0}), span1({std::cos(kPi / 6), std::sin(kPi / 6)})) ==
        doctest::Approx(0.25));
  CHECK_THROWS_AS(Subspace::from_basis(Matrix::from_rows({{1, 1}, {0, 1}})), InvalidSubspace);
}

TEST_CASE("Weyl inequality sweep") {
  Rng rng(14);
  int violations = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const std::size_t d = 1 + rep % 8;
    const SymMatrix a = oracle::random_sym(d, rng);
    const SymMatrix e = oracle::random_sym(d, rng, 0.1);
    const Spectrum sa = eig_sym(a), sb = eig_sym(a + e);
    const double bound = opnorm(e);
    for (std::size_t k = 0; k < d; ++k)
      violations += std::abs(sa.eigenvalues[k] - sb.eigenvalues[k]) > bound + 1e-12 ? 1 : 0;
  }
  CHECK(violations == 0);
}

TEST_CASE("psd_project and spectral_function") {
  const SymMatrix a = SymMatrix::from_rows({{1, 2}, {2, 1}});  // eigenvalues 3, −1
  const SymMatrix p = psd_project(a);
  CHECK(lambda_min(p) >= -1e-14);
  CHECK(p(0, 0) == doctest::Approx(1.5));
  CHECK(p(0, 1) == doctest::Approx(1.5));
  const SymMatrix spd = SymMatrix::diagonal(Vector{2.0, 0.5});
  CHECK(psd_project(spd) == spd);
  const SymMatrix sq = spectral_function(eig_sym(SymMatrix::diagonal(Vector{4.0, 9.0})),
                                         [](double l) { return std::sqrt(l); });
  CHECK(sq(0, 0) == doctest::Approx(2.0));
  CHECK(sq(1, 1) == doctest::Approx(3.0));
  CHECK(gershgorin_upper(a) >= 3.0);
}

TEST_CASE("min_eigenspace captures repeated eigenvalues") {
  const Spectrum s = eig_sym(SymMatrix::diagonal(Vector{2.0, 1.0, 1.0}));
  const Subspace u = min_eigenspace(s);
  CHECK(u.rank() == 2);
  CHECK(sin2_principal_angle(u, Subspace::span_of(std::vector<Vector>{{0, 1, 0}, {0, 0, 1}})) ==
        doctest::Approx(0.0));
}

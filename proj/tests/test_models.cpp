#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "fisherlab/errors.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/models.hpp"
#include "fisherlab/spectral.hpp"
#include "oracles.hpp"

using namespace fisherlab;

namespace {

const double kLog2Pi = std::log(2.0 * std::numbers::pi);

ModelSpec random_model(ModelKind kind, std::size_t d, Rng& rng) {
  Vector t(d);
  rng.fill_normal(t, 0.5);
  switch (kind) {
    case ModelKind::GaussianLocation: return ModelSpec::gaussian_location(t);
    case ModelKind::SymmetricGMM: return ModelSpec::symmetric_gmm(t);
    case ModelKind::Logistic: return ModelSpec::logistic(t);
  }
  return {};
}

const ModelKind kKinds[] = {ModelKind::GaussianLocation, ModelKind::SymmetricGMM,
                            ModelKind::Logistic};

}  // namespace

TEST_CASE("sampling is deterministic per seed") {
  const ModelSpec m = ModelSpec::gaussian_location(Vector{0.0, 0.0});
  const Dataset a = sample(m, 3, 7);
  const Dataset b = sample(m, 3, 7);
  CHECK(a.n() == 3);
  CHECK(a.dim() == 2);
  CHECK(all_finite(a.x.data()));
  CHECK(a.x == b.x);
  CHECK_FALSE(sample(m, 3, 8).x == a.x);
}

TEST_CASE("sample moments") {
  const Dataset g = sample(ModelSpec::symmetric_gmm(Vector(3, 0.0)), 100000, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.n(); ++i) s += g.x(i, j);
    CHECK(std::abs(s / g.n()) <= 0.02);
  }
  const Dataset l = sample(ModelSpec::logistic(Vector(4, 0.0)), 100000, 2);
  double ybar = 0.0;
  for (double y : l.y) ybar += y;
  ybar /= static_cast<double>(l.n());
  CHECK(ybar >= 0.494);
  CHECK(ybar <= 0.506);
}

TEST_CASE("loss at special points") {
  const Vector x{0.3, -1.2, 2.0};
  const ModelSpec g = ModelSpec::gaussian_location(x);
  CHECK(loss(g, x, {x, 0.0}) == doctest::Approx(1.5 * kLog2Pi));
  const ModelSpec l = ModelSpec::logistic(Vector(3, 0.0));
  CHECK(loss(l, Vector(3, 0.0), {x, 1.0}) == doctest::Approx(std::log(2.0)));
  CHECK(loss(l, Vector(3, 0.0), {x, 0.0}) == doctest::Approx(std::log(2.0)));
  const ModelSpec m = ModelSpec::symmetric_gmm(Vector(3, 0.0));
  CHECK(loss(m, Vector(3, 0.0), {Vector(3, 0.0), 0.0}) == doctest::Approx(1.5 * kLog2Pi));
}

TEST_CASE("GMM loss is the negative log of the mixture density") {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Vector mu{rng.normal(), rng.normal()};
    const Vector x{2 * rng.normal(), 2 * rng.normal()};
    const ModelSpec m = ModelSpec::symmetric_gmm(mu);
    const double a = std::exp(-0.5 * norm(subtract(x, mu)) * norm(subtract(x, mu)));
    const double b = std::exp(-0.5 * norm(add(x, mu)) * norm(add(x, mu)));
    const double density = 0.5 * (a + b) / (2.0 * std::numbers::pi);
    CHECK(loss(m, mu, {x, 0.0}) == doctest::Approx(-std::log(density)).epsilon(1e-12));
  }
}

TEST_CASE("score special cases") {
  const Vector x{0.4, -0.9};
  for (double v : score(ModelSpec::symmetric_gmm(Vector(2, 0.0)), Vector(2, 0.0), {x, 0.0}))
    CHECK(v == 0.0);
  const Vector s = score(ModelSpec::gaussian_location(Vector(2, 0.0)), Vector{1.0, 0.0},
                         {Vector{0.0, 0.0}, 0.0});
  CHECK(s[0] == doctest::Approx(1.0));
  CHECK(s[1] == doctest::Approx(0.0));
  const Vector sl = score(ModelSpec::logistic(Vector(2, 0.0)), Vector(2, 0.0), {x, 1.0});
  CHECK(sl[0] == doctest::Approx(-x[0] / 2));
  CHECK(sl[1] == doctest::Approx(-x[1] / 2));
}

TEST_CASE("scores match finite differences of the loss") {
  Rng rng(4);
  int failures = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const ModelKind kind = kKinds[rep % 3];
    const std::size_t d = 1 + rep % 6;
    const ModelSpec m = random_model(kind, d, rng);
    const Dataset data = sample(m, 1, rng.index(1u << 30));
    const SampleView v = data.sample(0);
    Vector theta(d);
    rng.fill_normal(theta, 0.7);
    const Vector analytic = score(m, theta, v);
    const Vector fd = oracle::fd_gradient([&](const Vector& t) { return loss(m, t, v); }, theta);
    for (std::size_t j = 0; j < d; ++j) failures += oracle::rel_err(analytic[j], fd[j]) > 1e-4;
  }
  CHECK(failures == 0);
}

TEST_CASE("score_dir_jvp") {
  Rng rng(5);
  const Vector x{0.5, -1.0, 2.0};
  const Vector u = normalized(Vector{1.0, 2.0, -1.0});
  const Vector g = score_dir_jvp(ModelSpec::gaussian_location(Vector(3, 0.0)), x, {x, 0.0}, u);
  for (std::size_t j = 0; j < 3; ++j) CHECK(g[j] == doctest::Approx(u[j]));
  const Vector l = score_dir_jvp(ModelSpec::logistic(Vector(3, 0.0)), Vector(3, 0.0), {x, 1.0},
                                 Vector{1.0, 0.0, 0.0});
  for (std::size_t j = 0; j < 3; ++j) CHECK(l[j] == doctest::Approx(x[0] / 4 * x[j]));

  int failures = 0;
  for (int rep = 0; rep < 50; ++rep) {
    const std::size_t d = 1 + rep % 5;
    const ModelSpec m = random_model(kKinds[rep % 3], d, rng);
    const SampleView v = sample(m, 1, 100 + rep).sample(0);
    Vector theta(d), dir(d);
    rng.fill_normal(theta, 0.7);
    rng.fill_normal(dir);
    dir = normalized(dir);
    const Vector analytic = score_dir_jvp(m, theta, v, dir);
    const Vector fd =
        oracle::fd_gradient([&](const Vector& t) { return dot(dir, score(m, t, v)); }, theta);
    for (std::size_t j = 0; j < d; ++j) failures += oracle::rel_err(analytic[j], fd[j]) > 1e-4;
  }
  CHECK(failures == 0);
}

TEST_CASE("population Fisher closed forms") {
  const SymMatrix gi = population_fisher(ModelSpec::gaussian_location(Vector(3, 0.0)),
                                         Vector{1.0, 2.0, 3.0}, 1000, 1);
  CHECK(max_abs((gi - SymMatrix::identity(3)).matrix()) == 0.0);
  const SymMatrix lq = population_fisher(ModelSpec::logistic(Vector(3, 0.0)), Vector(3, 0.0), 1000, 1);
  CHECK(max_abs((lq - SymMatrix::identity(3) * 0.25).matrix()) <= 1e-15);
  const SymMatrix z = population_fisher(ModelSpec::symmetric_gmm(Vector(3, 0.0)), Vector(3, 0.0), 1000, 1);
  CHECK(max_abs(z.matrix()) == 0.0);
}

TEST_CASE("population Fisher by Monte Carlo matches a brute-force average") {
  const ModelSpec m = ModelSpec::logistic(Vector{0.6, -0.3});
  const SymMatrix mc = population_fisher(m, m.theta_star, 200000, 9);
  // Independent estimate: average of s sᵀ with y drawn, on a separate stream.
  const Dataset data = sample(m, 200000, 77);
  const SymMatrix brute = kernels::reference::outer_product_mean(
      kernels::reference::score_matrix(m, m.theta_star, data));
  CHECK(opnorm(mc - brute) <= 0.01);
}

TEST_CASE("KL divergences") {
  const ModelSpec g = ModelSpec::gaussian_location(Vector(2, 0.0));
  CHECK(kl(g, Vector{0.1, 0.0}, Vector{-0.1, 0.0}, 10, 1).value == doctest::Approx(0.02));
  for (ModelKind kind : kKinds) {
    Rng rng(6);
    const ModelSpec m = random_model(kind, 3, rng);
    const MonteCarloValue v = kl(m, m.theta_star, m.theta_star, 1000, 2);
    CHECK(v.value == 0.0);
    CHECK(v.std_err == 0.0);
  }
  // μ and −μ give the same mixture.
  const ModelSpec gmm = ModelSpec::symmetric_gmm(Vector{0.1, 0.0});
  CHECK(kl(gmm, Vector{0.1, 0.0}, Vector{-0.1, 0.0}, 20000, 3).value == doctest::Approx(0.0).epsilon(1e-14));
  CHECK(oracle::gmm_kl_1d(0.1, -0.1) == doctest::Approx(0.0).epsilon(1e-12));

  for (auto [a, b] : {std::pair{0.3, 0.5}, std::pair{0.0, 0.4}, std::pair{1.0, 0.7}}) {
    const ModelSpec m1 = ModelSpec::symmetric_gmm(Vector{a});
    const MonteCarloValue v = kl(m1, Vector{a}, Vector{b}, 400000, 4);
    const double ref = oracle::gmm_kl_1d(a, b);
    CHECK(std::abs(v.value - ref) <= 4.0 * v.std_err + 1e-6);
  }
}

TEST_CASE("logistic KL matches the Bernoulli expectation") {
  // Independent sample average of the Bernoulli KL over x ~ N(0, I).
  const ModelSpec m = ModelSpec::logistic(Vector{0.5, 0.0});
  const Vector t2{0.2, 0.3};
  const MonteCarloValue v = kl(m, m.theta_star, t2, 400000, 5);
  Rng rng(55);
  double s = 0.0;
  const int N = 400000;
  for (int i = 0; i < N; ++i) {
    const double x0 = rng.normal(), x1 = rng.normal();
    const double p = sigmoid(0.5 * x0), q = sigmoid(0.2 * x0 + 0.3 * x1);
    s += p * std::log(p / q) + (1 - p) * std::log((1 - p) / (1 - q));
  }
  CHECK(std::abs(v.value - s / N) <= 4.0 * v.std_err + 5e-4);
}

TEST_CASE("smoothness bound") {
  const Dataset gd = sample(ModelSpec::gaussian_location(Vector(3, 0.0)), 10, 1);
  CHECK(smoothness_bound(ModelSpec::gaussian_location(Vector(3, 0.0)), gd) == 1.0);
  Dataset ld;
  ld.kind = ModelKind::Logistic;
  ld.x = Matrix(5, 3);
  for (std::size_t i = 0; i < 5; ++i) ld.x(i, 0) = 1.0;
  ld.y = Vector{0, 1, 0, 1, 1};
  CHECK(smoothness_bound(ModelSpec::logistic(Vector(3, 0.0)), ld) == doctest::Approx(0.25));

  Rng rng(7);
  int violations = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const ModelKind kind = kKinds[rep % 3];
    const ModelSpec m = random_model(kind, 3, rng);
    const Dataset data = sample(m, 200, 1000 + rep);
    const double L = smoothness_bound(m, data);
    Vector theta(3), u(3);
    rng.fill_normal(theta, 0.5);
    theta = add(theta, m.theta_star);
    rng.fill_normal(u);
    u = normalized(u);
    const double curv = oracle::fd_curvature(
        [&](const Vector& t) { return kernels::reference::loss_and_gradient(m, t, data).loss; },
        theta, u);
    violations += curv > L * (1.0 + 1e-4) + 1e-6;
  }
  CHECK(violations == 0);
}

TEST_CASE("dataset CSV round trip") {
  for (ModelKind kind : kKinds) {
    Rng rng(8);
    const ModelSpec m = random_model(kind, 3, rng);
    const Dataset d = sample(m, 17, 4);
    std::stringstream ss;
    write_dataset_csv(ss, d);
    const Dataset back = read_dataset_csv(ss);
    CHECK(back.kind == d.kind);
    CHECK(back.x == d.x);
    CHECK(back.y == d.y);
  }
  std::istringstream bad("x0,x1\n1,2\n");
  CHECK_THROWS_AS(read_dataset_csv(bad), InvalidDataset);
}

TEST_CASE("model validation") {
  CHECK_THROWS_AS(ModelSpec::gaussian_location(Vector{}), InvalidInput);
  CHECK_THROWS_AS(ModelSpec::logistic(Vector{NAN}), InvalidInput);
  CHECK_THROWS_AS(model_kind_from_string("poisson"), InvalidInput);
  CHECK(model_kind_from_string("symmetric_gmm") == ModelKind::SymmetricGMM);
  CHECK_THROWS_AS(sample(ModelSpec::logistic(Vector{1.0}), 0, 1), InvalidInput);
}

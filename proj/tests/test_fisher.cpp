#include <doctest.h>

#include <cmath>

#include "fisherlab/errors.hpp"
#include "fisherlab/fisher.hpp"
#include "fisherlab/spectral.hpp"
#include "oracles.hpp"

using namespace fisherlab;

namespace {

ScoreSet from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  return {Matrix::from_rows(rows), {}};
}

// Logistic θ* = 0 scores with 10% of rows, in one contiguous block at a
// random offset, multiplied by 100.
ScoreSet contaminated(std::size_t n, std::size_t d, std::uint64_t seed) {
  const ModelSpec m = ModelSpec::logistic(Vector(d, 0.0));
  ScoreSet s = compute_scores(m, m.theta_star, sample(m, n, seed));
  Rng rng(mix_seed(seed, 99));
  const std::size_t k = n / 10;
  const std::size_t start = rng.index(n - k + 1);
  for (std::size_t i = start; i < start + k; ++i)
    for (double& v : s.scores.row(i)) v *= 100.0;
  return s;
}

}  // namespace

TEST_CASE("empirical Fisher") {
  const FisherEstimate e = empirical_fisher(from_rows({{1, 0}, {0, 1}}));
  CHECK(e.matrix == SymMatrix::diagonal(Vector{0.5, 0.5}));
  CHECK(e.n == 2);
  CHECK(max_abs(empirical_fisher(from_rows({{0, 0}, {0, 0}})).matrix.matrix()) == 0.0);
  CHECK_THROWS_AS(empirical_fisher(ScoreSet{}), InvalidInput);

  const ModelSpec g = ModelSpec::gaussian_location(Vector(4, 0.0));
  int hits = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ScoreSet s = compute_scores(g, g.theta_star, sample(g, 10000, seed));
    hits += opnorm(empirical_fisher(s).matrix - SymMatrix::identity(4)) <= 0.1;
  }
  CHECK(hits >= 95);
}

TEST_CASE("median-of-means Fisher") {
  const ModelSpec m = ModelSpec::logistic(Vector{0.3, -0.1, 0.2});
  const ScoreSet s = compute_scores(m, m.theta_star, sample(m, 101, 3));
  const FisherEstimate one = mom_fisher(s, 1);
  CHECK(one.matrix == empirical_fisher(s).matrix);
  CHECK(one.estimator == Estimator::MoM);
  CHECK_THROWS_AS(mom_fisher(s, 0), InvalidInput);
  CHECK_THROWS_AS(mom_fisher(s, 102), InvalidInput);

  // Five batches of two rows: four share the same rows, one is an outlier.
  const ScoreSet five = from_rows({{1, 2}, {0, 1}, {1, 2}, {0, 1}, {1, 2}, {0, 1}, {1, 2}, {0, 1},
                                   {50, -3}, {7, 9}});
  const SymMatrix common = empirical_fisher(from_rows({{1, 2}, {0, 1}})).matrix;
  CHECK(max_abs((mom_fisher(five, 5).matrix - common).matrix()) <= 1e-15);
  CHECK(mom_fisher(five, 5).batches == 5);
}

TEST_CASE("robust estimators beat the plain one under heavy-tailed contamination") {
  const SymMatrix target = SymMatrix::identity(4) * 0.25;
  int mom_wins = 0, catoni_wins = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ScoreSet s = contaminated(1100, 4, 1000 + seed);
    const double plain = opnorm(empirical_fisher(s).matrix - target);
    mom_wins += opnorm(mom_fisher(s, 11).matrix - target) < plain;
    catoni_wins += opnorm(catoni_fisher_auto(s, 0.05).matrix - target) < plain;
  }
  CHECK(mom_wins >= 90);
  CHECK(catoni_wins >= 85);
}

TEST_CASE("Catoni estimator fixed points") {
  const ScoreSet same = from_rows({{0.5, -2.0}, {0.5, -2.0}, {0.5, -2.0}});
  for (double scale : {0.01, 1.0, 100.0}) {
    const SymMatrix c = catoni_fisher(same, scale).matrix;
    CHECK(c(0, 0) == doctest::Approx(0.25).epsilon(1e-9));
    CHECK(c(0, 1) == doctest::Approx(-1.0).epsilon(1e-9));
    CHECK(c(1, 1) == doctest::Approx(4.0).epsilon(1e-9));
  }
  // Off-diagonal products ±1 average to zero under an odd influence.
  const SymMatrix odd = catoni_fisher(from_rows({{1, 1}, {1, -1}}), 0.7).matrix;
  CHECK(std::abs(odd(0, 1)) <= 1e-9);
  CHECK_THROWS_AS(catoni_fisher(same, 0.0), InvalidInput);
}

TEST_CASE("smoothed scores") {
  const ModelSpec g = ModelSpec::gaussian_location(Vector(3, 0.0));
  const Dataset data = sample(g, 200, 4);
  const ScoreSet plain = compute_scores(g, g.theta_star, data);
  CHECK(smoothed_scores(g, g.theta_star, data, 0.0, 16, 1).scores == plain.scores);

  const double sigma = 0.4;
  const std::size_t M = 64;
  const ScoreSet sm = smoothed_scores(g, g.theta_star, data, sigma, M, 2);
  double worst = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i)
    for (std::size_t j = 0; j < 3; ++j)
      worst = std::max(worst, std::abs(sm.scores(i, j) - plain.scores(i, j)));
  CHECK(worst <= 3.0 * sigma / std::sqrt(static_cast<double>(M)));

  const ModelSpec gmm = ModelSpec::symmetric_gmm(Vector{0.05, 0.0, 0.0, 0.0});
  int lifted = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Dataset d = sample(gmm, 500, 300 + seed);
    const double before = lambda_min(empirical_fisher(compute_scores(gmm, gmm.theta_star, d)).matrix);
    const FisherEstimate after = smoothed_fisher(gmm, gmm.theta_star, d, 0.5, 32, 700 + seed);
    CHECK(after.estimator == Estimator::Smoothed);
    lifted += lambda_min(after.matrix) > before;
  }
  CHECK(lifted >= 45);
}

TEST_CASE("fluctuation radius") {
  CHECK(fluctuation_radius(2, 1, std::exp(-1.0), 1.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const long double ref = 0.5L * std::sqrt((16.0L + std::log(20.0L)) / 400.0L);
  const double r = fluctuation_radius(400, 16, 0.05, 0.5, 1.0);
  CHECK(std::abs(r - static_cast<double>(ref)) <= 1e-15);
  CHECK(std::abs(r - 0.108963) <= 5e-6);
  CHECK(fluctuation_radius(800, 16, 0.05, 0.5, 1.0) / r == doctest::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-15));
  CHECK(fluctuation_radius(400, 17, 0.05, 0.5, 1.0) > r);
  CHECK(fluctuation_radius(400, 16, 0.01, 0.5, 1.0) > r);
  CHECK_THROWS_AS(fluctuation_radius(0, 1, 0.1, 1, 1), InvalidInput);
  CHECK_THROWS_AS(fluctuation_radius(1, 1, 1.0, 1, 1), InvalidInput);
  CHECK_THROWS_AS(fluctuation_radius(1, 1, 0.1, 0.0, 1), InvalidInput);
}

TEST_CASE("sigma_eff") {
  CHECK(sigma_eff_estimate(from_rows({{1, 0}, {1, 0}})).value == doctest::Approx(1.0));
  const SigmaEff z = sigma_eff_estimate(from_rows({{0, 0}, {0, 0}}));
  CHECK(z.value == 0.0);
  CHECK(z.degenerate_scores);
  const ModelSpec g = ModelSpec::gaussian_location(Vector(4, 0.0));
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const double v = sigma_eff_estimate(compute_scores(g, g.theta_star, sample(g, 10000, seed))).value;
    inside += v >= 0.95 && v <= 1.05;
  }
  CHECK(inside >= 45);
}

TEST_CASE("calibrate_C") {
  const ModelSpec g = ModelSpec::gaussian_location(Vector(8, 0.0));
  const std::vector<std::size_t> grid{100, 400};
  const CalibrationResult r = calibrate_C_detailed(g, grid, 0.05, 200, 17);
  CHECK(r.C <= 4.0);
  for (double c : r.coverage) CHECK(c >= 0.95);
  CalibrationOptions fine;
  fine.grid_step = 0.125;
  CHECK(calibrate_C_detailed(g, grid, 0.05, 200, 17, fine).C <= r.C);
  CHECK_THROWS_AS(calibrate_C(g, grid, 0.05, 10, 1), InvalidInput);
}

TEST_CASE("regime classification") {
  const ThresholdReport a = classify_regime(0.25, 0.10, 1.0);
  CHECK(a.regime == Regime::Above);
  REQUIRE(a.mu.has_value());
  CHECK(*a.mu == doctest::Approx(0.0225));
  const ThresholdReport b = classify_regime(0.04, 0.10, 1.0);
  CHECK(b.regime == Regime::Below);
  CHECK_FALSE(b.mu.has_value());
  CHECK(classify_regime(0.15, 0.10, 1.0).regime == Regime::Indeterminate);
  CHECK(classify_regime(0.20, 0.10, 1.0).regime == Regime::Above);
  CHECK(classify_regime(0.05, 0.10, 1.0).regime == Regime::Below);
  CHECK_THROWS_AS(classify_regime(-0.1, 0.1, 1.0), InvalidInput);
  CHECK_THROWS_AS(classify_regime(0.1, 0.0, 1.0), InvalidInput);
  CHECK(to_string(Regime::Indeterminate) == "indeterminate");
  CHECK(estimator_from_string("catoni") == Estimator::Catoni);
}

TEST_CASE("threshold report from data") {
  const ModelSpec g = ModelSpec::gaussian_location(Vector(2, 0.0));
  const ScoreSet s = compute_scores(g, g.theta_star, sample(g, 5000, 3));
  const ThresholdReport r = threshold_report(s, empirical_fisher(s), 0.05, 1.0, 1.0);
  CHECK(r.regime == Regime::Above);
  CHECK(r.inputs.n == 5000);
  CHECK(r.inputs.sigma_eff == doctest::Approx(sigma_eff_estimate(s).value));
  const ScoreSet zero = from_rows({{0, 0}, {0, 0}});
  CHECK_THROWS_AS(threshold_report(zero, empirical_fisher(zero), 0.05, 1.0, 1.0), InvalidInput);
}

#include "fisherlab/fisher.hpp"

#include <algorithm>
#include <cmath>

#include "fisherlab/errors.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

namespace {

void require_scores(const ScoreSet& s) {
  if (s.n() == 0 || s.dim() == 0) throw InvalidInput("empty score set");
}

double median(std::vector<double>& v) {
  const std::size_t m = v.size();
  std::sort(v.begin(), v.end());
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

double catoni_psi(double x) {
  const double a = std::abs(x);
  return std::copysign(std::log1p(a + 0.5 * a * a), x);
}

// Root of Σ ψ(α(x_k − μ)) = 0 in μ. The sum is decreasing in μ and changes
// sign on [min x, max x].
double catoni_location(const std::vector<double>& x, double alpha) {
  auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (lo == hi) return lo;
  const double tol = 1e-10 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
  for (int it = 0; it < 400 && hi - lo > tol; ++it) {
    const double mid = 0.5 * (lo + hi);
    double f = 0.0;
    for (double v : x) f += catoni_psi(alpha * (v - mid));
    if (f > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

enum class CatoniScale { Fixed, Auto };

FisherEstimate catoni_impl(const ScoreSet& scores, CatoniScale mode, double param) {
  require_scores(scores);
  const std::size_t n = scores.n();
  const std::size_t d = scores.dim();
  std::vector<std::pair<std::size_t, std::size_t>> entries;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = a; b < d; ++b) entries.emplace_back(a, b);
  std::vector<double> values(entries.size());
  kernels::parallel_for(entries.size(), [&](std::size_t k) {
    const auto [a, b] = entries[k];
    std::vector<double> x(n);
    double second = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = scores.scores(i, a) * scores.scores(i, b);
      second += x[i] * x[i];
    }
    double alpha = param;
    if (mode == CatoniScale::Auto) {
      const double v = std::max(second / static_cast<double>(n), 1e-12);
      alpha = std::sqrt(2.0 * std::log(1.0 / param) / (static_cast<double>(n) * v));
    }
    values[k] = catoni_location(x, alpha);
  });
  SymMatrix m(d);
  for (std::size_t k = 0; k < entries.size(); ++k) m.set(entries[k].first, entries[k].second, values[k]);
  return {psd_project(m), Estimator::Catoni, n, 1, 0.0, scores.theta};
}

}  // namespace

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Plain: return "plain";
    case Estimator::MoM: return "mom";
    case Estimator::Catoni: return "catoni";
    case Estimator::Smoothed: return "smoothed";
  }
  return "unknown";
}

std::string_view to_string(Regime r) {
  switch (r) {
    case Regime::Above: return "above";
    case Regime::Below: return "below";
    case Regime::Indeterminate: return "indeterminate";
  }
  return "unknown";
}

Estimator estimator_from_string(std::string_view name) {
  if (name == "plain") return Estimator::Plain;
  if (name == "mom") return Estimator::MoM;
  if (name == "catoni") return Estimator::Catoni;
  if (name == "smoothed") return Estimator::Smoothed;
  throw InvalidInput("unknown estimator '" + std::string(name) + "'");
}

ScoreSet compute_scores(const ModelSpec& model, std::span<const double> theta, const Dataset& data) {
  if (data.n() == 0) throw InvalidDataset("dataset is empty");
  if (data.dim() != model.dim()) throw InvalidDataset("dataset dimension differs from model");
  return {kernels::score_matrix(model, theta, data), Vector(theta.begin(), theta.end())};
}

FisherEstimate empirical_fisher(const ScoreSet& scores) {
  require_scores(scores);
  return {kernels::outer_product_mean(scores.scores), Estimator::Plain, scores.n(), 1, 0.0,
          scores.theta};
}

FisherEstimate mom_fisher(const ScoreSet& scores, std::size_t batches) {
  require_scores(scores);
  const std::size_t n = scores.n();
  const std::size_t d = scores.dim();
  if (batches == 0 || batches > n) throw InvalidInput("batch count must lie in [1, n]");
  if (batches == 1) {
    FisherEstimate e = empirical_fisher(scores);
    e.estimator = Estimator::MoM;
    return e;
  }
  const std::size_t size = n / batches;
  std::vector<SymMatrix> per(batches);
  kernels::parallel_for(batches, [&](std::size_t b) {
    const std::size_t lo = b * size;
    const std::size_t hi = b + 1 == batches ? n : lo + size;
    per[b] = kernels::outer_product_mean(scores.scores, lo, hi);
  });
  SymMatrix med(d);
  std::vector<double> vals(batches);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t c = a; c < d; ++c) {
      for (std::size_t b = 0; b < batches; ++b) vals[b] = per[b](a, c);
      med.set(a, c, median(vals));
    }
  return {psd_project(med), Estimator::MoM, n, batches, 0.0, scores.theta};
}

FisherEstimate catoni_fisher(const ScoreSet& scores, double scale) {
  if (!(scale > 0.0) || !std::isfinite(scale)) throw InvalidInput("Catoni scale must be positive");
  return catoni_impl(scores, CatoniScale::Fixed, scale);
}

FisherEstimate catoni_fisher_auto(const ScoreSet& scores, double delta) {
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  return catoni_impl(scores, CatoniScale::Auto, delta);
}

ScoreSet smoothed_scores(const ModelSpec& model, std::span<const double> theta,
                         const Dataset& data, double sigma, std::size_t m_smooth,
                         std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw InvalidInput("sigma must be non-negative");
  if (m_smooth == 0) throw InvalidInput("smoothing draw count must be at least 1");
  if (sigma == 0.0) return compute_scores(model, theta, data);
  const std::size_t d = model.dim();
  Rng rng(seed);
  std::vector<Vector> shifted(m_smooth, Vector(theta.begin(), theta.end()));
  for (Vector& t : shifted)
    for (double& v : t) v += sigma * rng.normal();

  ScoreSet out{Matrix(data.n(), d), Vector(theta.begin(), theta.end())};
  const double inv = 1.0 / static_cast<double>(m_smooth);
  kernels::parallel_for(data.n(), [&](std::size_t i) {
    const SampleView s = data.sample(i);
    auto row = out.scores.row(i);
    for (const Vector& t : shifted) {
      const Vector g = score(model, t, s);
      for (std::size_t j = 0; j < d; ++j) row[j] += g[j];
    }
    for (double& v : row) v *= inv;
  });
  return out;
}

FisherEstimate smoothed_fisher(const ModelSpec& model, std::span<const double> theta,
                               const Dataset& data, double sigma, std::size_t m_smooth,
                               std::uint64_t seed) {
  FisherEstimate e = empirical_fisher(smoothed_scores(model, theta, data, sigma, m_smooth, seed));
  e.estimator = Estimator::Smoothed;
  e.sigma = sigma;
  return e;
}

double fluctuation_radius(std::size_t n, std::size_t d, double delta, double sigma_eff, double C) {
  if (n == 0 || d == 0) throw InvalidInput("n and d must be at least 1");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (!(sigma_eff > 0.0) || !std::isfinite(sigma_eff)) throw InvalidInput("sigma_eff must be positive");
  if (!(C > 0.0) || !std::isfinite(C)) throw InvalidInput("C must be positive");
  return C * sigma_eff *
         std::sqrt((static_cast<double>(d) + std::log(1.0 / delta)) / static_cast<double>(n));
}

SigmaEff sigma_eff_estimate(const ScoreSet& scores) {
  require_scores(scores);
  const auto data = scores.scores.data();
  if (std::all_of(data.begin(), data.end(), [](double v) { return v == 0.0; }))
    return {0.0, true};
  return {std::sqrt(std::max(0.0, lambda_max(empirical_fisher(scores).matrix))), false};
}

CalibrationResult calibrate_C_detailed(const ModelSpec& model, std::span<const std::size_t> n_grid,
                                       double delta, std::size_t reps, std::uint64_t seed,
                                       const CalibrationOptions& options) {
  if (reps < 50) throw InvalidInput("calibration needs at least 50 replications");
  if (n_grid.empty()) throw InvalidInput("empty n grid");
  if (!(delta > 0.0 && delta < 1.0)) throw InvalidInput("delta must lie in (0, 1)");
  if (!(options.grid_step > 0.0) || options.grid_max < options.grid_step)
    throw InvalidInput("bad calibration grid");
  const std::size_t d = model.dim();
  const SymMatrix gamma =
      population_fisher(model, model.theta_star, options.mc_budget, mix_seed(seed, 0xf15e));

  CalibrationResult out;
  out.ratios.assign(n_grid.size(), std::vector<double>(reps));
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    const std::size_t n = n_grid[k];
    kernels::parallel_for(reps, [&](std::size_t r) {
      const Dataset data = sample(model, n, mix_seed(seed, k, r));
      const ScoreSet s = compute_scores(model, model.theta_star, data);
      const FisherEstimate est = empirical_fisher(s);
      const double err = opnorm(est.matrix - gamma);
      const SigmaEff se = sigma_eff_estimate(s);
      const double unit = fluctuation_radius(n, d, delta, se.degenerate_scores ? 1.0 : se.value, 1.0);
      // Degenerate scores give Λ* = 0 for every C; treat as uncovered
      // unless the error is exactly zero.
      out.ratios[k][r] = se.degenerate_scores ? (err == 0.0 ? 0.0 : HUGE_VAL) : err / unit;
    });
  }

  const std::size_t steps =
      static_cast<std::size_t>(std::floor(options.grid_max / options.grid_step + 1e-9));
  for (std::size_t i = 1; i <= steps; ++i) {
    const double C = options.grid_step * static_cast<double>(i);
    std::vector<double> coverage(n_grid.size());
    bool ok = true;
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      const auto& rk = out.ratios[k];
      const auto hits = std::count_if(rk.begin(), rk.end(), [&](double v) { return v <= C; });
      coverage[k] = static_cast<double>(hits) / static_cast<double>(reps);
      ok = ok && coverage[k] >= 1.0 - delta;
    }
    if (ok) {
      out.C = C;
      out.coverage = std::move(coverage);
      return out;
    }
  }
  throw CalibrationFailed("no C up to " + std::to_string(options.grid_max) +
                          " reaches the requested coverage");
}

double calibrate_C(const ModelSpec& model, std::span<const std::size_t> n_grid, double delta,
                   std::size_t reps, std::uint64_t seed) {
  return calibrate_C_detailed(model, n_grid, delta, reps, seed).C;
}

ThresholdReport classify_regime(double lambda_min, double Lambda_star, double L_sm) {
  if (!(Lambda_star > 0.0) || !std::isfinite(Lambda_star)) throw InvalidInput("Lambda_star must be positive");
  if (!(L_sm > 0.0) || !std::isfinite(L_sm)) throw InvalidInput("L_sm must be positive");
  if (!(lambda_min >= 0.0) || !std::isfinite(lambda_min))
    throw InvalidInput("lambda_min must be non-negative");
  ThresholdReport r;
  r.lambda_min = lambda_min;
  r.Lambda_star = Lambda_star;
  r.inputs.L_sm = L_sm;
  if (lambda_min >= 2.0 * Lambda_star) {
    r.regime = Regime::Above;
    const double gap = lambda_min - Lambda_star;
    r.mu = gap * gap / L_sm;
  } else if (lambda_min <= 0.5 * Lambda_star) {
    r.regime = Regime::Below;
  } else {
    r.regime = Regime::Indeterminate;
  }
  return r;
}

ThresholdReport threshold_report(const ScoreSet& scores, const FisherEstimate& estimate,
                                 double delta, double C, double L_sm) {
  const SigmaEff se = sigma_eff_estimate(scores);
  if (se.degenerate_scores) throw InvalidInput("all scores are zero; sigma_eff is degenerate");
  const std::size_t d = scores.dim();
  const double Lambda_star = fluctuation_radius(scores.n(), d, delta, se.value, C);
  // Clip round-off below zero; PSD estimates can report λ_min ≈ −1e-17.
  const double lmin = std::max(0.0, lambda_min(estimate.matrix));
  ThresholdReport r = classify_regime(lmin, Lambda_star, L_sm);
  r.inputs = {scores.n(), d, delta, C, se.value, L_sm};
  return r;
}

}  // namespace fisherlab

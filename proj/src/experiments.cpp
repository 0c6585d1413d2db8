#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fisherlab/errors.hpp"
#include "fisherlab/geometry.hpp"
#include "fisherlab/harness.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/lecam.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/spectral.hpp"

namespace fisherlab {

namespace {

constexpr double kNA = std::numeric_limits<double>::quiet_NaN();

// Stream tags appended to a cell seed.
enum Stream : std::uint64_t { kData = 1, kAux = 2, kTrain = 3, kCert = 4, kMonitor = 5 };

std::int64_t as_int(std::uint64_t v) { return static_cast<std::int64_t>(v); }

// Linear-interpolation quantile (type 7).
double quantile(std::vector<double> v, double q) {
  if (v.empty()) return kNA;
  std::sort(v.begin(), v.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (h - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double median(std::vector<double> v) { return quantile(std::move(v), 0.5); }

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Standard error of the mean.
double std_err(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

Vector random_unit(std::size_t d, std::uint64_t seed) {
  Rng rng(seed);
  Vector u(d);
  rng.fill_normal(u);
  return normalized(u);
}

std::string experiment_name(const CommonConfig& c) { return std::string(1, c.experiment); }

FisherEstimate estimate(const ScoreSet& scores, Estimator e, std::size_t batches, double delta) {
  switch (e) {
    case Estimator::Plain: return empirical_fisher(scores);
    case Estimator::MoM: return mom_fisher(scores, batches);
    case Estimator::Catoni: return catoni_fisher_auto(scores, delta);
    case Estimator::Smoothed: break;
  }
  throw ConfigError("estimator not supported here");
}

// Population Fisher at θ* and its spectrum.
Spectrum population_spectrum(const ModelSpec& model, std::size_t mc_budget, std::uint64_t seed) {
  return eig_sym(population_fisher(model, model.theta_star, mc_budget, seed));
}

}  // namespace

// ---------------------------------------------------------------------------
// A: phase transition in n

ResultA run_experiment_A(const CommonConfig& common, const ConfigA& cfg) {
  const ModelSpec model = cfg.model.spec();
  const std::size_t d = model.dim();
  const std::size_t G = cfg.n_grid.size();
  const std::size_t S = common.seeds.size();

  ResultA out;
  out.C = cfg.calibrate_C ? calibrate_C(model, cfg.n_grid, common.delta, cfg.calibration_reps,
                                        mix_seed(common.master_seed, 'A', 0xca1))
                          : cfg.C;

  struct Outcome {
    double lambda_min = 0.0, Lambda_star = 0.0, param_error = kNA, accuracy = kNA;
    Regime regime = Regime::Indeterminate;
    std::size_t iterations = 0;
    bool converged = false;
  };
  std::vector<Outcome> cells(G * S);
  kernels::parallel_for(G * S, [&](std::size_t k) {
    const std::size_t g = k / S;
    const std::size_t s = k % S;
    const std::uint64_t base = cell_seed(common, g, common.seeds[s]);
    const Dataset data = sample(model, cfg.n_grid[g], mix_seed(base, kData));
    const double L_sm = smoothness_bound(model, data);
    const ScoreSet scores = compute_scores(model, model.theta_star, data);
    const ThresholdReport r = threshold_report(
        scores, estimate(scores, cfg.estimator, cfg.batches, common.delta), common.delta, out.C,
        L_sm);
    Outcome& c = cells[k];
    c.lambda_min = r.lambda_min;
    c.Lambda_star = r.Lambda_star;
    c.regime = r.regime;
    if (cfg.fit_gd) {
      const MinimizeResult fit =
          gd_minimize(model, data, Vector(d, 0.0), cfg.fit_tol, cfg.fit_max_iter);
      c.param_error = norm(subtract(fit.theta, model.theta_star));
      c.iterations = fit.iterations;
      c.converged = fit.converged;
      if (model.kind == ModelKind::Logistic && cfg.holdout_n > 0) {
        const Dataset hold = sample(model, cfg.holdout_n, mix_seed(base, kAux));
        std::size_t hits = 0;
        for (std::size_t i = 0; i < hold.n(); ++i) {
          const SampleView v = hold.sample(i);
          hits += ((dot(fit.theta, v.x) > 0.0) == (v.y > 0.5)) ? 1 : 0;
        }
        c.accuracy = static_cast<double>(hits) / static_cast<double>(hold.n());
      }
    }
  });

  const std::string id = experiment_name(common);
  out.cells = Table(id, "cells",
                    {"n", "seed", "lambda_min", "Lambda_star", "ratio", "regime", "param_error",
                     "holdout_accuracy", "gd_iterations", "gd_converged"},
                    2);
  out.summary = Table(id, "summary",
                      {"n", "median_ratio", "above_fraction", "median_param_error",
                       "iqr_param_error", "median_above"},
                      1);
  std::vector<bool> indicator(G);
  for (std::size_t g = 0; g < G; ++g) {
    std::vector<double> ratios, errors;
    std::size_t above = 0;
    for (std::size_t s = 0; s < S; ++s) {
      const Outcome& c = cells[g * S + s];
      const double ratio = c.Lambda_star > 0.0 ? c.lambda_min / c.Lambda_star : kNA;
      out.cells.add_row({as_int(cfg.n_grid[g]), as_int(common.seeds[s]), c.lambda_min,
                         c.Lambda_star, ratio, std::string(to_string(c.regime)), c.param_error,
                         c.accuracy, as_int(c.iterations), std::int64_t{c.converged ? 1 : 0}});
      ratios.push_back(ratio);
      if (std::isfinite(c.param_error)) errors.push_back(c.param_error);
      above += c.regime == Regime::Above ? 1 : 0;
    }
    const double med = median(ratios);
    indicator[g] = med >= 2.0;
    const double frac = static_cast<double>(above) / static_cast<double>(S);
    const double iqr = errors.empty() ? kNA : quantile(errors, 0.75) - quantile(errors, 0.25);
    out.above_fraction.push_back(frac);
    out.iqr_param_error.push_back(iqr);
    out.summary.add_row({as_int(cfg.n_grid[g]), med, frac, errors.empty() ? kNA : median(errors),
                         iqr, std::int64_t{indicator[g] ? 1 : 0}});
    if (indicator[g] && !out.n_star) out.n_star = cfg.n_grid[g];
  }
  std::size_t rises = 0;
  for (std::size_t g = 1; g < G; ++g) {
    if (indicator[g - 1] && !indicator[g]) out.single_crossing = false;
    if (!indicator[g - 1] && indicator[g]) ++rises;
  }
  if (rises > 1) out.single_crossing = false;

  out.crossing = Table(id, "crossing", {"C", "n_star", "crossing_found", "single_crossing"}, 0);
  out.crossing.add_row({out.C, out.n_star ? Cell(as_int(*out.n_star)) : Cell(kNA),
                        std::int64_t{out.n_star ? 1 : 0},
                        std::int64_t{out.single_crossing ? 1 : 0}});
  out.cells.sort();
  out.summary.sort();
  return out;
}

// ---------------------------------------------------------------------------
// B: PL geometry above the threshold, Le Cam floor below it

ResultB run_experiment_B(const CommonConfig& common, const ConfigB& cfg) {
  const std::string id = experiment_name(common);
  const std::size_t S = common.seeds.size();
  ResultB out;

  // Above arm.
  {
    const auto& a = cfg.above;
    const ModelSpec model = a.model.spec();
    const std::size_t d = model.dim();
    const Spectrum pop = population_spectrum(model, a.mc_budget, mix_seed(common.master_seed, 'B', 0xa));
    out.lambda_min_population = pop.lambda_min();
    const double Lambda_star = fluctuation_radius(a.n, d, common.delta,
                                                  std::sqrt(std::max(0.0, pop.lambda_max())), a.C);

    struct Row {
      double L_sm = 0.0, mu_min = kNA;
      PLReport pl;
      std::string note;
    };
    std::vector<Row> rows(S);
    kernels::parallel_for(S, [&](std::size_t s) {
      const std::uint64_t base = cell_seed(common, 0, common.seeds[s]);
      const Dataset data = sample(model, a.n, mix_seed(base, kData));
      Row& r = rows[s];
      r.L_sm = smoothness_bound(model, data);
      r.mu_min = pl_constant(out.lambda_min_population, Lambda_star, r.L_sm);
      const MinimizeResult fit = gd_minimize(model, data, model.theta_star, 1e-10, 100000);
      const Vector theta0 = add(fit.theta, scaled(random_unit(d, mix_seed(base, kAux)), a.init_radius));
      const Trajectory traj = gd_run(model, data, theta0, 1.0 / r.L_sm, a.steps);
      const double L_star = std::min(fit.loss, *std::min_element(traj.losses.begin(), traj.losses.end()));
      r.pl = pl_slope_check(traj, L_star, r.mu_min);
    });
    out.above = Table(id, "above",
                      {"seed", "lambda_min_population", "Lambda_star", "L_sm", "mu_min",
                       "slope_hat", "fraction_ok", "usable_points", "pass"},
                      1);
    std::vector<double> mus;
    for (std::size_t s = 0; s < S; ++s) {
      const Row& r = rows[s];
      const bool pass = r.pl.slope_hat >= r.mu_min && r.pl.fraction_ok >= 0.95;
      out.above.add_row({as_int(common.seeds[s]), out.lambda_min_population, Lambda_star,
                         r.L_sm, r.mu_min, r.pl.slope_hat, r.pl.fraction_ok,
                         as_int(r.pl.usable_points), std::int64_t{pass ? 1 : 0}});
      mus.push_back(r.mu_min);
    }
    out.mu_min = median(mus);
    out.above.sort();
  }

  // Below arm: one data stream shared by every ρ.
  {
    const auto& b = cfg.below;
    const ModelSpec model = b.model.spec();
    const std::size_t d = model.dim();
    const Spectrum pop = population_spectrum(model, b.mc_budget, mix_seed(common.master_seed, 'B', 0xb));
    const double lmin = std::max(0.0, pop.lambda_min());
    out.C_KL_prime = b.C_KL_prime
                         ? *b.C_KL_prime
                         : calibrate_C_KL(model, model.theta_star, pop, b.calibration_rhos,
                                          b.mc_budget, mix_seed(common.master_seed, 'B', 0xc))
                               .C_KL_prime;
    const double Lambda_star =
        fluctuation_radius(b.n, d, common.delta, std::sqrt(std::max(0.0, pop.lambda_max())), b.C);
    const Regime regime = classify_regime(lmin, Lambda_star, 1.0).regime;
    const RhoBudget budget = rho_for_budget(b.n, lmin, out.C_KL_prime, b.c0);
    const std::uint64_t lrt_seed = cell_seed(common, 0, common.seeds.front());

    const std::size_t G = b.rho_grid.size();
    std::vector<TwoPointKL> kls(G);
    std::vector<LrtResult> errs(G);
    kernels::parallel_for(G, [&](std::size_t g) {
      const TwoPointInstance inst = two_point_pair(model.theta_star, pop, b.rho_grid[g]);
      kls[g] = kl_two_point(model, inst, b.n, b.c0, b.mc_budget, mix_seed(lrt_seed, 0x6b6c, g));
      errs[g] = lrt_error(model, inst, b.n, b.trials, lrt_seed);
    });
    out.below = Table(id, "below",
                      {"rho", "n", "n_times_kl", "error_rate", "std_err", "regime", "kl",
                       "kl_std_err", "budget_ok", "rho_budget", "C_KL_prime", "lambda_min"},
                      1);
    for (std::size_t g = 0; g < G; ++g)
      out.below.add_row({b.rho_grid[g], as_int(b.n), kls[g].n_times_kl, errs[g].error_rate,
                         errs[g].std_err, std::string(to_string(regime)), kls[g].kl,
                         kls[g].std_err, std::int64_t{kls[g].budget_ok ? 1 : 0},
                         budget.unbounded_separation ? kNA : budget.rho, out.C_KL_prime, lmin});
    out.below.sort();
  }

  // Gaussian cross-check: exact error Φ(−ρ√n).
  {
    const auto& gc = cfg.gaussian;
    const ModelSpec model = ModelSpec::gaussian_location(Vector(gc.dim, 0.0));
    const Spectrum pop = eig_sym(SymMatrix::identity(gc.dim));
    const std::uint64_t seed = mix_seed(common.master_seed, 'B', 0x9);
    const std::size_t G = gc.rho_sqrt_n.size();
    std::vector<LrtResult> errs(G);
    kernels::parallel_for(G, [&](std::size_t g) {
      const double rho = gc.rho_sqrt_n[g] / std::sqrt(static_cast<double>(gc.n));
      errs[g] = lrt_error(model, two_point_pair(model.theta_star, pop, rho), gc.n, gc.trials, seed);
    });
    out.gaussian = Table(id, "gaussian",
                         {"rho_sqrt_n", "rho", "n", "error_rate", "std_err", "expected", "z"}, 1);
    for (std::size_t g = 0; g < G; ++g) {
      const double r = gc.rho_sqrt_n[g];
      const double expected = 0.5 * std::erfc(r / std::sqrt(2.0));
      const double z = errs[g].std_err > 0.0 ? (errs[g].error_rate - expected) / errs[g].std_err
                                             : kNA;
      out.gaussian.add_row({r, r / std::sqrt(static_cast<double>(gc.n)), as_int(gc.n),
                            errs[g].error_rate, errs[g].std_err, expected, z});
    }
    out.gaussian.sort();
  }
  return out;
}

// ---------------------------------------------------------------------------
// C: smoothing crossover

ResultC run_experiment_C(const CommonConfig& common, const ConfigC& cfg) {
  const std::string id = experiment_name(common);
  const std::size_t S = common.seeds.size();
  const std::size_t G = cfg.sigma_grid.size();
  ResultC out;
  out.C = cfg.C;

  struct Outcome {
    double lambda_min = 0.0, Lambda_star = 0.0, sigma_eff = 0.0;
    Regime regime = Regime::Indeterminate;
  };
  // Data and smoothing draws are shared across σ, so the σ = 0 row is the
  // unsmoothed pipeline and the σ-dependence is not masked by resampling.
  auto run_arm = [&](const ModelSpec& model, std::uint64_t arm) {
    std::vector<Outcome> cells(G * S);
    kernels::parallel_for(G * S, [&](std::size_t k) {
      const std::size_t g = k / S;
      const std::size_t s = k % S;
      const std::uint64_t base = cell_seed(common, arm, common.seeds[s]);
      const Dataset data = sample(model, cfg.n, mix_seed(base, kData));
      const ScoreSet scores = smoothed_scores(model, model.theta_star, data, cfg.sigma_grid[g],
                                              cfg.m_smooth, mix_seed(base, kAux));
      FisherEstimate est = empirical_fisher(scores);
      const ThresholdReport r =
          threshold_report(scores, est, common.delta, cfg.C, smoothness_bound(model, data));
      cells[k] = {r.lambda_min, r.Lambda_star, r.inputs.sigma_eff, r.regime};
    });
    return cells;
  };

  out.cells = Table(id, "cells",
                    {"arm", "sigma", "seed", "lambda_min", "Lambda_star", "sigma_eff", "ratio",
                     "regime"},
                    3);
  out.summary = Table(id, "summary",
                      {"arm", "sigma", "mean_lambda_min", "se_lambda_min", "median_ratio",
                       "above_fraction", "median_above"},
                      2);

  auto tabulate = [&](const std::string& arm, const std::vector<Outcome>& cells,
                      std::vector<double>& means, std::vector<double>& ses,
                      std::vector<double>& med_ratio) {
    for (std::size_t g = 0; g < G; ++g) {
      std::vector<double> lams, ratios;
      std::size_t above = 0;
      for (std::size_t s = 0; s < S; ++s) {
        const Outcome& c = cells[g * S + s];
        const double ratio = c.Lambda_star > 0.0 ? c.lambda_min / c.Lambda_star : kNA;
        out.cells.add_row({arm, cfg.sigma_grid[g], as_int(common.seeds[s]), c.lambda_min,
                           c.Lambda_star, c.sigma_eff, ratio, std::string(to_string(c.regime))});
        lams.push_back(c.lambda_min);
        ratios.push_back(ratio);
        above += c.regime == Regime::Above ? 1 : 0;
      }
      means.push_back(mean(lams));
      ses.push_back(std_err(lams));
      med_ratio.push_back(median(ratios));
      out.summary.add_row({arm, cfg.sigma_grid[g], means.back(), ses.back(), med_ratio.back(),
                           static_cast<double>(above) / static_cast<double>(S),
                           std::int64_t{med_ratio.back() >= 2.0 ? 1 : 0}});
    }
  };

  std::vector<double> means, ses, ratios;
  tabulate("treatment", run_arm(cfg.model.spec(), 0), means, ses, ratios);
  for (std::size_t g = 0; g < G; ++g)
    if (ratios[g] >= 2.0) {
      out.sigma_star = cfg.sigma_grid[g];
      break;
    }

  if (cfg.control) {
    std::vector<double> cm, cs, cr;
    tabulate("control", run_arm(cfg.control->spec(), 1), cm, cs, cr);
    // Reference is the first grid entry (σ = 0 for the usual grid).
    double worst = 0.0;
    for (std::size_t g = 1; g < G; ++g) {
      const double se = std::sqrt(cs[g] * cs[g] + cs[0] * cs[0]);
      const double diff = std::abs(cm[g] - cm[0]);
      worst = std::max(worst, se > 0.0 ? diff / (3.0 * se) : (diff > 0.0 ? kNA : 0.0));
    }
    out.control_max_z = worst;
  }

  out.crossing = Table(id, "crossing", {"C", "sigma_star", "crossing_found", "control_max_z"}, 0);
  out.crossing.add_row({out.C, out.sigma_star ? Cell(*out.sigma_star) : Cell(kNA),
                        std::int64_t{out.sigma_star ? 1 : 0},
                        out.control_max_z ? Cell(*out.control_max_z) : Cell(kNA)});
  out.cells.sort();
  out.summary.sort();
  return out;
}

// ---------------------------------------------------------------------------
// D: Fisher floor

ResultD run_experiment_D(const CommonConfig& common, const ConfigD& cfg) {
  const std::string id = experiment_name(common);
  const ModelSpec model = cfg.model.spec();
  const std::size_t d = model.dim();
  const std::size_t S = common.seeds.size();
  const std::size_t G = cfg.tau_grid.size();

  auto floor_config = [&](double tau) {
    FloorConfig f;
    f.tau = tau;
    f.beta = cfg.beta;
    f.batch_size = cfg.batch_size;
    f.eta = cfg.eta;
    f.steps = cfg.steps;
    f.delta = common.delta;
    f.C = cfg.C;
    f.validate();
    return f;
  };
  auto full_lambda_min = [&](const Dataset& data, std::span<const double> theta) {
    return lambda_min(empirical_fisher(compute_scores(model, theta, data)).matrix);
  };

  // Each seed owns one dataset, start point and batch sequence, shared by
  // both arms and every τ. The control arm does not depend on τ.
  struct Control {
    Dataset data;
    Vector theta0;
    Vector trace;
    double final_lambda_min = 0.0;
  };
  std::vector<Control> controls(S);
  kernels::parallel_for(S, [&](std::size_t s) {
    const std::uint64_t base = cell_seed(common, 0, common.seeds[s]);
    Control& c = controls[s];
    c.data = sample(model, cfg.n, mix_seed(base, kData));
    c.theta0 = scaled(random_unit(d, mix_seed(base, kAux)), cfg.init_norm);
    const FloorRun run =
        train_with_floor(model, c.data, c.theta0, floor_config(cfg.tau_grid.front()), false,
                         mix_seed(base, kTrain));
    c.trace = run.lambda_min_trace;
    c.final_lambda_min = full_lambda_min(c.data, run.trajectory.thetas.back());
  });

  struct Treated {
    Vector trace;
    double final_lambda_min = 0.0;
    MeasuredCertificate cert;
    double L_dir = 0.0;
  };
  std::vector<Treated> treated(G * S);
  kernels::parallel_for(G * S, [&](std::size_t k) {
    const std::size_t g = k / S;
    const std::size_t s = k % S;
    const std::uint64_t base = cell_seed(common, 0, common.seeds[s]);
    const Control& c = controls[s];
    const FloorConfig f = floor_config(cfg.tau_grid[g]);
    const FloorRun run = train_with_floor(model, c.data, c.theta0, f, true, mix_seed(base, kTrain));
    Treated& t = treated[k];
    t.trace = run.lambda_min_trace;
    t.L_dir = run.L_dir;
    const Vector& theta = run.trajectory.thetas.back();
    t.final_lambda_min = full_lambda_min(c.data, theta);
    t.cert = measure_certificate(model, c.data, theta, f, run.L_dir, mix_seed(base, kCert, g));
  });

  ResultD out;
  out.runs = Table(id, "runs",
                   {"tau", "seed", "control_lambda_min", "treatment_lambda_min",
                    "certificate_bound", "bound_ok", "treatment_wins", "eps_opt", "eps_task",
                    "eps_stat", "eps_mini", "L_dir"},
                   2);
  out.traces = Table(id, "traces", {"arm", "tau", "seed", "step", "lambda_min"}, 4);
  std::vector<double> xs, ys;
  std::size_t wins = 0, certified = 0;
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t s = 0; s < S; ++s) {
      const Treated& t = treated[g * S + s];
      const Control& c = controls[s];
      const CertificateInputs& in = t.cert.certificate.inputs;
      const bool ok = t.final_lambda_min >= t.cert.certificate.bound;
      const bool win = c.final_lambda_min < t.final_lambda_min;
      wins += win ? 1 : 0;
      certified += ok ? 1 : 0;
      out.runs.add_row({cfg.tau_grid[g], as_int(common.seeds[s]), c.final_lambda_min,
                        t.final_lambda_min, t.cert.certificate.bound, std::int64_t{ok ? 1 : 0},
                        std::int64_t{win ? 1 : 0}, in.eps_opt, t.cert.eps_task, in.eps_stat,
                        in.eps_mini, t.L_dir});
      for (std::size_t step = 0; step < t.trace.size(); ++step)
        out.traces.add_row({std::string("treatment"), cfg.tau_grid[g], as_int(common.seeds[s]),
                            as_int(step), t.trace[step]});
      xs.push_back(cfg.tau_grid[g]);
      ys.push_back(t.final_lambda_min);
    }
  }
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t step = 0; step < controls[s].trace.size(); ++step)
      out.traces.add_row({std::string("control"), kNA, as_int(common.seeds[s]), as_int(step),
                          controls[s].trace[step]});

  // Least-squares line of final λ_min on τ.
  const double mx = mean(xs), my = mean(ys);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  out.slope = sxx > 0.0 ? sxy / sxx : kNA;
  out.intercept = my - out.slope * mx;
  out.r_squared = sxx > 0.0 && syy > 0.0 ? sxy * sxy / (sxx * syy) : kNA;
  const double total = static_cast<double>(G * S);
  out.treatment_win_fraction = static_cast<double>(wins) / total;
  out.certificate_fraction = static_cast<double>(certified) / total;
  out.fit = Table(id, "fit",
                  {"slope", "intercept", "r_squared", "treatment_win_fraction",
                   "certificate_fraction"},
                  0);
  out.fit.add_row({out.slope, out.intercept, out.r_squared, out.treatment_win_fraction,
                   out.certificate_fraction});
  out.runs.sort();
  out.traces.sort();
  return out;
}

// ---------------------------------------------------------------------------
// E: K-direction monitor

ResultE run_experiment_E(const CommonConfig& common, const ConfigE& cfg) {
  const std::string id = experiment_name(common);
  const ModelSpec model = cfg.model.spec();
  const std::size_t d = model.dim();
  const std::size_t S = common.seeds.size();
  FloorConfig training = cfg.training;
  training.delta = common.delta;
  training.eig_iters = cfg.power_iters;
  training.validate();

  std::vector<MonitorState> live(S), frozen(S);
  kernels::parallel_for(S, [&](std::size_t s) {
    const std::uint64_t base = cell_seed(common, 0, common.seeds[s]);
    const Dataset data = sample(model, cfg.n, mix_seed(base, kData));
    const Vector theta0 = scaled(random_unit(d, mix_seed(base, kAux)), cfg.init_norm);
    const FloorRun run =
        train_with_floor(model, data, theta0, training, true, mix_seed(base, kTrain), true);
    MonitorState m = monitor_init(d, cfg.K, mix_seed(base, kMonitor));
    for (const SymMatrix& g : run.batch_fishers) m = monitor_update(std::move(m), g, cfg.power_iters);
    live[s] = std::move(m);

    const SymMatrix fixed = SymMatrix::diagonal(cfg.frozen_diagonal);
    MonitorState f = monitor_init(fixed.dim(), cfg.K, mix_seed(base, kMonitor, 1));
    for (std::size_t t = 0; t < cfg.frozen_steps; ++t) f = monitor_update(std::move(f), fixed, cfg.power_iters);
    frozen[s] = std::move(f);
  });

  ResultE out;
  out.steps = Table(id, "steps",
                    {"phase", "seed", "step", "phi_K", "lambda_min", "gap", "Delta_B",
                     "sin2_theta", "penalty", "bound"},
                    3);
  auto emit = [&](const std::string& phase, std::size_t s, const MonitorState& m, bool count) {
    for (std::size_t t = 0; t < m.history.size(); ++t) {
      const MonitorRecord& r = m.history[t];
      if (count) {
        out.violations_lower += r.phi_K < r.lambda_min - 1e-12 ? 1 : 0;
        out.violations_upper += r.phi_K > r.bound + 1e-8 ? 1 : 0;
      }
      out.steps.add_row({phase, as_int(common.seeds[s]), as_int(t + 1), r.phi_K, r.lambda_min,
                         r.phi_K - r.lambda_min, r.Delta_B, r.sin2_theta, r.penalty, r.bound});
    }
  };
  for (std::size_t s = 0; s < S; ++s) {
    emit("run", s, live[s], true);
    emit("frozen", s, frozen[s], false);
    if (!frozen[s].history.empty()) {
      const std::size_t at = std::min<std::size_t>(200, frozen[s].history.size()) - 1;
      const MonitorRecord& r = frozen[s].history[at];
      out.frozen_gap_at_200 = std::max(out.frozen_gap_at_200, r.phi_K - r.lambda_min);
    }
  }
  out.steps.sort();
  return out;
}

std::vector<Table> run_experiment(const ExperimentConfig& config) {
  const CommonConfig& c = config.common;
  switch (c.experiment) {
    case 'A': {
      ResultA r = run_experiment_A(c, std::get<ConfigA>(config.spec));
      return {std::move(r.cells), std::move(r.summary), std::move(r.crossing)};
    }
    case 'B': {
      ResultB r = run_experiment_B(c, std::get<ConfigB>(config.spec));
      return {std::move(r.above), std::move(r.below), std::move(r.gaussian)};
    }
    case 'C': {
      ResultC r = run_experiment_C(c, std::get<ConfigC>(config.spec));
      return {std::move(r.cells), std::move(r.summary), std::move(r.crossing)};
    }
    case 'D': {
      ResultD r = run_experiment_D(c, std::get<ConfigD>(config.spec));
      return {std::move(r.runs), std::move(r.traces), std::move(r.fit)};
    }
    case 'E': {
      ResultE r = run_experiment_E(c, std::get<ConfigE>(config.spec));
      return {std::move(r.steps)};
    }
  }
  throw ConfigError("unknown experiment id");
}

}  // namespace fisherlab

#include "fisherlab/lecam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "fisherlab/errors.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/rng.hpp"

namespace fisherlab {

void LeCamConfig::validate() const {
  if (!(c0 > 0.0)) throw InvalidInput("c0 must be positive");
  if (!(C_KL_prime > 0.0)) throw InvalidInput("C'_KL must be positive");
  if (!(rho >= 0.0)) throw InvalidInput("rho must be non-negative");
  if (trials == 0) throw InvalidInput("trials must be at least 1");
  if (n == 0) throw InvalidInput("n must be at least 1");
}

TwoPointInstance two_point_pair(std::span<const double> theta_star, const Spectrum& spectrum,
                                double rho) {
  if (!(rho >= 0.0) || !std::isfinite(rho)) throw InvalidInput("rho must be non-negative");
  if (theta_star.size() != spectrum.dim()) throw InvalidInput("dimension mismatch");
  Vector v = spectrum.min_eigenvector();
  const auto first = std::find_if(v.begin(), v.end(), [](double x) { return x != 0.0; });
  if (first != v.end() && *first < 0.0)
    for (double& x : v) x = -x;
  TwoPointInstance inst;
  inst.theta_plus.assign(theta_star.begin(), theta_star.end());
  inst.theta_minus = inst.theta_plus;
  axpy(rho, v, inst.theta_plus);
  axpy(-rho, v, inst.theta_minus);
  inst.v = std::move(v);
  inst.rho = rho;
  return inst;
}

RhoBudget rho_for_budget(std::size_t n, double lambda_min, double C_KL_prime, double c0) {
  if (n == 0 || !(C_KL_prime > 0.0) || !(c0 > 0.0) || !(lambda_min >= 0.0))
    throw InvalidInput("rho_for_budget needs n, C'_KL, c0 > 0 and lambda_min >= 0");
  if (lambda_min == 0.0) return {std::numeric_limits<double>::infinity(), true};
  return {std::sqrt(c0 / (static_cast<double>(n) * C_KL_prime * lambda_min)), false};
}

TwoPointKL kl_two_point(const ModelSpec& model, const TwoPointInstance& inst, std::size_t n,
                        double c0, std::size_t mc_budget, std::uint64_t seed) {
  const MonteCarloValue k = kl(model, inst.theta_plus, inst.theta_minus, mc_budget, seed);
  const double nn = static_cast<double>(n);
  TwoPointKL out;
  out.kl = k.value;
  out.std_err = k.std_err;
  out.n_times_kl = nn * k.value;
  out.budget_ok = out.n_times_kl <= c0 + 3.0 * nn * k.std_err;
  return out;
}

LrtResult lrt_error(const ModelSpec& model, const TwoPointInstance& inst, std::size_t n,
                    std::size_t trials, std::uint64_t seed) {
  if (trials == 0 || n == 0) throw InvalidInput("trials and n must be at least 1");
  const ModelSpec plus = at_parameter(model, inst.theta_plus);
  const ModelSpec minus = at_parameter(model, inst.theta_minus);
  std::vector<unsigned char> wrong(trials, 0);
  kernels::parallel_for(trials, [&](std::size_t k) {
    const std::uint64_t s = mix_seed(seed, k);
    Rng coin(s);
    const bool truth_plus = coin.bernoulli(0.5);
    const Dataset data = sample(truth_plus ? plus : minus, n, mix_seed(s, 1));
    double llr = 0.0;  // Σ log p₊/p₋
    for (std::size_t i = 0; i < n; ++i) {
      const SampleView x = data.sample(i);
      llr += loss(model, inst.theta_minus, x) - loss(model, inst.theta_plus, x);
    }
    bool say_plus;
    if (llr > 0.0)
      say_plus = true;
    else if (llr < 0.0)
      say_plus = false;
    else
      say_plus = coin.bernoulli(0.5);
    wrong[k] = say_plus != truth_plus;
  });
  const double errors = static_cast<double>(std::count(wrong.begin(), wrong.end(), 1));
  const double t = static_cast<double>(trials);
  const double p = errors / t;
  return {p, std::sqrt(p * (1.0 - p) / t), trials};
}

KLCalibration calibrate_C_KL(const ModelSpec& model, std::span<const double> theta_star,
                             const Spectrum& spectrum, std::span<const double> rho_grid,
                             std::size_t mc_budget, std::uint64_t seed) {
  const double lmin = spectrum.lambda_min();
  if (!(lmin > 0.0)) throw CalibrationFailed("lambda_min must be positive to calibrate C'_KL");
  if (rho_grid.empty()) throw InvalidInput("empty rho grid");
  KLCalibration out;
  for (std::size_t k = 0; k < rho_grid.size(); ++k) {
    const double rho = rho_grid[k];
    if (!(rho > 0.0)) throw InvalidInput("calibration rho values must be positive");
    const TwoPointInstance inst = two_point_pair(theta_star, spectrum, rho);
    const MonteCarloValue v = kl(model, inst.theta_plus, inst.theta_minus, mc_budget, mix_seed(seed, k));
    out.ratios.push_back(v.value / (rho * rho * lmin));
  }
  out.C_KL_prime = *std::max_element(out.ratios.begin(), out.ratios.end());
  if (!(out.C_KL_prime > 0.0)) throw CalibrationFailed("KL estimates are all zero");
  return out;
}

void write_lecam_csv(std::ostream& os, std::span<const LeCamRow> rows) {
  os << "rho,n,n_times_kl,error_rate,std_err,regime\n";
  char buf[192];
  for (const LeCamRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%.17g,%.17g,", r.rho, r.n, r.n_times_kl,
                  r.error_rate, r.std_err);
    os << buf << to_string(r.regime) << '\n';
  }
}

}  // namespace fisherlab

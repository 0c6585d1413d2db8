#pragma once

// Experiment drivers A–E. Each experiment is a pure function of its config:
// every cell draws from mix_seed(master_seed, experiment_id, grid_index,
// seed), cells may run in any order on any number of threads, and tables
// are sorted on their key columns before they are written.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "fisherlab/fisher.hpp"
#include "fisherlab/floor.hpp"
#include "fisherlab/models.hpp"
#include "fisherlab/table.hpp"

namespace fisherlab {

/// JSON shape:
///   {"kind": "logistic", "dim": 16, "theta": [...]}            or
///   {"kind": "logistic", "dim": 16, "theta_norm": 1.0,
///    "direction": "diagonal" | "e1"}
/// "diagonal" is (1, …, 1)/√d. Logistic design covariance is the identity.
struct ModelConfig {
  ModelKind kind = ModelKind::GaussianLocation;
  std::size_t dim = 1;
  Vector theta;

  ModelSpec spec() const;
};

struct CommonConfig {
  char experiment = 'A';
  std::uint64_t master_seed = 1;
  std::vector<std::uint64_t> seeds;
  double delta = 0.05;
  std::string output_dir;
};

struct ConfigA {
  ModelConfig model;
  std::vector<std::size_t> n_grid;
  /// Used unless calibrate_C is set.
  double C = 1.0;
  bool calibrate_C = false;
  std::size_t calibration_reps = 200;
  Estimator estimator = Estimator::Plain;
  std::size_t batches = 1;
  std::size_t holdout_n = 1000;
  bool fit_gd = true;
  double fit_tol = 1e-8;
  std::size_t fit_max_iter = 20000;
  std::size_t mc_budget = 200000;
};

struct ConfigB {
  struct Above {
    ModelConfig model;
    std::size_t n = 2000;
    std::size_t steps = 200;
    double init_radius = 1.0;
    double C = 1.0;
    std::size_t mc_budget = 200000;
  };
  struct Below {
    ModelConfig model;
    std::size_t n = 200;
    std::vector<double> rho_grid;
    std::size_t trials = 2000;
    std::size_t mc_budget = 200000;
    double c0 = 0.125;
    double C = 1.0;
    /// nullopt: calibrate on calibration_rhos.
    std::optional<double> C_KL_prime;
    std::vector<double> calibration_rhos{0.01, 0.05, 0.1};
  };
  struct GaussianCheck {
    std::size_t dim = 1;
    std::size_t n = 100;
    std::vector<double> rho_sqrt_n{0.25, 1.0, 3.0};
    std::size_t trials = 4000;
  };
  Above above;
  Below below;
  GaussianCheck gaussian;
};

struct ConfigC {
  ModelConfig model;
  std::optional<ModelConfig> control;
  std::size_t n = 1000;
  std::vector<double> sigma_grid;
  std::size_t m_smooth = 256;
  double C = 1.0;
};

struct ConfigD {
  ModelConfig model;
  std::size_t n = 2000;
  std::vector<double> tau_grid;
  double beta = 10.0;
  std::size_t batch_size = 64;
  double eta = 0.05;
  std::size_t steps = 400;
  double init_norm = 0.5;
  double C = 1.0;
};

struct ConfigE {
  ModelConfig model;
  std::size_t n = 2000;
  FloorConfig training;
  double init_norm = 0.5;
  std::size_t K = 3;
  std::size_t power_iters = 2;
  Vector frozen_diagonal;
  std::size_t frozen_steps = 300;
};

struct ExperimentConfig {
  CommonConfig common;
  std::variant<ConfigA, ConfigB, ConfigC, ConfigD, ConfigE> spec;
};

/// Strict parse: unknown keys, wrong types and invalid values raise
/// ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Per-cell seed.
std::uint64_t cell_seed(const CommonConfig& c, std::uint64_t grid_index, std::uint64_t seed);

struct ResultA {
  Table cells;    ///< n, seed, lambda_min, Lambda_star, ratio, regime, …
  Table summary;  ///< one row per n
  Table crossing; ///< C, n_star (NA when absent), single_crossing
  double C = 0.0;
  std::optional<std::size_t> n_star;
  /// Median-ratio indicator has at most one 0→1 transition and no 1→0.
  bool single_crossing = true;
  std::vector<double> above_fraction;
  std::vector<double> iqr_param_error;
};

struct ResultB {
  Table above;     ///< one row per seed
  Table below;     ///< one row per rho
  Table gaussian;  ///< analytic cross-check
  double mu_min = 0.0;
  double lambda_min_population = 0.0;
  double C_KL_prime = 0.0;
};

struct ResultC {
  Table cells;
  Table summary;   ///< one row per (arm, sigma)
  Table crossing;  ///< sigma_star (NA when absent), control_max_z
  std::optional<double> sigma_star;
  /// max over σ of |mean λ_min(σ) − mean λ_min(0)| / (3·SE) for the control.
  std::optional<double> control_max_z;
  double C = 0.0;
};

struct ResultD {
  Table runs;    ///< one row per (tau, seed)
  Table traces;  ///< per-step batch λ_min
  Table fit;     ///< slope, intercept, r_squared and the two fractions
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
  double treatment_win_fraction = 0.0;
  double certificate_fraction = 0.0;
};

struct ResultE {
  Table steps;
  std::size_t violations_lower = 0;
  std::size_t violations_upper = 0;
  /// φ_K − λ_min on the frozen matrix after step 200 (or the last step).
  double frozen_gap_at_200 = 0.0;
};

ResultA run_experiment_A(const CommonConfig& common, const ConfigA& cfg);
ResultB run_experiment_B(const CommonConfig& common, const ConfigB& cfg);
ResultC run_experiment_C(const CommonConfig& common, const ConfigC& cfg);
ResultD run_experiment_D(const CommonConfig& common, const ConfigD& cfg);
ResultE run_experiment_E(const CommonConfig& common, const ConfigE& cfg);

/// Runs the configured experiment and returns its tables.
std::vector<Table> run_experiment(const ExperimentConfig& config);

}  // namespace fisherlab

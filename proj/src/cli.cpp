#include "fisherlab/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "fisherlab/errors.hpp"
#include "fisherlab/fisher.hpp"
#include "fisherlab/harness.hpp"
#include "fisherlab/kernels.hpp"
#include "fisherlab/rng.hpp"
#include "fisherlab/svg.hpp"

namespace fisherlab {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json to_json(const SymMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.dim(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.dim(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const FisherEstimate& e) {
  return {{"matrix", to_json(e.matrix)},       {"estimator", std::string(to_string(e.estimator))},
          {"n", e.n},                          {"batches", e.batches},
          {"sigma", e.sigma},                  {"theta", e.theta}};
}

json to_json(const ThresholdReport& r) {
  const ThresholdInputs& in = r.inputs;
  return {{"lambda_min", r.lambda_min},
          {"Lambda_star", r.Lambda_star},
          {"regime", std::string(to_string(r.regime))},
          {"mu", r.mu ? json(*r.mu) : json(nullptr)},
          {"inputs",
           {{"n", in.n}, {"d", in.d}, {"delta", in.delta}, {"C", in.C},
            {"sigma_eff", in.sigma_eff}, {"L_sm", in.L_sm}}}};
}

struct ModelFlags {
  std::string kind = "logistic";
  std::size_t dim = 8;
  double theta_norm = 0.0;
  std::string direction = "diagonal";

  void add_to(CLI::App* app) {
    app->add_option("--model", kind, "gaussian_location | symmetric_gmm | logistic")->required();
    app->add_option("--dim", dim, "parameter dimension")->check(CLI::PositiveNumber);
    app->add_option("--theta-norm", theta_norm, "norm of the true parameter");
    app->add_option("--direction", direction, "diagonal | e1")->check(CLI::IsMember({"diagonal", "e1"}));
  }

  ModelSpec spec() const {
    ModelConfig m;
    try {
      m.kind = model_kind_from_string(kind);
    } catch (const InvalidInput& e) {
      throw ConfigError(e.what());
    }
    m.dim = dim;
    m.theta.assign(dim, 0.0);
    if (direction == "e1")
      m.theta[0] = theta_norm;
    else
      for (double& v : m.theta) v = theta_norm / std::sqrt(static_cast<double>(dim));
    return m.spec();
  }
};

int run_command(const std::string& config_path, const std::string& out_dir, std::ostream& out) {
  const ExperimentConfig config = load_config(config_path);
  fs::path dir = out_dir.empty() ? fs::path(config.common.output_dir) : fs::path(out_dir);
  if (dir.empty()) dir = ".";
  // Everything is computed before the first file is written.
  const std::vector<Table> tables = run_experiment(config);
  fs::create_directories(dir);
  for (const Table& t : tables) {
    const fs::path path = dir / ("exp_" + t.experiment() + "_" + t.name() + ".csv");
    t.write_file(path);
    out << path.string() << '\n';
  }
  return kExitOk;
}

}  // namespace

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Fisher spectral-threshold experiments", "fisherlab"};
  app.require_subcommand(1);

  std::string config_path, out_dir;
  auto* run = app.add_subcommand("run", "run an experiment from a JSON config");
  run->add_option("--config", config_path, "config file")->required();
  run->add_option("--out", out_dir, "output directory (default: output_dir from the config)");

  ModelFlags est_model;
  std::size_t est_n = 1000, est_batches = 1, est_m = 256;
  std::string est_kind = "plain", est_data;
  double est_sigma = 0.0, est_delta = 0.05;
  std::uint64_t est_seed = 1;
  auto* est = app.add_subcommand("estimate", "estimate the Fisher matrix at the true parameter");
  est_model.add_to(est);
  est->add_option("--n", est_n, "sample size")->check(CLI::PositiveNumber);
  est->add_option("--estimator", est_kind, "plain | mom | catoni | smoothed");
  est->add_option("--batches", est_batches, "median-of-means batches")->check(CLI::PositiveNumber);
  est->add_option("--sigma", est_sigma, "smoothing scale");
  est->add_option("--m-smooth", est_m, "smoothing draws")->check(CLI::PositiveNumber);
  est->add_option("--delta", est_delta, "confidence level for catoni");
  est->add_option("--seed", est_seed, "random seed");
  est->add_option("--data", est_data, "dataset CSV to use instead of sampling");

  double th_lambda = 0.0, th_delta = 0.05, th_C = 1.0, th_sigma = 1.0, th_L = 1.0;
  std::size_t th_n = 0, th_d = 0;
  auto* th = app.add_subcommand("threshold", "classify a regime from its inputs");
  th->add_option("--lambda-min", th_lambda, "smallest Fisher eigenvalue")->required();
  th->add_option("--n", th_n, "sample size")->required();
  th->add_option("--d", th_d, "dimension")->required();
  th->add_option("--delta", th_delta, "failure probability")->required();
  th->add_option("--C", th_C, "radius constant");
  th->add_option("--sigma-eff", th_sigma, "effective noise scale");
  th->add_option("--l-sm", th_L, "smoothness constant");

  ModelFlags cal_model;
  double cal_delta = 0.05;
  std::vector<std::size_t> cal_grid{100, 400, 1600};
  std::size_t cal_reps = 200;
  std::uint64_t cal_seed = 1;
  auto* cal = app.add_subcommand("calibrate", "calibrate the radius constant C");
  cal_model.add_to(cal);
  cal->add_option("--delta", cal_delta, "failure probability")->required();
  cal->add_option("--n-grid", cal_grid, "sample sizes")->delimiter(',');
  cal->add_option("--reps", cal_reps, "replications per n")->check(CLI::PositiveNumber);
  cal->add_option("--seed", cal_seed, "random seed");

  std::string plot_table, plot_out;
  char plot_kind = 'a';
  auto* plot = app.add_subcommand("plot", "render a result table as SVG");
  plot->add_option("--table", plot_table, "result CSV")->required();
  plot->add_option("--kind", plot_kind, "a | b | c | d | e")->required()->check(
      CLI::IsMember({'a', 'b', 'c', 'd', 'e'}));
  plot->add_option("--out", plot_out, "SVG path (default: stdout)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    kernels::apply_thread_env();
    if (*run) return run_command(config_path, out_dir, out);
    if (*est) {
      const ModelSpec model = est_model.spec();
      Estimator kind;
      try {
        kind = estimator_from_string(est_kind);
      } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
      }
      Dataset data;
      if (est_data.empty()) {
        data = sample(model, est_n, est_seed);
      } else {
        std::ifstream in(est_data);
        if (!in) throw ConfigError("cannot read dataset '" + est_data + "'");
        data = read_dataset_csv(in);
      }
      FisherEstimate e;
      if (kind == Estimator::Smoothed) {
        e = smoothed_fisher(model, model.theta_star, data, est_sigma, est_m, mix_seed(est_seed, 2));
      } else {
        const ScoreSet scores = compute_scores(model, model.theta_star, data);
        if (kind == Estimator::Plain) e = empirical_fisher(scores);
        if (kind == Estimator::MoM) e = mom_fisher(scores, est_batches);
        if (kind == Estimator::Catoni) e = catoni_fisher_auto(scores, est_delta);
      }
      out << to_json(e).dump(2) << '\n';
      return kExitOk;
    }
    if (*th) {
      ThresholdReport r;
      try {
        r = classify_regime(th_lambda, fluctuation_radius(th_n, th_d, th_delta, th_sigma, th_C), th_L);
      } catch (const InvalidInput& e) {
        throw ConfigError(e.what());
      }
      r.inputs = {th_n, th_d, th_delta, th_C, th_sigma, th_L};
      out << to_json(r).dump(2) << '\n';
      return kExitOk;
    }
    if (*cal) {
      std::sort(cal_grid.begin(), cal_grid.end());
      const double C = calibrate_C(cal_model.spec(), cal_grid, cal_delta, cal_reps, cal_seed);
      out << C << '\n';
      return kExitOk;
    }
    if (*plot) {
      const Table t = Table::read_file(plot_table);
      const std::string svg = render_svg(t, default_plot(t, plot_kind));
      if (plot_out.empty()) {
        out << svg;
      } else {
        std::ofstream f(plot_out, std::ios::binary);
        if (!f) throw ConfigError("cannot write '" + plot_out + "'");
        f << svg;
      }
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    err << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << e.what() << '\n';
    return kExitFailure;
  }
  return kExitUsage;
}

int cli_main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return cli_main(args, std::cout, std::cerr);
}

}  // namespace fisherlab

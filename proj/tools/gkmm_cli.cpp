#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gkmm/assembly.hpp"
#include "gkmm/estimators.hpp"
#include "gkmm/solver.hpp"
#include "gkmm/synthlab.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

int g_log_level = 0;  // 0 error, 1 info, 2 debug

void init_log_level() {
  const char* env = std::getenv("GKMM_LOG");
  if (!env) return;
  const std::string v = env;
  if (v == "info") g_log_level = 1;
  else if (v == "debug") g_log_level = 2;
}

void log_info(const std::string& msg) {
  if (g_log_level >= 1) std::cerr << "[info] " << msg << "\n";
}

void reject_unknown_keys(const json& obj, const std::vector<std::string>& allowed,
                         const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (std::find(allowed.begin(), allowed.end(), it.key()) == allowed.end()) {
      throw gkmm::Error(gkmm::ErrorKind::ConfigError,
                        "unknown key '" + it.key() + "' in " + where);
    }
  }
}

gkmm::KernelConfig parse_kernel(const json& j) {
  reject_unknown_keys(j, {"family", "sigma"}, "kernel");
  gkmm::KernelConfig cfg;
  const std::string family = j.value("family", "rbf");
  if (family == "rbf") cfg.family = gkmm::KernelFamily::RBF;
  else if (family == "laplacian") cfg.family = gkmm::KernelFamily::Laplacian;
  else throw gkmm::Error(gkmm::ErrorKind::ConfigError, "unknown kernel family " + family);
  if (j.contains("sigma") && !j["sigma"].is_null()) {
    cfg.sigma = j["sigma"].get<double>();
  }
  return cfg;
}

ordered_json kernel_to_json(const gkmm::KernelConfig& cfg) {
  ordered_json j;
  j["family"] = cfg.family == gkmm::KernelFamily::RBF ? "rbf" : "laplacian";
  if (cfg.sigma) j["sigma"] = *cfg.sigma; else j["sigma"] = nullptr;
  return j;
}

gkmm::SolverSettings parse_solver(const json& j) {
  reject_unknown_keys(
      j, {"max_iterations", "tol_primal", "tol_dual", "step_rule", "accelerated"},
      "solver");
  gkmm::SolverSettings s;
  s.max_iterations = j.value("max_iterations", s.max_iterations);
  s.tol_primal = j.value("tol_primal", s.tol_primal);
  s.tol_dual = j.value("tol_dual", s.tol_dual);
  s.accelerated = j.value("accelerated", s.accelerated);
  const std::string rule = j.value("step_rule", "fixed-lipschitz");
  if (rule == "fixed-lipschitz") s.step_rule = gkmm::StepRule::FixedLipschitz;
  else if (rule == "backtracking") s.step_rule = gkmm::StepRule::BacktrackingLineSearch;
  else throw gkmm::Error(gkmm::ErrorKind::ConfigError, "unknown step_rule " + rule);
  return s;
}

ordered_json solver_to_json(const gkmm::SolverSettings& s) {
  ordered_json j;
  j["max_iterations"] = s.max_iterations;
  j["tol_primal"] = s.tol_primal;
  j["tol_dual"] = s.tol_dual;
  j["step_rule"] = s.step_rule == gkmm::StepRule::FixedLipschitz ? "fixed-lipschitz"
                                                                 : "backtracking";
  j["accelerated"] = s.accelerated;
  return j;
}

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

gkmm::ExperimentConfig parse_experiment_config(const json& j) {
  reject_unknown_keys(j,
                      {"version", "scenario", "train_blocks", "test_blocks", "gamma",
                       "omega", "alpha", "kernel", "bound_B", "eps", "seed",
                       "noise_stdev", "solver"},
                      "config");
  if (j.value("version", 0) != 1) {
    throw gkmm::Error(gkmm::ErrorKind::ConfigError, "config version must be 1");
  }
  const auto scenario = gkmm::scenario_from_name(j.value("scenario", ""));
  if (!scenario) {
    throw gkmm::Error(gkmm::ErrorKind::ConfigError, "unknown or missing scenario");
  }
  gkmm::ExperimentConfig cfg = gkmm::default_config(*scenario, j.value("seed", 0ull));

  auto parse_blocks = [](const json& arr, const std::string& where) {
    std::vector<gkmm::BlockSpec> blocks;
    for (const auto& b : arr) {
      reject_unknown_keys(b, {"mean", "stdev", "n"}, where);
      gkmm::BlockSpec spec;
      spec.mean = to_vector(b.at("mean").get<std::vector<double>>());
      spec.stdev = b.at("stdev").get<double>();
      spec.n = b.at("n").get<int>();
      blocks.push_back(std::move(spec));
    }
    return blocks;
  };
  if (j.contains("train_blocks")) cfg.train_blocks = parse_blocks(j["train_blocks"], "train_blocks");
  if (j.contains("test_blocks")) cfg.test_blocks = parse_blocks(j["test_blocks"], "test_blocks");
  if (j.contains("gamma") && !j["gamma"].is_null())
    cfg.gamma = to_vector(j["gamma"].get<std::vector<double>>());
  if (j.contains("omega") && !j["omega"].is_null())
    cfg.omega = to_vector(j["omega"].get<std::vector<double>>());
  cfg.alpha = j.value("alpha", 0.0);
  if (j.contains("kernel")) cfg.kernel = parse_kernel(j["kernel"]);
  cfg.bound_B = j.value("bound_B", cfg.bound_B);
  if (j.contains("eps") && !j["eps"].is_null()) cfg.eps = j["eps"].get<double>();
  cfg.noise_stdev = j.value("noise_stdev", cfg.noise_stdev);
  if (j.contains("solver")) cfg.solver = parse_solver(j["solver"]);
  return cfg;
}

ordered_json experiment_config_to_json(const gkmm::ExperimentConfig& cfg) {
  ordered_json j;
  j["version"] = 1;
  j["scenario"] = gkmm::scenario_name(cfg.scenario);
  auto blocks_to_json = [](const std::vector<gkmm::BlockSpec>& blocks) {
    ordered_json arr = ordered_json::array();
    for (const auto& b : blocks) {
      ordered_json o;
      o["mean"] = std::vector<double>(b.mean.data(), b.mean.data() + b.mean.size());
      o["stdev"] = b.stdev;
      o["n"] = b.n;
      arr.push_back(o);
    }
    return arr;
  };
  j["train_blocks"] = blocks_to_json(cfg.train_blocks);
  j["test_blocks"] = blocks_to_json(cfg.test_blocks);
  if (cfg.gamma) {
    j["gamma"] = std::vector<double>(cfg.gamma->data(), cfg.gamma->data() + cfg.gamma->size());
  } else {
    j["gamma"] = nullptr;
  }
  if (cfg.omega) {
    j["omega"] = std::vector<double>(cfg.omega->data(), cfg.omega->data() + cfg.omega->size());
  } else {
    j["omega"] = nullptr;
  }
  j["alpha"] = cfg.alpha;
  j["kernel"] = kernel_to_json(cfg.kernel);
  j["bound_B"] = cfg.bound_B;
  if (cfg.eps > 0.0) j["eps"] = cfg.eps; else j["eps"] = nullptr;
  j["seed"] = cfg.seed;
  j["noise_stdev"] = cfg.noise_stdev;
  j["solver"] = solver_to_json(cfg.solver);
  return j;
}

Eigen::MatrixXd read_csv_matrix(const std::string& path, bool has_header) {
  std::ifstream in(path);
  if (!in) throw gkmm::Error(gkmm::ErrorKind::IoError, "cannot open " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (first && has_header) {
      first = false;
      continue;
    }
    first = false;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw gkmm::Error(gkmm::ErrorKind::ConfigError,
                          "non-numeric cell '" + cell + "' in " + path);
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw gkmm::Error(gkmm::ErrorKind::ConfigError, "ragged CSV " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) {
    throw gkmm::Error(gkmm::ErrorKind::EmptyBlock, "no samples in " + path);
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                    static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rows[static_cast<size_t>(r)][static_cast<size_t>(c)];
  return m;
}

ordered_json solution_to_json(const gkmm::Solution& sol) {
  ordered_json j;
  j["status"] = gkmm::solve_status_name(sol.status);
  j["iterations"] = sol.iterations;
  j["objective"] = sol.objective;
  j["primal_residual"] = sol.primal_residual;
  j["dual_residual"] = sol.dual_residual;
  return j;
}

struct EstimateJob {
  std::vector<std::string> train_files;
  std::vector<std::string> test_files;
  std::optional<std::vector<double>> gamma;
  std::optional<std::vector<double>> omega;
  double alpha = 0.0;
  gkmm::KernelConfig kernel;
  double bound_B = 1000.0;
  double eps = 0.0;
  bool csv_has_header = false;
  gkmm::SolverSettings solver;
  ordered_json echo;
};

EstimateJob parse_estimate_config(const json& j) {
  reject_unknown_keys(j,
                      {"version", "train", "test", "alpha", "kernel", "bound_B", "eps",
                       "csv_has_header", "solver", "seed"},
                      "config");
  if (j.value("version", 0) != 1) {
    throw gkmm::Error(gkmm::ErrorKind::ConfigError, "config version must be 1");
  }
  EstimateJob job;
  auto parse_side = [](const json& side, const std::string& where,
                       std::vector<std::string>& files,
                       std::optional<std::vector<double>>& weights) {
    reject_unknown_keys(side, {"files", "weights"}, where);
    files = side.at("files").get<std::vector<std::string>>();
    if (files.empty()) {
      throw gkmm::Error(gkmm::ErrorKind::EmptyBlock, where + ".files is empty");
    }
    if (side.contains("weights") && !side["weights"].is_null()) {
      weights = side["weights"].get<std::vector<double>>();
      if (weights->size() != files.size()) {
        throw gkmm::Error(gkmm::ErrorKind::DimensionMismatch,
                          where + ".weights length != files length");
      }
    }
  };
  parse_side(j.at("train"), "train", job.train_files, job.gamma);
  parse_side(j.at("test"), "test", job.test_files, job.omega);
  job.alpha = j.value("alpha", 0.0);
  if (j.contains("kernel")) job.kernel = parse_kernel(j["kernel"]);
  job.bound_B = j.value("bound_B", 1000.0);
  if (j.contains("eps") && !j["eps"].is_null()) job.eps = j["eps"].get<double>();
  job.csv_has_header = j.value("csv_has_header", false);
  if (j.contains("solver")) job.solver = parse_solver(j["solver"]);
  job.echo = ordered_json(j);

  // weight sanity happens before any file is touched (fail fast)
  auto check_weights = [&](const std::optional<std::vector<double>>& w, double target,
                           const std::string& name) {
    if (!w) return;
    double sum = 0.0;
    for (double v : *w) sum += v;
    if (std::abs(sum - target) > gkmm::kWeightSumTol) {
      throw gkmm::Error(gkmm::ErrorKind::WeightSumError,
                        name + " weights sum to " + std::to_string(sum));
    }
  };
  check_weights(job.gamma, 1.0 - job.alpha, "train");
  check_weights(job.omega, 1.0, "test");
  return job;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw gkmm::Error(gkmm::ErrorKind::IoError, "cannot open " + path.string());
  out << text;
}

int run_estimate(const std::string& config_path, const std::string& output_dir,
                 const std::optional<std::string>& trace_path) {
  std::ifstream in(config_path);
  if (!in) throw gkmm::Error(gkmm::ErrorKind::IoError, "cannot open " + config_path);
  json raw;
  try {
    raw = json::parse(in);
  } catch (const json::exception& e) {
    throw gkmm::Error(gkmm::ErrorKind::ConfigError, std::string("bad JSON: ") + e.what());
  }
  EstimateJob job = parse_estimate_config(raw);
  if (trace_path) job.solver.trace_path = trace_path;

  gkmm::PartitionedData train, test;
  for (const auto& f : job.train_files)
    train.blocks.push_back(read_csv_matrix(f, job.csv_has_header));
  for (const auto& f : job.test_files)
    test.blocks.push_back(read_csv_matrix(f, job.csv_has_header));
  train.weights = job.gamma ? to_vector(*job.gamma)
                            : (1.0 - job.alpha) *
                                  gkmm::size_proportional_weights(train.blocks);
  test.weights = job.omega ? to_vector(*job.omega)
                           : gkmm::size_proportional_weights(test.blocks);

  gkmm::PartitionedData fit_train = train;
  if (job.alpha > 0.0) {
    Eigen::MatrixXd pool = gkmm::build_basis(test);
    fit_train = gkmm::alpha_relative_config(train, pool, job.alpha);
  }
  log_info("fitting G-KMM: " + std::to_string(train.blocks.size()) + " train blocks, " +
           std::to_string(test.blocks.size()) + " test blocks");
  const gkmm::FitReport report =
      gkmm::fit_gkmm(fit_train, test, job.kernel, job.bound_B, job.eps, job.solver);

  fs::create_directories(output_dir);
  write_text(fs::path(output_dir) / "model.json", gkmm::model_to_json(report.model));
  std::vector<Eigen::VectorXd> weights(report.train_weights.begin(),
                                       report.train_weights.begin() +
                                           static_cast<long>(train.blocks.size()));
  gkmm::write_weights_csv((fs::path(output_dir) / "weights.csv").string(), train,
                          weights);

  ordered_json summary;
  summary["version"] = 1;
  summary["config"] = job.echo;
  summary["solver"] = solution_to_json(report.solution);
  summary["loss_uniform"] = report.loss_uniform;
  summary["loss_fitted"] = report.loss_fitted;
  write_text(fs::path(output_dir) / "summary.json", summary.dump(2) + "\n");

  return report.solution.status == gkmm::SolveStatus::MaxIter ? 2 : 0;
}

int run_demo(const std::string& scenario_name, uint64_t seed,
             const std::string& output_dir, bool plot,
             const std::optional<std::string>& config_path,
             const std::optional<std::string>& trace_path) {
  gkmm::ExperimentConfig cfg;
  if (config_path) {
    std::ifstream in(*config_path);
    if (!in) throw gkmm::Error(gkmm::ErrorKind::IoError, "cannot open " + *config_path);
    json raw;
    try {
      raw = json::parse(in);
    } catch (const json::exception& e) {
      throw gkmm::Error(gkmm::ErrorKind::ConfigError, std::string("bad JSON: ") + e.what());
    }
    cfg = parse_experiment_config(raw);
  } else {
    const auto scenario = gkmm::scenario_from_name(scenario_name);
    if (!scenario) {
      throw gkmm::Error(gkmm::ErrorKind::ConfigError,
                        "unknown scenario " + scenario_name);
    }
    cfg = gkmm::default_config(*scenario, seed);
  }
  if (seed != 0) cfg.seed = seed;
  if (trace_path) cfg.solver.trace_path = trace_path;

  log_info(std::string("running scenario ") + gkmm::scenario_name(cfg.scenario) +
           " seed " + std::to_string(cfg.seed));
  const gkmm::ScenarioResult result = gkmm::run_scenario(cfg);

  fs::create_directories(output_dir);
  gkmm::write_weights_csv(
      (fs::path(output_dir) / "weights.csv").string(), result.train,
      result.weights_gkmm,
      result.weights_kmm ? &*result.weights_kmm : nullptr);

  ordered_json summary;
  summary["version"] = 1;
  summary["config"] = experiment_config_to_json(result.config);
  summary["solver"] = solution_to_json(result.solution);
  summary["loss_uniform"] = result.loss_uniform;
  summary["loss_fitted"] = result.loss_fitted;
  if (result.mae_weighted) summary["mae_weighted"] = *result.mae_weighted;
  if (result.mae_unweighted) summary["mae_unweighted"] = *result.mae_unweighted;
  write_text(fs::path(output_dir) / "summary.json", summary.dump(2) + "\n");

  if (plot) {
    gkmm::write_scatter_svg((fs::path(output_dir) / "scatter.svg").string(), result);
  }
  return result.solution.status == gkmm::SolveStatus::MaxIter ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  init_log_level();
  CLI::App app{"Generalized KMM density ratio estimation"};
  app.require_subcommand(1);

  std::string config_path, output_dir = ".";
  std::optional<std::string> trace_path;
  std::string scenario = "multi-train";
  uint64_t seed = 0;
  bool plot = false;
  std::string demo_config;

  auto* estimate = app.add_subcommand("estimate", "fit a density ratio model");
  estimate->add_option("--config", config_path, "job config JSON")->required();
  estimate->add_option("--output", output_dir, "output directory");
  estimate->add_option("--solver-trace", trace_path, "iterate trace CSV path");

  auto* demo = app.add_subcommand("demo", "run a synthetic scenario");
  demo->add_option("--scenario", scenario,
                   "clusters|multi-train|multi-test|multi-both");
  demo->add_option("--seed", seed, "RNG seed");
  demo->add_option("--output", output_dir, "output directory");
  demo->add_flag("--plot", plot, "emit scatter.svg");
  demo->add_option("--config", demo_config, "scenario config JSON (overrides defaults)");
  std::optional<std::string> demo_trace;
  demo->add_option("--solver-trace", demo_trace, "iterate trace CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (estimate->parsed()) {
      return run_estimate(config_path, output_dir, trace_path);
    }
    return run_demo(scenario, seed, output_dir, plot,
                    demo_config.empty() ? std::nullopt
                                        : std::optional<std::string>(demo_config),
                    demo_trace);
  } catch (const gkmm::Error& e) {
    std::cerr << "code=" << gkmm::error_kind_name(e.kind()) << " msg=" << e.what()
              << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "code=Internal msg=" << e.what() << "\n";
    return 1;
  }
}

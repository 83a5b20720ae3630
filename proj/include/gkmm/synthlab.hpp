#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gkmm/core.hpp"
#include "gkmm/solver.hpp"

namespace gkmm {

/// Counter-based integer-state generator (splitmix64 constants), so identical
/// seeds give identical streams on every platform. Gaussian variates come
/// from Box-Muller on the uniform stream.
class RngStream {
 public:
  explicit RngStream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double gaussian();

 private:
  uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

enum class Scenario { Clusters, MultiTrain, MultiTest, MultiBoth };

const char* scenario_name(Scenario s);
std::optional<Scenario> scenario_from_name(const std::string& name);

struct BlockSpec {
  Eigen::VectorXd mean;
  double stdev = 1.0;
  int n = 0;
};

struct ExperimentConfig {
  Scenario scenario = Scenario::MultiTrain;
  std::vector<BlockSpec> train_blocks;
  std::vector<BlockSpec> test_blocks;
  std::optional<Eigen::VectorXd> gamma;  // default: size-proportional
  std::optional<Eigen::VectorXd> omega;  // default: size-proportional
  double alpha = 0.0;
  KernelConfig kernel;
  double bound_B = 1000.0;
  double eps = 0.0;  // 0 -> default_eps(total train size)
  uint64_t seed = 0;
  double noise_stdev = 0.1;
  SolverSettings solver;
};

/// Paper-default configuration for a scenario.
ExperimentConfig default_config(Scenario scenario, uint64_t seed);

/// n i.i.d. rows of an isotropic Gaussian.
Eigen::MatrixXd gen_gaussian_block(const Eigen::VectorXd& mean, double stdev,
                                   int n, RngStream& rng);

/// The four-cluster 2-D configuration: two train blobs, two test blobs.
std::pair<PartitionedData, PartitionedData> gen_clusters(const ExperimentConfig& config,
                                                         RngStream& rng);

/// y_i = sinc(x_i) + noise, normalized sinc sin(pi x)/(pi x), sinc(0) = 1.
Eigen::VectorXd sinc_target(const Eigen::MatrixXd& X, double noise_stdev,
                            RngStream& rng);

/// Weighted least squares fit of y = a*x + c (1-D inputs), then MAE on the
/// test set. weights = nullptr means the unweighted fit.
double weighted_regression_mae(const Eigen::MatrixXd& train_X,
                               const Eigen::VectorXd& train_y,
                               const Eigen::MatrixXd& test_X,
                               const Eigen::VectorXd& test_y,
                               const Eigen::VectorXd* weights);

struct ScenarioResult {
  ExperimentConfig config;
  PartitionedData train;
  PartitionedData test;
  Eigen::VectorXd train_y;  // regression scenarios only
  Eigen::VectorXd test_y;
  std::vector<Eigen::VectorXd> weights_gkmm;  // r_hat per train partition
  std::optional<Eigen::VectorXd> weights_kmm;  // clusters scenario, pooled train
  std::optional<double> mae_weighted;
  std::optional<double> mae_unweighted;
  Solution solution;
  double loss_uniform = 0.0;
  double loss_fitted = 0.0;
};

/// Generates the data, fits G-KMM (and classical KMM for the clusters
/// scenario), and runs the weighted/unweighted regression comparison.
ScenarioResult run_scenario(const ExperimentConfig& config);

/// weights.csv: partition,index,x0..x{d-1},weight[,weight_kmm]; values with
/// 9 significant digits.
void write_weights_csv(const std::string& path, const PartitionedData& train,
                       const std::vector<Eigen::VectorXd>& weights,
                       const Eigen::VectorXd* kmm_weights = nullptr);

/// Decorative scatter plot of train (colored by weight) and test samples.
void write_scatter_svg(const std::string& path, const ScenarioResult& result);

}  // namespace gkmm

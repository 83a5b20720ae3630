#include "gkmm/synthlab.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>

#include "gkmm/estimators.hpp"

namespace gkmm {

double RngStream::gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] keeps the log finite
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

const char* scenario_name(Scenario s) {
  switch (s) {
    case Scenario::Clusters: return "clusters";
    case Scenario::MultiTrain: return "multi-train";
    case Scenario::MultiTest: return "multi-test";
    case Scenario::MultiBoth: return "multi-both";
  }
  return "unknown";
}

std::optional<Scenario> scenario_from_name(const std::string& name) {
  if (name == "clusters") return Scenario::Clusters;
  if (name == "multi-train") return Scenario::MultiTrain;
  if (name == "multi-test") return Scenario::MultiTest;
  if (name == "multi-both") return Scenario::MultiBoth;
  return std::nullopt;
}

namespace {

Eigen::VectorXd vec1(double x) {
  Eigen::VectorXd v(1);
  v << x;
  return v;
}

Eigen::VectorXd vec2(double x, double y) {
  Eigen::VectorXd v(2);
  v << x, y;
  return v;
}

}  // namespace

ExperimentConfig default_config(Scenario scenario, uint64_t seed) {
  ExperimentConfig cfg;
  cfg.scenario = scenario;
  cfg.seed = seed;
  // scenario Gram matrices are large and nearly singular; plain fixed-step
  // descent crawls there, so the demos default to the accelerated solver
  cfg.solver.accelerated = true;
  cfg.solver.max_iterations = 100000;
  switch (scenario) {
    case Scenario::Clusters:
      cfg.train_blocks = {{vec2(-2.0, 0.0), 0.6, 200}, {vec2(2.0, 0.0), 0.6, 1000}};
      cfg.test_blocks = {{vec2(0.0, 2.0), 0.9, 1000}, {vec2(0.0, -2.0), 0.6, 300}};
      cfg.kernel.sigma = 1.0;
      break;
    case Scenario::MultiTrain:
      cfg.train_blocks = {{vec1(-0.5), 0.1, 200},
                          {vec1(0.5), 0.1, 150},
                          {vec1(1.5), 0.1, 100}};
      cfg.test_blocks = {{vec1(1.0), 0.4, 30}};
      cfg.kernel.sigma = 0.1;
      break;
    case Scenario::MultiTest:
      cfg.train_blocks = {{vec1(1.0), 0.25, 300}};
      cfg.test_blocks = {{vec1(-0.5), 0.15, 100}, {vec1(1.5), 0.15, 100}};
      cfg.kernel.sigma = 100.0;
      break;
    case Scenario::MultiBoth:
      cfg.train_blocks = {{vec1(-0.5), 0.1, 200},
                          {vec1(0.5), 0.1, 150},
                          {vec1(1.5), 0.1, 100}};
      cfg.test_blocks = {{vec1(-0.5), 0.15, 100}, {vec1(1.5), 0.15, 100}};
      cfg.kernel.sigma = 10.0;
      break;
  }
  return cfg;
}

Eigen::MatrixXd gen_gaussian_block(const Eigen::VectorXd& mean, double stdev,
                                   int n, RngStream& rng) {
  if (n < 1) throw Error(ErrorKind::EmptyBlock, "block size must be >= 1");
  if (stdev <= 0.0) throw Error(ErrorKind::ConfigError, "stdev must be positive");
  Eigen::MatrixXd out(n, mean.size());
  for (int i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < mean.size(); ++c) {
      out(i, c) = mean[c] + stdev * rng.gaussian();
    }
  }
  return out;
}

std::pair<PartitionedData, PartitionedData> gen_clusters(const ExperimentConfig& config,
                                                         RngStream& rng) {
  PartitionedData train, test;
  for (const auto& spec : config.train_blocks) {
    train.blocks.push_back(gen_gaussian_block(spec.mean, spec.stdev, spec.n, rng));
  }
  for (const auto& spec : config.test_blocks) {
    test.blocks.push_back(gen_gaussian_block(spec.mean, spec.stdev, spec.n, rng));
  }
  train.weights = config.gamma ? *config.gamma : size_proportional_weights(train.blocks);
  test.weights = config.omega ? *config.omega : size_proportional_weights(test.blocks);
  return {train, test};
}

Eigen::VectorXd sinc_target(const Eigen::MatrixXd& X, double noise_stdev,
                            RngStream& rng) {
  if (X.cols() != 1) {
    throw Error(ErrorKind::DimensionMismatch, "sinc_target needs 1-D inputs");
  }
  Eigen::VectorXd y(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const double x = X(i, 0);
    const double pix = std::numbers::pi * x;
    const double sinc = x == 0.0 ? 1.0 : std::sin(pix) / pix;
    y[i] = sinc + (noise_stdev > 0.0 ? noise_stdev * rng.gaussian() : 0.0);
  }
  return y;
}

double weighted_regression_mae(const Eigen::MatrixXd& train_X,
                               const Eigen::VectorXd& train_y,
                               const Eigen::MatrixXd& test_X,
                               const Eigen::VectorXd& test_y,
                               const Eigen::VectorXd* weights) {
  if (train_X.cols() != 1 || test_X.cols() != 1) {
    throw Error(ErrorKind::DimensionMismatch, "regression expects 1-D inputs");
  }
  if (train_X.rows() != train_y.size() || test_X.rows() != test_y.size()) {
    throw Error(ErrorKind::DimensionMismatch, "X/y length mismatch");
  }
  Eigen::VectorXd w = Eigen::VectorXd::Ones(train_X.rows());
  if (weights) {
    if (weights->size() != train_X.rows()) {
      throw Error(ErrorKind::DimensionMismatch, "weight length mismatch");
    }
    if (weights->minCoeff() < 0.0) {
      throw Error(ErrorKind::ConfigError, "weights must be non-negative");
    }
    if (weights->maxCoeff() <= 0.0) {
      throw Error(ErrorKind::AllZeroWeights, "all sample weights are zero");
    }
    w = *weights;
  }

  // weighted normal equations for y = a*x + c
  const Eigen::VectorXd x = train_X.col(0);
  const double sw = w.sum();
  const double sx = w.dot(x);
  const double sxx = w.dot(x.cwiseProduct(x));
  const double sy = w.dot(train_y);
  const double sxy = w.dot(x.cwiseProduct(train_y));
  const double det = sw * sxx - sx * sx;
  if (std::abs(det) <= 1e-12 * std::max(1.0, sw * sxx)) {
    throw Error(ErrorKind::DegenerateDesign, "all train x effectively identical");
  }
  const double a = (sw * sxy - sx * sy) / det;
  const double c = (sxx * sy - sx * sxy) / det;

  return (test_y.array() - (a * test_X.col(0).array() + c)).abs().mean();
}

ScenarioResult run_scenario(const ExperimentConfig& config) {
  RngStream rng(config.seed);

  ScenarioResult result;
  result.config = config;
  auto [train, test] = gen_clusters(config, rng);
  if (config.alpha > 0.0 && !config.gamma) {
    // size-proportional gammas rescaled so alpha + sum(gamma) = 1
    train.weights *= (1.0 - config.alpha);
  }
  result.train = train;
  result.test = test;

  const bool regression = config.scenario != Scenario::Clusters;
  Eigen::MatrixXd train_pool(train.total_rows(), train.dim());
  {
    Eigen::Index row = 0;
    for (const auto& blk : train.blocks) {
      train_pool.middleRows(row, blk.rows()) = blk;
      row += blk.rows();
    }
  }
  Eigen::MatrixXd test_pool(test.total_rows(), test.dim());
  {
    Eigen::Index row = 0;
    for (const auto& blk : test.blocks) {
      test_pool.middleRows(row, blk.rows()) = blk;
      row += blk.rows();
    }
  }
  if (regression) {
    result.train_y = sinc_target(train_pool, config.noise_stdev, rng);
    result.test_y = sinc_target(test_pool, config.noise_stdev, rng);
  }

  PartitionedData fit_train = train;
  if (config.alpha > 0.0) {
    fit_train = alpha_relative_config(train, test_pool, config.alpha);
  }

  const FitReport report = fit_gkmm(fit_train, test, config.kernel, config.bound_B,
                                    config.eps, config.solver);
  result.solution = report.solution;
  result.loss_uniform = report.loss_uniform;
  result.loss_fitted = report.loss_fitted;
  // only the original train partitions are reported; the alpha pseudo-block is
  // internal to the denominator mixture
  result.weights_gkmm.assign(report.train_weights.begin(),
                             report.train_weights.begin() +
                                 static_cast<long>(train.blocks.size()));

  if (config.scenario == Scenario::Clusters) {
    result.weights_kmm = fit_classical_kmm(train_pool, test_pool, config.kernel,
                                           config.bound_B, config.eps, config.solver);
  }

  if (regression) {
    Eigen::VectorXd w(train.total_rows());
    Eigen::Index row = 0;
    for (const auto& part : result.weights_gkmm) {
      w.segment(row, part.size()) = part;
      row += part.size();
    }
    result.mae_weighted = weighted_regression_mae(train_pool, result.train_y,
                                                  test_pool, result.test_y, &w);
    result.mae_unweighted = weighted_regression_mae(train_pool, result.train_y,
                                                    test_pool, result.test_y, nullptr);
  }
  return result;
}

namespace {

std::string fmt9(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

}  // namespace

void write_weights_csv(const std::string& path, const PartitionedData& train,
                       const std::vector<Eigen::VectorXd>& weights,
                       const Eigen::VectorXd* kmm_weights) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path);
  const Eigen::Index d = train.dim();
  out << "partition,index";
  for (Eigen::Index c = 0; c < d; ++c) out << ",x" << c;
  out << (kmm_weights ? ",weight_gkmm,weight_kmm" : ",weight") << '\n';
  Eigen::Index pooled = 0;
  for (size_t p = 0; p < train.blocks.size(); ++p) {
    const auto& blk = train.blocks[p];
    for (Eigen::Index i = 0; i < blk.rows(); ++i, ++pooled) {
      out << p << ',' << i;
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << fmt9(blk(i, c));
      out << ',' << fmt9(weights[p][i]);
      if (kmm_weights) out << ',' << fmt9((*kmm_weights)[pooled]);
      out << '\n';
    }
  }
}

void write_scatter_svg(const std::string& path, const ScenarioResult& result) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::IoError, "cannot open " + path);

  const double W = 640, H = 480, margin = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  const bool two_d = result.train.dim() >= 2;
  auto consider = [&](double x, double y) {
    xmin = std::min(xmin, x); xmax = std::max(xmax, x);
    ymin = std::min(ymin, y); ymax = std::max(ymax, y);
  };
  auto point_y = [&](const PartitionedData& pd, const Eigen::VectorXd* ys,
                     size_t p, Eigen::Index i, Eigen::Index pooled) {
    if (two_d) return pd.blocks[p](i, 1);
    return ys && ys->size() > 0 ? (*ys)[pooled] : 0.0;
  };
  Eigen::Index pooled = 0;
  for (size_t p = 0; p < result.train.blocks.size(); ++p)
    for (Eigen::Index i = 0; i < result.train.blocks[p].rows(); ++i, ++pooled)
      consider(result.train.blocks[p](i, 0),
               point_y(result.train, &result.train_y, p, i, pooled));
  pooled = 0;
  for (size_t p = 0; p < result.test.blocks.size(); ++p)
    for (Eigen::Index i = 0; i < result.test.blocks[p].rows(); ++i, ++pooled)
      consider(result.test.blocks[p](i, 0),
               point_y(result.test, &result.test_y, p, i, pooled));
  const double xr = std::max(xmax - xmin, 1e-9), yr = std::max(ymax - ymin, 1e-9);
  auto sx = [&](double x) { return margin + (x - xmin) / xr * (W - 2 * margin); };
  auto sy = [&](double y) { return H - margin - (y - ymin) / yr * (H - 2 * margin); };

  double wmax = 1e-300;
  for (const auto& part : result.weights_gkmm) wmax = std::max(wmax, part.maxCoeff());

  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << W << "' height='" << H
      << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
  pooled = 0;
  for (size_t p = 0; p < result.train.blocks.size(); ++p) {
    for (Eigen::Index i = 0; i < result.train.blocks[p].rows(); ++i, ++pooled) {
      const double t = result.weights_gkmm[p][i] / wmax;
      const int red = static_cast<int>(255 * t);
      out << "<circle cx='" << fmt9(sx(result.train.blocks[p](i, 0))) << "' cy='"
          << fmt9(sy(point_y(result.train, &result.train_y, p, i, pooled)))
          << "' r='3' fill='rgb(" << red << ",64," << 255 - red << ")'/>\n";
    }
  }
  pooled = 0;
  for (size_t p = 0; p < result.test.blocks.size(); ++p) {
    for (Eigen::Index i = 0; i < result.test.blocks[p].rows(); ++i, ++pooled) {
      out << "<circle cx='" << fmt9(sx(result.test.blocks[p](i, 0))) << "' cy='"
          << fmt9(sy(point_y(result.test, &result.test_y, p, i, pooled)))
          << "' r='3' fill='none' stroke='black'/>\n";
    }
  }
  out << "</svg>\n";
}

}  // namespace gkmm

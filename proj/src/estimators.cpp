#include "gkmm/estimators.hpp"

#include <cmath>
#include <string>

#include "json.hpp"

#include "gkmm/assembly.hpp"
#include "gkmm/kernels.hpp"

namespace gkmm {

double default_eps(Eigen::Index total_train) {
  const double s = std::sqrt(static_cast<double>(total_train));
  return (s - 1.0) / s;
}

namespace {

// Reference point theta_u = c * 1 with c chosen so <xi, theta_u> = 1, clamped
// to the box; projected if clamping breaks the slab.
Eigen::VectorXd uniform_feasible_point(const GkmmProblem& problem) {
  const double s = problem.xi.sum();
  const double c = s > 0.0 ? 1.0 / s : 0.0;
  FeasibleSet set(problem.xi, problem.bound_B, problem.eps);
  Eigen::VectorXd theta_u = Eigen::VectorXd::Constant(problem.size(), c)
                                .cwiseMax(0.0)
                                .cwiseMin(problem.bound_B);
  if (!set.contains(theta_u, 0.0)) {
    theta_u = project(theta_u, set);
  }
  return theta_u;
}

}  // namespace

FitReport fit_gkmm(const PartitionedData& train, const PartitionedData& test,
                   const KernelConfig& kernel, double bound_B, double eps,
                   const SolverSettings& settings) {
  validate_partitions(train);
  validate_partitions(test);
  if (bound_B <= 0.0) bound_B = 1000.0;
  if (eps <= 0.0) eps = default_eps(train.total_rows());

  const GkmmProblem problem = assemble(train, test, kernel, bound_B, eps);
  const Eigen::VectorXd theta_u = uniform_feasible_point(problem);

  FitReport report;
  report.solution = solve(problem, settings);
  report.model = DensityRatioModel{report.solution.theta, problem.basis, kernel};
  report.loss_uniform = empirical_loss(problem, theta_u);
  report.loss_fitted = report.solution.objective;
  report.train_weights.reserve(train.blocks.size());
  for (const auto& block : train.blocks) {
    report.train_weights.push_back(evaluate_ratio(report.model, block));
  }
  return report;
}

Eigen::VectorXd evaluate_ratio(const DensityRatioModel& model,
                               const Eigen::MatrixXd& X) {
  if (X.cols() != model.basis.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "evaluate_ratio: d = " + std::to_string(X.cols()) +
                    " does not match basis d = " + std::to_string(model.basis.cols()));
  }
  return gram(X, model.basis, model.kernel) * model.theta;
}

Eigen::VectorXd fit_classical_kmm(const Eigen::MatrixXd& train,
                                  const Eigen::MatrixXd& test,
                                  const KernelConfig& kernel, double bound_B,
                                  double eps, const SolverSettings& settings) {
  if (train.rows() < 1 || test.rows() < 1) {
    throw Error(ErrorKind::EmptyBlock, "classical KMM needs nonempty train and test");
  }
  if (train.cols() != test.cols()) {
    throw Error(ErrorKind::DimensionMismatch, "train/test column mismatch");
  }
  const Eigen::Index np = train.rows();
  const Eigen::Index n = test.rows();
  if (bound_B <= 0.0) bound_B = 1000.0;
  if (eps <= 0.0) eps = default_eps(np);

  GkmmProblem qp;
  qp.P = 0.5 * gram(train, train, kernel);
  qp.q = (static_cast<double>(np) / static_cast<double>(n)) *
         gram(train, test, kernel).rowwise().sum();
  qp.xi = Eigen::VectorXd::Constant(np, 1.0 / static_cast<double>(np));
  qp.bound_B = bound_B;
  qp.eps = eps;
  qp.basis = train;
  qp.kernel = kernel;
  return solve(qp, settings).theta;
}

RulsifModel fit_rulsif(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                       const KernelConfig& kernel, double alpha, double lambda) {
  if (alpha < 0.0 || alpha >= 1.0) {
    throw Error(ErrorKind::ConfigError, "alpha must be in [0, 1)");
  }
  if (lambda <= 0.0) {
    throw Error(ErrorKind::ConfigError, "lambda must be positive");
  }
  const Eigen::Index n = test.rows();
  const Eigen::Index np = train.rows();
  const Eigen::MatrixXd K_tt = gram(test, test, kernel);    // n x n
  const Eigen::MatrixXd K_tr = gram(train, test, kernel);   // n' x n

  Eigen::MatrixXd H = ((1.0 - alpha) / static_cast<double>(np)) *
                      (K_tr.transpose() * K_tr);
  if (alpha > 0.0) {
    H.noalias() += (alpha / static_cast<double>(n)) * (K_tt.transpose() * K_tt);
  }
  const Eigen::VectorXd h = K_tt.colwise().mean();

  Eigen::MatrixXd A = H;
  A.diagonal().array() += lambda;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success) {
    throw Error(ErrorKind::SingularSystem, "RuLSIF system factorization failed");
  }
  const Eigen::VectorXd w = ldlt.solve(h);
  const double rel_res = (A * w - h).norm() / std::max(h.norm(), 1e-300);
  if (rel_res > 1e-8) {
    throw Error(ErrorKind::SingularSystem,
                "RuLSIF solve residual " + std::to_string(rel_res) +
                    "; lambda too small for conditioning");
  }
  return RulsifModel{w, lambda, test, kernel};
}

Eigen::VectorXd evaluate_rulsif(const RulsifModel& model, const Eigen::MatrixXd& X) {
  return gram(X, model.basis, model.kernel) * model.w;
}

std::string model_to_json(const DensityRatioModel& model) {
  nlohmann::ordered_json j;
  j["schema"] = "gkmm-model/1";
  j["kernel"]["family"] =
      model.kernel.family == KernelFamily::RBF ? "rbf" : "laplacian";
  if (model.kernel.sigma) {
    j["kernel"]["sigma"] = *model.kernel.sigma;
  } else {
    j["kernel"]["sigma"] = nullptr;
  }
  j["theta"] = std::vector<double>(model.theta.data(),
                                   model.theta.data() + model.theta.size());
  auto& basis = j["basis"] = nlohmann::ordered_json::array();
  for (Eigen::Index r = 0; r < model.basis.rows(); ++r) {
    std::vector<double> row(model.basis.cols());
    for (Eigen::Index c = 0; c < model.basis.cols(); ++c) row[c] = model.basis(r, c);
    basis.push_back(row);
  }
  return j.dump(2);
}

DensityRatioModel model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ConfigError, std::string("model parse error: ") + e.what());
  }
  if (j.value("schema", "") != "gkmm-model/1") {
    throw Error(ErrorKind::ConfigError, "unknown model schema");
  }
  DensityRatioModel model;
  const std::string family = j.at("kernel").at("family");
  if (family == "rbf") {
    model.kernel.family = KernelFamily::RBF;
  } else if (family == "laplacian") {
    model.kernel.family = KernelFamily::Laplacian;
  } else {
    throw Error(ErrorKind::ConfigError, "unknown kernel family " + family);
  }
  if (!j.at("kernel").at("sigma").is_null()) {
    model.kernel.sigma = j.at("kernel").at("sigma").get<double>();
  }
  const auto theta = j.at("theta").get<std::vector<double>>();
  model.theta = Eigen::Map<const Eigen::VectorXd>(theta.data(),
                                                  static_cast<Eigen::Index>(theta.size()));
  const auto& basis = j.at("basis");
  if (basis.empty()) {
    throw Error(ErrorKind::ConfigError, "model basis is empty");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(basis.size());
  const Eigen::Index cols = static_cast<Eigen::Index>(basis.front().size());
  model.basis.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = basis[r].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) {
      throw Error(ErrorKind::ConfigError, "ragged model basis");
    }
    for (Eigen::Index c = 0; c < cols; ++c) model.basis(r, c) = row[c];
  }
  return model;
}

}  // namespace gkmm

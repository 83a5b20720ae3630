#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "gkmm/core.hpp"
#include "gkmm/solver.hpp"

namespace gkmm {

struct FitReport {
  DensityRatioModel model;
  std::vector<Eigen::VectorXd> train_weights;  // r_hat at train samples, per partition
  Solution solution;
  double loss_uniform = 0.0;  // objective at the uniform-feasible reference point
  double loss_fitted = 0.0;
};

struct RulsifModel {
  Eigen::VectorXd w;
  double lambda = 0.0;
  Eigen::MatrixXd basis;  // test points
  KernelConfig kernel;
};

/// Default slack: (sqrt(n') - 1) / sqrt(n') with n' the total train size,
/// following the usual KMM numerical convention.
double default_eps(Eigen::Index total_train);

/// Assembles and solves the G-KMM program, then evaluates the fitted ratio at
/// every train sample. B defaults to 1000 and eps to default_eps when the
/// optionals are unset (signalled by values <= 0).
FitReport fit_gkmm(const PartitionedData& train, const PartitionedData& test,
                   const KernelConfig& kernel, double bound_B = 1000.0,
                   double eps = 0.0, const SolverSettings& settings = {});

/// r_hat(x) = sum_m theta_m K(x, basis_m), evaluated row-wise.
Eigen::VectorXd evaluate_ratio(const DensityRatioModel& model,
                               const Eigen::MatrixXd& X);

/// Classical KMM baseline: min (1/2) r^T H r - h^T r over r in [0,B]^{n'}
/// with |(1/n') sum_j r_j - 1| <= eps, where H = K(train, train) and
/// h_j = (n'/n) sum_i K(x'_j, x_i). Returns the per-train-sample weights.
Eigen::VectorXd fit_classical_kmm(const Eigen::MatrixXd& train,
                                  const Eigen::MatrixXd& test,
                                  const KernelConfig& kernel,
                                  double bound_B = 1000.0, double eps = 0.0,
                                  const SolverSettings& settings = {});

/// RuLSIF baseline in closed form: (H + lambda I) w = h with
/// H_{l,k} = (alpha/n) sum_i K(x_i,x_l) K(x_i,x_k)
///         + ((1-alpha)/n') sum_j K(x'_j,x_l) K(x'_j,x_k),
/// h_l = (1/n) sum_i K(x_i,x_l); x are test samples, x' train samples.
RulsifModel fit_rulsif(const Eigen::MatrixXd& train, const Eigen::MatrixXd& test,
                       const KernelConfig& kernel, double alpha, double lambda);

Eigen::VectorXd evaluate_rulsif(const RulsifModel& model, const Eigen::MatrixXd& X);

/// JSON serialization, schema tag "gkmm-model/1".
std::string model_to_json(const DensityRatioModel& model);
DensityRatioModel model_from_json(const std::string& text);

}  // namespace gkmm

#include "gkmm/kernels.hpp"

#include <cmath>
#include <string>

namespace gkmm {

double resolve_sigma(const KernelConfig& cfg, Eigen::Index d) {
  if (d < 1) {
    throw Error(ErrorKind::DimensionMismatch, "d must be >= 1");
  }
  if (cfg.sigma) {
    if (*cfg.sigma <= 0.0) {
      throw Error(ErrorKind::NonPositiveSigma,
                  "sigma = " + std::to_string(*cfg.sigma) + " must be positive");
    }
    return *cfg.sigma;
  }
  return 1.0 / static_cast<double>(d);
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   const KernelConfig& cfg) {
  if (x.size() != y.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "kernel_eval: dim(x) = " + std::to_string(x.size()) +
                    " != dim(y) = " + std::to_string(y.size()));
  }
  const double sigma = resolve_sigma(cfg, x.size());
  double dist;
  if (cfg.family == KernelFamily::RBF) {
    dist = (x - y).squaredNorm();
  } else {
    dist = (x - y).lpNorm<1>();
  }
  return std::exp(-sigma * dist);
}

Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                     const KernelConfig& cfg) {
  if (X.cols() != Y.cols()) {
    throw Error(ErrorKind::DimensionMismatch,
                "gram: column counts differ (" + std::to_string(X.cols()) +
                    " vs " + std::to_string(Y.cols()) + ")");
  }
  const double sigma = resolve_sigma(cfg, X.cols());
  Eigen::MatrixXd out(X.rows(), Y.rows());
  if (cfg.family == KernelFamily::RBF) {
    const Eigen::VectorXd xn = X.rowwise().squaredNorm();
    const Eigen::VectorXd yn = Y.rowwise().squaredNorm();
    out.noalias() = -2.0 * X * Y.transpose();
    out.colwise() += xn;
    out.rowwise() += yn.transpose();
    // round-off can leave tiny negative distances, which would give K > 1
    out = (-sigma * out.cwiseMax(0.0)).array().exp();
  } else {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      for (Eigen::Index j = 0; j < Y.rows(); ++j) {
        out(i, j) = std::exp(-sigma * (X.row(i) - Y.row(j)).lpNorm<1>());
      }
    }
  }
  return out;
}

}  // namespace gkmm

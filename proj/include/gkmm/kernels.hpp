#pragma once

#include <Eigen/Dense>

#include "gkmm/core.hpp"

namespace gkmm {

/// Explicit sigma is returned unchanged; an unset sigma resolves to 1/d.
double resolve_sigma(const KernelConfig& cfg, Eigen::Index d);

/// RBF:       exp(-sigma * |x - y|_2^2)
/// Laplacian: exp(-sigma * |x - y|_1)
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& y,
                   const KernelConfig& cfg);

/// Pairwise kernel matrix, values[i][j] = K(X_i, Y_j). The RBF path uses the
/// expansion |x-y|^2 = |x|^2 + |y|^2 - 2<x,y> with squared distances clamped
/// at 0, so entries stay in (0, 1].
Eigen::MatrixXd gram(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                     const KernelConfig& cfg);

}  // namespace gkmm

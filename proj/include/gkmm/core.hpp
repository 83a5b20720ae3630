#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "gkmm/errors.hpp"

namespace gkmm {

enum class KernelFamily { RBF, Laplacian };

/// Kernel configuration in the inverse-squared-length-scale convention:
/// K(x, y) = exp(-sigma * dist(x, y)). An unset sigma resolves to 1/d at
/// the point of use.
struct KernelConfig {
  KernelFamily family = KernelFamily::RBF;
  std::optional<double> sigma;  // empty -> default 1/n_features
};

/// An ordered collection of sample blocks (rows = samples) with a mixture
/// weight per block. Used for both the train side (gamma weights) and the
/// test side (omega weights).
struct PartitionedData {
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::VectorXd weights;

  Eigen::Index dim() const { return blocks.empty() ? 0 : blocks.front().cols(); }
  Eigen::Index total_rows() const {
    Eigen::Index n = 0;
    for (const auto& b : blocks) n += b.rows();
    return n;
  }
};

/// The empirical G-KMM quadratic program: minimize theta^T P theta - q^T theta
/// subject to 0 <= theta_k <= B and |<theta, xi> - 1| <= eps.
struct GkmmProblem {
  Eigen::MatrixXd P;       // b x b, symmetric PSD (pre-ridge)
  Eigen::VectorXd q;       // b
  Eigen::VectorXd xi;      // b, slab normal
  double bound_B = 0.0;
  double eps = 0.0;
  Eigen::MatrixXd basis;   // b x d, pooled test samples
  KernelConfig kernel;

  Eigen::Index size() const { return q.size(); }
};

enum class SolveStatus { Optimal, MaxIter, Infeasible };

inline const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::MaxIter: return "MaxIter";
    case SolveStatus::Infeasible: return "Infeasible";
  }
  return "Unknown";
}

struct Solution {
  Eigen::VectorXd theta;
  double objective = 0.0;
  SolveStatus status = SolveStatus::Infeasible;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// Fitted linear kernel model r_hat(x) = <theta, xi(x)> with
/// xi_m(x) = K(x, basis_m).
struct DensityRatioModel {
  Eigen::VectorXd theta;
  Eigen::MatrixXd basis;
  KernelConfig kernel;
};

constexpr double kWeightSumTol = 1e-9;

/// Throws unless all PartitionedData invariants hold: weights in [0,1]
/// summing to 1, nonempty blocks, consistent column counts.
void validate_partitions(const PartitionedData& data);

/// weight_i = n_i / sum_j n_j.
Eigen::VectorXd size_proportional_weights(const std::vector<Eigen::MatrixXd>& blocks);

/// Appends the test pool as a final train block carrying weight alpha, so the
/// implied denominator mixture is sum_j gamma_j p'_j + alpha * p. Requires the
/// existing train weights to sum to 1 - alpha.
PartitionedData alpha_relative_config(const PartitionedData& train,
                                      const Eigen::MatrixXd& test_pool,
                                      double alpha);

}  // namespace gkmm

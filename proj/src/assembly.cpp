#include "gkmm/assembly.hpp"

#include <string>
#include <vector>

#include "gkmm/kernels.hpp"

namespace gkmm {

Eigen::MatrixXd build_basis(const PartitionedData& test) {
  validate_partitions(test);
  const Eigen::Index b = test.total_rows();
  Eigen::MatrixXd basis(b, test.dim());
  Eigen::Index row = 0;
  for (const auto& block : test.blocks) {
    basis.middleRows(row, block.rows()) = block;
    row += block.rows();
  }
  return basis;
}

GkmmProblem assemble(const PartitionedData& train, const PartitionedData& test,
                     const KernelConfig& kernel, double bound_B, double eps) {
  validate_partitions(train);
  validate_partitions(test);
  if (train.dim() != test.dim()) {
    throw Error(ErrorKind::DimensionMismatch,
                "train d = " + std::to_string(train.dim()) +
                    " != test d = " + std::to_string(test.dim()));
  }
  if (bound_B <= 0.0) {
    throw Error(ErrorKind::InfeasibleProblem, "B must be positive");
  }
  if (eps <= 0.0) {
    throw Error(ErrorKind::InfeasibleProblem, "eps must be positive");
  }

  const size_t n_train = train.blocks.size();   // N'
  const size_t n_test = test.blocks.size();     // N
  const Eigen::MatrixXd basis = build_basis(test);
  const Eigen::Index b = basis.rows();

  double np_max = 0.0;
  for (const auto& blk : train.blocks) {
    np_max = std::max(np_max, static_cast<double>(blk.rows()));
  }
  const double np_max2 = np_max * np_max;

  // A^[j] = K(train_j, basis); basis columns slice back into test blocks, so
  // the cross-kernel sums in h^[i,j] are column-block row sums of A^[j].
  std::vector<Eigen::MatrixXd> A(n_train);
  for (size_t j = 0; j < n_train; ++j) {
    A[j] = gram(train.blocks[j], basis, kernel);
  }

  std::vector<Eigen::Index> test_offset(n_test);
  {
    Eigen::Index off = 0;
    for (size_t i = 0; i < n_test; ++i) {
      test_offset[i] = off;
      off += test.blocks[i].rows();
    }
  }

  Eigen::VectorXd xi = Eigen::VectorXd::Zero(b);
  Eigen::VectorXd q = Eigen::VectorXd::Zero(b);
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(b, b);

  for (size_t j = 0; j < n_train; ++j) {
    const double gamma_j = train.weights[static_cast<Eigen::Index>(j)];
    const double npj = static_cast<double>(train.blocks[j].rows());
    xi.noalias() += (gamma_j / npj) * A[j].colwise().sum().transpose();

    Eigen::VectorXd h_j = Eigen::VectorXd::Zero(train.blocks[j].rows());
    for (size_t i = 0; i < n_test; ++i) {
      const double omega_i = test.weights[static_cast<Eigen::Index>(i)];
      const double ni = static_cast<double>(test.blocks[i].rows());
      const double c = np_max2 / (ni * npj) * gamma_j * omega_i;
      h_j.noalias() +=
          c * A[j].middleCols(test_offset[i], test.blocks[i].rows()).rowwise().sum();
    }
    q.noalias() += A[j].transpose() * h_j;

    for (size_t k = 0; k < n_train; ++k) {
      const double gamma_k = train.weights[static_cast<Eigen::Index>(k)];
      const double npk = static_cast<double>(train.blocks[k].rows());
      const double c = np_max2 / (npj * npk) * gamma_j * gamma_k / 2.0;
      const Eigen::MatrixXd G_jk = gram(train.blocks[j], train.blocks[k], kernel);
      P.noalias() += c * A[j].transpose() * G_jk * A[k];
    }
  }
  P = 0.5 * (P + P.transpose()).eval();

  if (bound_B * xi.sum() < 1.0 - eps) {
    throw Error(ErrorKind::InfeasibleProblem,
                "slab unreachable: B * sum(xi) = " +
                    std::to_string(bound_B * xi.sum()) + " < 1 - eps");
  }

  GkmmProblem problem;
  problem.P = std::move(P);
  problem.q = std::move(q);
  problem.xi = std::move(xi);
  problem.bound_B = bound_B;
  problem.eps = eps;
  problem.basis = basis;
  problem.kernel = kernel;
  return problem;
}

double empirical_loss(const GkmmProblem& problem, const Eigen::VectorXd& theta) {
  if (theta.size() != problem.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "theta length " + std::to_string(theta.size()) +
                    " != b = " + std::to_string(problem.size()));
  }
  return theta.dot(problem.P * theta) - problem.q.dot(theta);
}

}  // namespace gkmm

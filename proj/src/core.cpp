#include "gkmm/core.hpp"

#include <cmath>
#include <string>

namespace gkmm {

void validate_partitions(const PartitionedData& data) {
  if (data.blocks.empty()) {
    throw Error(ErrorKind::EmptyBlock, "partition list is empty");
  }
  if (data.weights.size() != static_cast<Eigen::Index>(data.blocks.size())) {
    throw Error(ErrorKind::DimensionMismatch,
                "weight count " + std::to_string(data.weights.size()) +
                    " does not match block count " +
                    std::to_string(data.blocks.size()));
  }
  const Eigen::Index d = data.blocks.front().cols();
  if (d < 1) {
    throw Error(ErrorKind::DimensionMismatch, "blocks must have d >= 1 columns");
  }
  for (size_t i = 0; i < data.blocks.size(); ++i) {
    const auto& b = data.blocks[i];
    if (b.rows() < 1) {
      throw Error(ErrorKind::EmptyBlock, "block " + std::to_string(i) + " has no rows");
    }
    if (b.cols() != d) {
      throw Error(ErrorKind::DimensionMismatch,
                  "block " + std::to_string(i) + " has " + std::to_string(b.cols()) +
                      " columns, expected " + std::to_string(d));
    }
  }
  double sum = 0.0;
  for (Eigen::Index i = 0; i < data.weights.size(); ++i) {
    const double w = data.weights[i];
    if (w < 0.0 || w > 1.0) {
      throw Error(ErrorKind::WeightSumError,
                  "weight " + std::to_string(i) + " = " + std::to_string(w) +
                      " outside [0, 1]");
    }
    sum += w;
  }
  if (std::abs(sum - 1.0) > kWeightSumTol) {
    throw Error(ErrorKind::WeightSumError,
                "weights sum to " + std::to_string(sum) + ", expected 1");
  }
}

Eigen::VectorXd size_proportional_weights(const std::vector<Eigen::MatrixXd>& blocks) {
  if (blocks.empty()) {
    throw Error(ErrorKind::EmptyBlock, "no blocks given");
  }
  Eigen::Index total = 0;
  for (const auto& b : blocks) {
    if (b.rows() < 1) throw Error(ErrorKind::EmptyBlock, "block has no rows");
    total += b.rows();
  }
  Eigen::VectorXd w(static_cast<Eigen::Index>(blocks.size()));
  for (size_t i = 0; i < blocks.size(); ++i) {
    w[static_cast<Eigen::Index>(i)] =
        static_cast<double>(blocks[i].rows()) / static_cast<double>(total);
  }
  return w;
}

PartitionedData alpha_relative_config(const PartitionedData& train,
                                      const Eigen::MatrixXd& test_pool,
                                      double alpha) {
  const double gamma_sum = train.weights.sum();
  if (std::abs(gamma_sum + alpha - 1.0) > kWeightSumTol) {
    throw Error(ErrorKind::WeightSumError,
                "train weights sum to " + std::to_string(gamma_sum) +
                    " but must sum to 1 - alpha = " + std::to_string(1.0 - alpha));
  }
  PartitionedData out = train;
  if (alpha == 0.0) return out;  // degenerate: denominator unchanged
  out.blocks.push_back(test_pool);
  out.weights.conservativeResize(out.weights.size() + 1);
  out.weights[out.weights.size() - 1] = alpha;
  return out;
}

}  // namespace gkmm

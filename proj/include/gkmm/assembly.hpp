#pragma once

#include <Eigen/Dense>

#include "gkmm/core.hpp"

namespace gkmm {

/// Pools the test partitions into the basis matrix: rows are test samples in
/// partition order then sample order, b = sum of the test block sizes.
Eigen::MatrixXd build_basis(const PartitionedData& test);

/// Builds the empirical G-KMM quadratic program.
///
/// With A^[j][t][m] = K(x'_{t,(j)}, basis_m):
///   P  = sum_{j,k} (A^[j])^T H^[j,k] A^[k], symmetrized,
///        H^[j,k]_{t,s} = (n'_max)^2/(n'_j n'_k) * (gamma_j gamma_k / 2)
///                        * K(x'_{t,(j)}, x'_{s,(k)})
///   q  = sum_{j,i} (A^[j])^T h^[i,j],
///        h^[i,j]_t = (n'_max)^2/(n_i n'_j) * gamma_j omega_i
///                    * sum_l K(x'_{t,(j)}, x_{l,(i)})
///   xi = sum_j (gamma_j / n'_j) sum_t xi(x'_{t,(j)})
/// so the objective is f(theta) = theta^T P theta - q^T theta (the 1/2 lives
/// inside H). Throws InfeasibleProblem when B * sum(xi) < 1 - eps, i.e. the
/// slab is unreachable even at theta = B * 1.
GkmmProblem assemble(const PartitionedData& train, const PartitionedData& test,
                     const KernelConfig& kernel, double bound_B, double eps);

/// theta^T P theta - q^T theta.
double empirical_loss(const GkmmProblem& problem, const Eigen::VectorXd& theta);

}  // namespace gkmm

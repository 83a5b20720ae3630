#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "gkmm/core.hpp"

namespace gkmm {

enum class StepRule { FixedLipschitz, BacktrackingLineSearch };

struct SolverSettings {
  int max_iterations = 20000;
  double tol_primal = 1e-7;
  double tol_dual = 1e-7;
  StepRule step_rule = StepRule::FixedLipschitz;
  bool accelerated = false;  // Nesterov momentum with objective restart
  std::optional<std::string> trace_path;  // CSV iterate dump when set
};

/// Box [0, B]^b intersected with the slab 1 - eps <= <xi, theta> <= 1 + eps.
/// Construction fails fast when the slab is unreachable at theta = B * 1.
class FeasibleSet {
 public:
  FeasibleSet(Eigen::VectorXd xi, double bound_B, double eps);

  const Eigen::VectorXd& slab_normal() const { return xi_; }
  double upper_bound() const { return bound_B_; }
  double slab_lo() const { return slab_lo_; }
  double slab_hi() const { return slab_hi_; }

  bool contains(const Eigen::VectorXd& theta, double tol) const;

 private:
  Eigen::VectorXd xi_;
  double bound_B_;
  double slab_lo_;
  double slab_hi_;
};

/// Exact Euclidean projection onto box-and-slab. The box projection at a fixed
/// slab multiplier is a clamp, and the slab value is monotone in the
/// multiplier, so the multiplier is found by bisection (to 1e-12).
Eigen::VectorXd project(const Eigen::VectorXd& theta, const FeasibleSet& set);

/// Ridge added to P before solving: 1e-8 * trace(P) / b. Not part of the
/// problem definition; guards against round-off indefiniteness.
double ridge_lambda(const Eigen::MatrixXd& P);

/// Deterministic projected gradient descent on f(theta) = theta^T P theta
/// - q^T theta over the feasible set. Fixed initialization
/// theta0 = project(q^+ / diag(2P)), step 1/L with L from power iteration.
Solution solve(const GkmmProblem& problem, const SolverSettings& settings = {});

}  // namespace gkmm

#include "gkmm/solver.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <string>

namespace gkmm {

FeasibleSet::FeasibleSet(Eigen::VectorXd xi, double bound_B, double eps)
    : xi_(std::move(xi)),
      bound_B_(bound_B),
      slab_lo_(1.0 - eps),
      slab_hi_(1.0 + eps) {
  if (bound_B_ <= 0.0) {
    throw Error(ErrorKind::InfeasibleProblem, "B must be positive");
  }
  if (eps < 0.0) {
    throw Error(ErrorKind::InfeasibleProblem, "eps must be non-negative");
  }
  // theta = B * 1 maximizes <xi, theta> when xi >= 0 (kernel-valued), theta = 0
  // gives the lower end. Fail fast instead of mid-solve.
  if (bound_B_ * xi_.sum() < slab_lo_) {
    throw Error(ErrorKind::InfeasibleProblem,
                "slab unreachable: B * sum(xi) = " +
                    std::to_string(bound_B_ * xi_.sum()) +
                    " < 1 - eps = " + std::to_string(slab_lo_));
  }
}

bool FeasibleSet::contains(const Eigen::VectorXd& theta, double tol) const {
  if (theta.minCoeff() < -tol) return false;
  if (theta.maxCoeff() > bound_B_ + tol) return false;
  const double s = xi_.dot(theta);
  return s >= slab_lo_ - tol && s <= slab_hi_ + tol;
}

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& v, double B) {
  return v.cwiseMax(0.0).cwiseMin(B);
}

}  // namespace

Eigen::VectorXd project(const Eigen::VectorXd& theta, const FeasibleSet& set) {
  const Eigen::VectorXd& xi = set.slab_normal();
  const double B = set.upper_bound();
  if (theta.size() != xi.size()) {
    throw Error(ErrorKind::DimensionMismatch, "project: theta/xi size mismatch");
  }

  auto theta_of = [&](double mu) -> Eigen::VectorXd {
    return clamp_box(theta - mu * xi, B);
  };
  auto slab_value = [&](double mu) { return xi.dot(theta_of(mu)); };

  const double g0 = slab_value(0.0);
  if (g0 >= set.slab_lo() && g0 <= set.slab_hi()) {
    return theta_of(0.0);
  }

  // slab_value is nonincreasing in mu; bracket the multiplier then bisect.
  double target, lo, hi;
  if (g0 > set.slab_hi()) {
    target = set.slab_hi();
    lo = 0.0;
    hi = 1.0;
    int expand = 0;
    while (slab_value(hi) > target) {
      lo = hi;
      hi *= 2.0;
      if (++expand > 200) {
        throw Error(ErrorKind::InfeasibleProblem,
                    "projection multiplier bracket failed");
      }
    }
  } else {
    target = set.slab_lo();
    hi = 0.0;
    lo = -1.0;
    int expand = 0;
    while (slab_value(lo) < target) {
      hi = lo;
      lo *= 2.0;
      if (++expand > 200) {
        throw Error(ErrorKind::InfeasibleProblem,
                    "projection multiplier bracket failed");
      }
    }
  }
  for (int it = 0; it < 300; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // floating-point fixpoint
    if (slab_value(mid) > target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  // pick the endpoint on the feasible side of the slab
  const double mu = (g0 > set.slab_hi()) ? hi : lo;
  return theta_of(mu);
}

double ridge_lambda(const Eigen::MatrixXd& P) {
  return 1e-8 * P.trace() / static_cast<double>(P.rows());
}

namespace {

// Largest eigenvalue of the symmetric PSD matrix M, deterministic start.
double power_iteration_lmax(const Eigen::MatrixXd& M) {
  const Eigen::Index n = M.rows();
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n) / std::sqrt(static_cast<double>(n));
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd w = M * v;
    const double norm = w.norm();
    if (norm <= 0.0) return 0.0;
    lambda = norm;
    v = w / norm;
  }
  return lambda;
}

}  // namespace

Solution solve(const GkmmProblem& problem, const SolverSettings& settings) {
  if (settings.max_iterations < 1 || settings.tol_primal <= 0.0 ||
      settings.tol_dual <= 0.0) {
    throw Error(ErrorKind::ConfigError, "invalid solver settings");
  }
  FeasibleSet set(problem.xi, problem.bound_B, problem.eps);

  const Eigen::Index b = problem.size();
  Eigen::MatrixXd Pr = problem.P;
  Pr.diagonal().array() += ridge_lambda(problem.P);
  const Eigen::VectorXd& q = problem.q;

  auto objective = [&](const Eigen::VectorXd& t) {
    return t.dot(Pr * t) - q.dot(t);
  };
  auto gradient = [&](const Eigen::VectorXd& t) -> Eigen::VectorXd {
    return 2.0 * (Pr * t) - q;
  };

  const double L = std::max(power_iteration_lmax(2.0 * Pr) * 1.01,
                            std::numeric_limits<double>::min());
  double step = 1.0 / L;

  Eigen::VectorXd theta0(b);
  for (Eigen::Index k = 0; k < b; ++k) {
    theta0[k] = std::max(q[k], 0.0) / std::max(2.0 * Pr(k, k), 1e-12);
  }
  Eigen::VectorXd theta = project(theta0, set);
  double f_theta = objective(theta);

  std::ofstream trace;
  if (settings.trace_path) {
    trace.open(*settings.trace_path);
    if (!trace) {
      throw Error(ErrorKind::IoError, "cannot open trace file " + *settings.trace_path);
    }
    trace << "iteration,objective,primal_residual,dual_residual\n";
  }

  // Accelerated mode is the monotone FISTA variant: the proximal candidate z
  // drives the momentum sequence even when it is rejected as the iterate, so
  // momentum keeps building along nearly flat directions of P. Momentum is
  // reset when the candidate direction reverses (gradient restart scheme).
  Eigen::VectorXd y = theta;
  Eigen::VectorXd z = theta;
  double momentum_t = 1.0;

  // objective stagnation window: f is non-increasing across accepted iterates,
  // so no improvement above the fp resolution of f over a whole window means
  // the run is converged to numerical precision
  double f_mark = f_theta;
  int mark_iter = 0;
  constexpr int kStagnationWindow = 1024;
  constexpr double kEps = std::numeric_limits<double>::epsilon();

  Solution sol;
  sol.status = SolveStatus::MaxIter;
  int iter = 0;
  for (; iter < settings.max_iterations; ++iter) {
    if (!settings.accelerated) y = theta;

    Eigen::VectorXd g = gradient(y);
    Eigen::VectorXd z_new;
    if (settings.step_rule == StepRule::FixedLipschitz) {
      z_new = project(y - step * g, set);
    } else {
      step = std::min(step * 1.3, 1e12 / L);
      const double f_y = objective(y);
      for (int bt = 0; bt < 80; ++bt) {
        z_new = project(y - step * g, set);
        const Eigen::VectorXd d = z_new - y;
        if (objective(z_new) <=
            f_y + g.dot(d) + d.squaredNorm() / (2.0 * step) + 1e-15) {
          break;
        }
        step *= 0.5;
      }
    }

    // an exact fixpoint of the prox map is a KKT point; further iterations
    // cannot make representable progress
    const bool fixpoint = (z_new == y);

    Eigen::VectorXd theta_new;
    double f_new;
    if (settings.accelerated) {
      const double f_z = objective(z_new);
      const bool restart = (y - z_new).dot(z_new - z) > 0.0;
      if (f_z <= f_theta) {
        theta_new = z_new;
        f_new = f_z;
      } else {
        theta_new = theta;
        f_new = f_theta;
      }
      if (restart) {
        momentum_t = 1.0;
        y = theta_new;
      } else {
        const double t_next =
            0.5 * (1.0 + std::sqrt(1.0 + 4.0 * momentum_t * momentum_t));
        y = z_new + (momentum_t / t_next) * (theta_new - z_new) +
            ((momentum_t - 1.0) / t_next) * (theta_new - theta);
        momentum_t = t_next;
      }
    } else {
      theta_new = z_new;
      f_new = objective(z_new);
    }
    z = z_new;

    const double primal = (theta_new - theta).lpNorm<Eigen::Infinity>();
    const Eigen::VectorXd g_new = gradient(theta_new);
    const double dual =
        (theta_new - project(theta_new - g_new, set)).lpNorm<Eigen::Infinity>() /
        (1.0 + theta_new.lpNorm<Eigen::Infinity>() + g_new.lpNorm<Eigen::Infinity>());

    theta = theta_new;
    f_theta = f_new;

    if (trace.is_open()) {
      trace << iter + 1 << ',' << f_theta << ',' << primal << ',' << dual << '\n';
    }

    sol.primal_residual = primal;
    sol.dual_residual = dual;
    bool stagnant = false;
    if (iter - mark_iter >= kStagnationWindow) {
      stagnant = f_mark - f_theta <= 64.0 * kEps * (1.0 + std::abs(f_theta));
      f_mark = f_theta;
      mark_iter = iter;
    }

    if ((primal <= settings.tol_primal && dual <= settings.tol_dual) || fixpoint ||
        stagnant) {
      sol.status = SolveStatus::Optimal;
      ++iter;
      break;
    }
  }

  sol.theta = theta;
  sol.objective = theta.dot(problem.P * theta) - q.dot(theta);
  sol.iterations = iter;
  return sol;
}

}  // namespace gkmm

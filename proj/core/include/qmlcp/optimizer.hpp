#pragma once

#include "qmlcp/types.hpp"

namespace qmlcp {

// Smooth objective on a box. Return +inf (or NaN) for points where the
// objective is undefined; the line search backs off from them.
class BoxObjective {
 public:
  virtual ~BoxObjective() = default;
  virtual double evaluate(const Vector& x, Vector* gradient, Matrix* hessian) = 0;
};

struct BoxMinimizerOptions {
  double gradient_tol = 1e-7;  // projected-gradient sup-norm, relative to max(1, |f|)
  int max_iterations = 500;
  // Seed the Hessian approximation with the exact Hessian (eigenvalues
  // floored to keep it positive definite) at the start and after a failed
  // line search; otherwise a scaled identity.
  bool exact_hessian_restarts = true;
  // Re-seed from the exact Hessian at every accepted point instead of the
  // BFGS update (a projected Newton method).
  bool exact_hessian_every_step = false;
};

struct BoxMinimizerResult {
  Vector x;
  double value = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

// Projected quasi-Newton: variables within epsilon of a bound with the
// gradient pushing outwards are sent to the bound, the free ones take the
// step solving B_FF d = -g_F, and a backtracking Armijo search runs along the
// projected path. B is updated by damped BFGS so it stays positive definite.
// Reusable across solves of the same dimension.
class BoxQuasiNewton {
 public:
  explicit BoxQuasiNewton(int dimension, BoxMinimizerOptions options = {});

  BoxMinimizerResult minimize(BoxObjective& objective, const Vector& start, const Vector& lower,
                              const Vector& upper);

  const BoxMinimizerOptions& options() const { return options_; }

 private:
  bool set_from_hessian();
  bool solve_direction(const Vector& lower, const Vector& upper, double eps);

  int dim_;
  BoxMinimizerOptions options_;
  Vector x_, g_, xn_, gn_, d_, s_, y_, bs_, rhs_, sol_;
  Matrix b_, hess_, hess_trial_, reduced_;
  std::vector<int> free_;
  std::vector<signed char> bound_side_;
};

}  // namespace qmlcp

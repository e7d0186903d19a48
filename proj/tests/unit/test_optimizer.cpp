#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "qmlcp/optimizer.hpp"

namespace qmlcp {
namespace {

class Quadratic : public BoxObjective {
 public:
  Quadratic(Matrix a, Vector b) : a_(std::move(a)), b_(std::move(b)) {}
  double evaluate(const Vector& x, Vector* g, Matrix* h) override {
    if (g) *g = a_ * x - b_;
    if (h) *h = a_;
    return 0.5 * x.dot(a_ * x) - b_.dot(x);
  }

 private:
  Matrix a_;
  Vector b_;
};

class Rosenbrock : public BoxObjective {
 public:
  double evaluate(const Vector& x, Vector* g, Matrix* h) override {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    if (g) {
      g->resize(2);
      (*g)[0] = -2.0 * a - 400.0 * x[0] * b;
      (*g)[1] = 200.0 * b;
    }
    if (h) {
      h->resize(2, 2);
      (*h)(0, 0) = 2.0 - 400.0 * b + 800.0 * x[0] * x[0];
      (*h)(0, 1) = (*h)(1, 0) = -400.0 * x[0];
      (*h)(1, 1) = 200.0;
    }
    return a * a + 100.0 * b * b;
  }
};

// -log(1 - x) + x^2: undefined for x >= 1.
class Barrier : public BoxObjective {
 public:
  double evaluate(const Vector& x, Vector* g, Matrix* h) override {
    if (x[0] >= 1.0) return std::numeric_limits<double>::infinity();
    if (g) *g = Vector::Constant(1, 1.0 / (1.0 - x[0]) + 2.0 * x[0]);
    if (h) *h = Matrix::Constant(1, 1, 1.0 / ((1.0 - x[0]) * (1.0 - x[0])) + 2.0);
    return -std::log(1.0 - x[0]) + x[0] * x[0];
  }
};

TEST(BoxQuasiNewton, UnconstrainedQuadratic) {
  Matrix a(3, 3);
  a << 4, 1, 0, 1, 3, 0.5, 0, 0.5, 2;
  const Vector b = Vector::LinSpaced(3, 1.0, 3.0);
  Quadratic q(a, b);
  for (bool exact : {true, false}) {
    BoxQuasiNewton opt(3, {1e-10, 500, exact});
    const BoxMinimizerResult r = opt.minimize(q, Vector::Zero(3), Vector::Constant(3, -10), Vector::Constant(3, 10));
    EXPECT_TRUE(r.converged);
    EXPECT_LT((r.x - a.ldlt().solve(b)).cwiseAbs().maxCoeff(), 1e-8);
  }
}

TEST(BoxQuasiNewton, ActiveBounds) {
  // Unconstrained minimizer (2, -3) lies outside the box [0, 1] x [-1, 1].
  Quadratic q(Matrix::Identity(2, 2), (Vector(2) << 2.0, -3.0).finished());
  BoxQuasiNewton opt(2);
  const BoxMinimizerResult r =
      opt.minimize(q, (Vector(2) << 0.5, 0.0).finished(), (Vector(2) << 0.0, -1.0).finished(), Vector::Ones(2));
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x[0], 1.0);
  EXPECT_EQ(r.x[1], -1.0);
}

TEST(BoxQuasiNewton, Rosenbrock) {
  Rosenbrock f;
  for (bool newton : {false, true}) {
    BoxMinimizerOptions o;
    o.gradient_tol = 1e-10;
    o.exact_hessian_every_step = newton;
    BoxQuasiNewton opt(2, o);
    const BoxMinimizerResult r =
        opt.minimize(f, (Vector(2) << -1.2, 1.0).finished(), Vector::Constant(2, -5), Vector::Constant(2, 5));
    EXPECT_TRUE(r.converged) << "newton " << newton;
    EXPECT_NEAR(r.x[0], 1.0, 1e-6);
    EXPECT_NEAR(r.x[1], 1.0, 1e-6);
    EXPECT_LT(r.value, 1e-12);
  }
}

TEST(BoxQuasiNewton, RosenbrockWithBindingBound) {
  Rosenbrock f;
  BoxQuasiNewton opt(2);
  const BoxMinimizerResult r =
      opt.minimize(f, (Vector(2) << -1.2, 1.0).finished(), Vector::Constant(2, -2), (Vector(2) << 0.5, 2.0).finished());
  EXPECT_TRUE(r.converged);
  EXPECT_EQ(r.x[0], 0.5);
  EXPECT_NEAR(r.x[1], 0.25, 1e-7);
}

TEST(BoxQuasiNewton, StartOutsideBoxIsProjected) {
  Quadratic q(Matrix::Identity(1, 1), Vector::Constant(1, 0.3));
  BoxQuasiNewton opt(1);
  const BoxMinimizerResult r = opt.minimize(q, Vector::Constant(1, 50.0), Vector::Zero(1), Vector::Ones(1));
  EXPECT_TRUE(r.converged);
  EXPECT_NEAR(r.x[0], 0.3, 1e-8);
}

TEST(BoxQuasiNewton, BacksOffFromUndefinedRegion) {
  Barrier f;
  BoxQuasiNewton opt(1, {1e-10, 500, false});
  const BoxMinimizerResult r = opt.minimize(f, Vector::Constant(1, -3.0), Vector::Constant(1, -5), Vector::Constant(1, 5));
  EXPECT_TRUE(r.converged);
  // 1 / (1 - x) + 2x = 0, i.e. 2x^2 - 2x - 1 = 0.
  EXPECT_NEAR(r.x[0], (1.0 - std::sqrt(3.0)) / 2.0, 1e-8);
}

TEST(BoxQuasiNewton, UndefinedStart) {
  Barrier f;
  BoxQuasiNewton opt(1);
  const BoxMinimizerResult r = opt.minimize(f, Vector::Constant(1, 2.0), Vector::Constant(1, -5), Vector::Constant(1, 5));
  EXPECT_FALSE(r.converged);
  EXPECT_TRUE(std::isinf(r.value));
}

TEST(BoxQuasiNewton, DimensionChecks) {
  EXPECT_THROW(BoxQuasiNewton(0), ConfigError);
  Barrier f;
  BoxQuasiNewton opt(1);
  EXPECT_THROW(opt.minimize(f, Vector::Zero(2), Vector::Zero(1), Vector::Ones(1)), ConfigError);
}

TEST(BoxQuasiNewton, IterationCap) {
  Rosenbrock f;
  BoxQuasiNewton opt(2, {1e-14, 3, true});
  const BoxMinimizerResult r =
      opt.minimize(f, (Vector(2) << -1.2, 1.0).finished(), Vector::Constant(2, -5), Vector::Constant(2, 5));
  EXPECT_FALSE(r.converged);
  EXPECT_LE(r.iterations, 3);
  EXPECT_LT(r.value, 24.2);
}

}  // namespace
}  // namespace qmlcp

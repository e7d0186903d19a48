#include "qmlcp/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace qmlcp {

namespace {

constexpr double kArmijo = 1e-4;
constexpr int kMaxBacktracks = 60;

}  // namespace

BoxQuasiNewton::BoxQuasiNewton(int dimension, BoxMinimizerOptions options)
    : dim_(dimension), options_(options) {
  if (dimension < 1) throw ConfigError("optimizer dimension must be >= 1");
  for (Vector* v : {&x_, &g_, &xn_, &gn_, &d_, &s_, &y_, &bs_, &rhs_, &sol_}) v->setZero(dim_);
  b_.setIdentity(dim_, dim_);
  hess_.setZero(dim_, dim_);
  hess_trial_.setZero(dim_, dim_);
  reduced_.setZero(dim_, dim_);
  free_.reserve(static_cast<std::size_t>(dim_));
  bound_side_.assign(static_cast<std::size_t>(dim_), 0);
}

bool BoxQuasiNewton::set_from_hessian() {
  if (!hess_.allFinite()) return false;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (hess_ + hess_.transpose()));
  if (eig.info() != Eigen::Success) return false;
  const Vector& lambda = eig.eigenvalues();
  const double top = lambda.cwiseAbs().maxCoeff();
  if (!(top > 0.0)) return false;
  const double floor = 1e-8 * top;
  sol_ = lambda.cwiseAbs().cwiseMax(floor);
  b_.noalias() = eig.eigenvectors() * sol_.asDiagonal() * eig.eigenvectors().transpose();
  return true;
}

// Fills d_ and reports whether it is a descent direction.
bool BoxQuasiNewton::solve_direction(const Vector& lower, const Vector& upper, double eps) {
  free_.clear();
  d_.setZero();
  for (int i = 0; i < dim_; ++i) {
    const double e = std::min(eps, 1e-3 * (upper[i] - lower[i]));
    bound_side_[i] = 0;
    if (x_[i] - lower[i] <= e && g_[i] > 0.0) {
      bound_side_[i] = -1;
      d_[i] = lower[i] - x_[i];
    } else if (upper[i] - x_[i] <= e && g_[i] < 0.0) {
      bound_side_[i] = 1;
      d_[i] = upper[i] - x_[i];
    } else {
      free_.push_back(i);
    }
  }
  const int nf = static_cast<int>(free_.size());
  if (nf > 0) {
    auto red = reduced_.topLeftCorner(nf, nf);
    for (int a = 0; a < nf; ++a) {
      rhs_[a] = -g_[free_[a]];
      for (int b = 0; b < nf; ++b) red(a, b) = b_(free_[a], free_[b]);
    }
    Eigen::LLT<Eigen::Ref<Matrix>> llt(red);
    if (llt.info() != Eigen::Success) return false;
    sol_.head(nf) = llt.solve(rhs_.head(nf));
    for (int a = 0; a < nf; ++a) d_[free_[a]] = sol_[a];
  }
  const double slope = g_.dot(d_);
  return d_.allFinite() && slope < 0.0;
}

BoxMinimizerResult BoxQuasiNewton::minimize(BoxObjective& objective, const Vector& start,
                                            const Vector& lower, const Vector& upper) {
  if (start.size() != dim_ || lower.size() != dim_ || upper.size() != dim_) {
    throw ConfigError("optimizer dimension mismatch");
  }
  BoxMinimizerResult result;
  x_ = start.cwiseMax(lower).cwiseMin(upper);
  const bool newton = options_.exact_hessian_every_step;
  const bool exact = options_.exact_hessian_restarts || newton;

  double f = objective.evaluate(x_, &g_, exact ? &hess_ : nullptr);
  result.evaluations = 1;
  if (!std::isfinite(f) || !g_.allFinite()) {
    result.x = x_;
    result.value = std::numeric_limits<double>::infinity();
    return result;
  }

  auto scaled_identity = [&]() {
    b_.setIdentity();
    b_ *= std::max(1.0, g_.cwiseAbs().maxCoeff());
  };
  // Fresh curvature at the current point: exact when available.
  auto refresh = [&]() {
    if (exact) {
      const double fr = objective.evaluate(x_, &g_, &hess_);
      ++result.evaluations;
      if (std::isfinite(fr) && g_.allFinite()) f = fr;
      if (set_from_hessian()) return;
    }
    scaled_identity();
  };
  if (!(exact && set_from_hessian())) scaled_identity();
  bool fresh = true;

  auto projected_gradient_norm = [&]() {
    double pg = 0.0;
    for (int i = 0; i < dim_; ++i) {
      const double moved = std::clamp(x_[i] - g_[i], lower[i], upper[i]) - x_[i];
      pg = std::max(pg, std::abs(moved));
    }
    return pg;
  };

  int iter = 0;
  bool converged = false;
  while (iter < options_.max_iterations) {
    const double pg = projected_gradient_norm();
    if (pg <= options_.gradient_tol * std::max(1.0, std::abs(f))) {
      converged = true;
      break;
    }

    if (!solve_direction(lower, upper, pg)) {
      if (!fresh) {
        refresh();
        fresh = true;
        ++iter;
        continue;
      }
      scaled_identity();
      if (!solve_direction(lower, upper, pg)) break;
    }

    bool accepted = false;
    double fn = f;
    double alpha = 1.0;
    for (int bt = 0; bt < kMaxBacktracks; ++bt) {
      xn_ = (x_ + alpha * d_).cwiseMax(lower).cwiseMin(upper);
      s_ = xn_ - x_;
      if (s_.cwiseAbs().maxCoeff() == 0.0) break;
      fn = objective.evaluate(xn_, &gn_, newton ? &hess_trial_ : nullptr);
      ++result.evaluations;
      const double slope = g_.dot(s_);
      const double target = slope < 0.0 ? f + kArmijo * slope : f;
      if (std::isfinite(fn) && gn_.allFinite() && (target < f ? fn <= target : fn < f)) {
        accepted = true;
        break;
      }
      alpha *= std::isfinite(fn) ? 0.5 : 0.1;
    }

    if (!accepted) {
      if (!fresh) {
        refresh();
        fresh = true;
        ++iter;
        continue;
      }
      // No representable decrease: stationary up to the objective's scale.
      converged = pg <= options_.gradient_tol * std::max(1.0, std::abs(f));
      break;
    }

    // Exact curvature when requested, otherwise damped BFGS (keeps B
    // positive definite).
    bool seeded = false;
    if (newton) {
      hess_.swap(hess_trial_);
      seeded = set_from_hessian();
    }
    if (!seeded) {
      y_ = gn_ - g_;
      bs_.noalias() = b_ * s_;
      const double sbs = s_.dot(bs_);
      const double sy = s_.dot(y_);
      if (sbs > 0.0 && std::isfinite(sbs)) {
        double theta = 1.0;
        if (sy < 0.2 * sbs) theta = 0.8 * sbs / (sbs - sy);
        y_ = theta * y_ + (1.0 - theta) * bs_;
        const double sr = s_.dot(y_);
        if (sr > 0.0) {
          b_.noalias() += (1.0 / sr) * y_ * y_.transpose();
          b_.noalias() -= (1.0 / sbs) * bs_ * bs_.transpose();
        }
      }
    }
    x_ = xn_;
    g_ = gn_;
    f = fn;
    fresh = seeded;
    ++iter;
  }

  result.x = x_;
  result.value = f;
  result.iterations = iter;
  result.converged = converged;
  return result;
}

}  // namespace qmlcp

#include "qmlcp/likelihood.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>

namespace qmlcp {

namespace {

// Adds observation s to the running contrast and, when requested, to the
// gradient and Hessian accumulators.
struct ObservationAccumulator {
  bool mean_terms;
  bool variance_terms;

  double add(double xs, const MeanVarDerivatives& mv, Vector* grad, Matrix* hess) const {
    const double e = xs - mv.f;
    const double inv = 1.0 / mv.h;
    const double e2inv = e * e * inv;
    const double q = e2inv + std::log(mv.h);
    if (grad) {
      if (mean_terms) grad->noalias() += (-2.0 * e * inv) * mv.df;
      if (variance_terms) grad->noalias() += (inv * (1.0 - e2inv)) * mv.dh;
    }
    if (hess) {
      if (mean_terms) {
        hess->noalias() += (2.0 * inv) * mv.df * mv.df.transpose();
        hess->noalias() += (-2.0 * e * inv) * mv.d2f;
      }
      if (variance_terms) {
        hess->noalias() += (inv * inv * (2.0 * e2inv - 1.0)) * mv.dh * mv.dh.transpose();
        hess->noalias() += (inv * (1.0 - e2inv)) * mv.d2h;
      }
      if (mean_terms && variance_terms) {
        const double c = 2.0 * e * inv * inv;
        hess->noalias() += c * mv.df * mv.dh.transpose();
        hess->noalias() += c * mv.dh * mv.df.transpose();
      }
    }
    return q;
  }
};

ObservationAccumulator accumulator_for(const ModelFamily& family) {
  return {!family.is_volatility(), family.is_volatility()};
}

void check_bounds(SegmentRef seg, std::size_t n) {
  if (seg.lo < 0 || seg.hi < seg.lo || static_cast<std::size_t>(seg.hi) > n) {
    throw ConfigError("segment (" + std::to_string(seg.lo) + ", " + std::to_string(seg.hi) +
                      "] outside the series of length " + std::to_string(n));
  }
}

struct GarchPass {
  const double* x;
  const double* theta;
  int lo;
  int hi;
  int p;
  int q;
  double floor;
};

// GARCH(p, q) recursion over (0, hi] accumulating the contrast over (lo, hi]
// and, for Order >= 1 / 2, its gradient and Hessian. P and Q fix the orders at
// compile time (0: taken from `pass`). The gradient accumulator is left at
// the start of `buf`, followed by the Hessian accumulator.
template <int P, int Q, int Order>
double garch_pass(const GarchPass& pass, std::vector<double>& buf) {
  const int p = P > 0 ? P : pass.p;
  const int q = Q > 0 ? Q : pass.q;
  const int d = 1 + p + q;
  const std::size_t dd = static_cast<std::size_t>(d) * d;
  const std::size_t need = d + dd + p + (Order >= 1 ? p * d + d : 0) + (Order >= 2 ? p * dd + dd : 0);
  if (buf.size() < need) buf.resize(need);
  // Fixed orders work in a local array the compiler can keep in registers.
  constexpr bool fixed = P > 0 && Q > 0;
  constexpr std::size_t kD = 1 + P + Q;
  constexpr std::size_t kNeed = fixed ? kD + kD * kD + P + (Order >= 1 ? P * kD + kD : 0) +
                                            (Order >= 2 ? P * kD * kD + kD * kD : 0)
                                      : 1;
  std::array<double, kNeed> store;
  double* acc_g = fixed ? store.data() : buf.data();
  double* acc_h = acc_g + d;
  double* sig = acc_h + dd;
  double* dsig = sig + p;
  double* cur_g = dsig + (Order >= 1 ? p * d : 0);
  double* d2sig = cur_g + (Order >= 1 ? d : 0);
  double* cur_h = d2sig + (Order >= 2 ? p * dd : 0);
  std::fill(acc_g, acc_g + d + dd, 0.0);

  const double* th = pass.theta;
  const double* x = pass.x;
  double slack = 1.0;
  for (int k = 1; k <= p; ++k) slack -= th[q + k];
  const double level = th[0] / slack;
  for (int k = 0; k < p; ++k) {
    sig[k] = level;
    if constexpr (Order >= 1) {
      double* g = dsig + k * d;
      std::fill(g, g + d, 0.0);
      g[0] = 1.0 / slack;
      for (int j = 1; j <= p; ++j) g[q + j] = th[0] / (slack * slack);
    }
    if constexpr (Order >= 2) {
      double* H = d2sig + k * dd;
      std::fill(H, H + dd, 0.0);
      for (int j = 1; j <= p; ++j) {
        H[q + j] = H[(q + j) * d] = 1.0 / (slack * slack);
        for (int i = 1; i <= p; ++i) H[(q + i) * d + q + j] = 2.0 * th[0] / (slack * slack * slack);
      }
    }
  }

  int head = 0;  // ring slot of the most recent variance
  double total = 0.0;
  // sum log h is taken as the log of a running product, renormalised every
  // few steps so it cannot overflow or underflow.
  double prod = 1.0;
  long long exponent = 0;
  int pending = 0;
  for (int s = 1; s <= pass.hi; ++s) {
    double h = th[0];
    for (int k = 1; k <= q; ++k) {
      const double v = s - k >= 1 ? x[s - k - 1] : 0.0;
      h += th[k] * v * v;
    }
    for (int k = 1, slot = head; k <= p; ++k, slot = slot + 1 == p ? 0 : slot + 1) {
      h += th[q + k] * sig[slot];
    }
    if (!(h >= pass.floor)) {
      throw DomainError("conditional variance fell below the floor at s=" + std::to_string(s));
    }
    if constexpr (Order >= 1) {
      std::fill(cur_g, cur_g + d, 0.0);
      cur_g[0] = 1.0;
      for (int k = 1; k <= q; ++k) {
        const double v = s - k >= 1 ? x[s - k - 1] : 0.0;
        cur_g[k] = v * v;
      }
      for (int k = 1, slot = head; k <= p; ++k, slot = slot + 1 == p ? 0 : slot + 1) {
        const double b = th[q + k];
        const double* g = dsig + slot * d;
        cur_g[q + k] += sig[slot];
        for (int i = 0; i < d; ++i) cur_g[i] += b * g[i];
      }
    }
    if constexpr (Order >= 2) {
      std::fill(cur_h, cur_h + dd, 0.0);
      for (int k = 1, slot = head; k <= p; ++k, slot = slot + 1 == p ? 0 : slot + 1) {
        const double b = th[q + k];
        const double* H = d2sig + slot * dd;
        const double* g = dsig + slot * d;
        for (std::size_t i = 0; i < dd; ++i) cur_h[i] += b * H[i];
        const int bk = q + k;
        for (int i = 0; i < d; ++i) {
          cur_h[bk * d + i] += g[i];
          cur_h[i * d + bk] += g[i];
        }
      }
    }

    if (s > pass.lo) {
      const double e = x[s - 1];
      const double inv = 1.0 / h;
      const double e2inv = e * e * inv;
      total += e2inv;
      prod *= h;
      if (++pending == 16) {
        int ex = 0;
        prod = std::frexp(prod, &ex);
        exponent += ex;
        pending = 0;
      }
      if constexpr (Order >= 1) {
        const double c1 = inv * (1.0 - e2inv);
        for (int i = 0; i < d; ++i) acc_g[i] += c1 * cur_g[i];
        if constexpr (Order >= 2) {
          const double c2 = inv * inv * (2.0 * e2inv - 1.0);
          for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) acc_h[i * d + j] += c2 * cur_g[i] * cur_g[j] + c1 * cur_h[i * d + j];
          }
        }
      }
    }

    // The oldest slot becomes the newest.
    head = head == 0 ? p - 1 : head - 1;
    sig[head] = h;
    if constexpr (Order >= 1) std::copy(cur_g, cur_g + d, dsig + head * d);
    if constexpr (Order >= 2) std::copy(cur_h, cur_h + dd, d2sig + head * dd);
  }
  if constexpr (fixed) std::copy(acc_g, acc_g + d + dd, buf.data());
  return total + std::log(prod) + static_cast<double>(exponent) * std::numbers::ln2;
}

}  // namespace

double qhat(const ModelFamily& family, const Vector& theta, std::span<const double> series, int s,
            double variance_floor) {
  if (s < 1 || static_cast<std::size_t>(s) > series.size()) {
    throw ConfigError("time index s=" + std::to_string(s) + " outside 1.." +
                      std::to_string(series.size()));
  }
  MomentSweep sweep(family, 0);
  sweep.reset(theta, variance_floor);
  sweep.seek(series, s);
  return accumulator_for(family).add(series[static_cast<std::size_t>(s - 1)], sweep.next(series),
                                     nullptr, nullptr);
}

double segment_contrast(const ModelFamily& family, const Vector& theta,
                        std::span<const double> series, SegmentRef seg, double variance_floor) {
  check_bounds(seg, series.size());
  family.check_parameters(theta);
  if (seg.length() == 0) return 0.0;
  MomentSweep sweep(family, 0);
  sweep.reset(theta, variance_floor);
  sweep.seek(series, seg.lo + 1);
  const ObservationAccumulator acc = accumulator_for(family);
  double total = 0.0;
  for (int s = seg.lo + 1; s <= seg.hi; ++s) {
    total += acc.add(series[static_cast<std::size_t>(s - 1)], sweep.next(series), nullptr, nullptr);
  }
  return total;
}

SegmentScore segment_score(const ModelFamily& family, const Vector& theta,
                           std::span<const double> series, SegmentRef seg,
                           const ParamDomain* domain) {
  check_bounds(seg, series.size());
  family.check_parameters(theta);
  const int d = family.dimension();
  SegmentScore out{Vector::Zero(d), Matrix::Zero(d, d), false};
  out.on_boundary = domain != nullptr && domain->on_boundary(theta);
  if (seg.length() == 0) return out;
  MomentSweep sweep(family, 2);
  sweep.reset(theta, domain ? domain->variance_floor : kDefaultVarianceFloor);
  sweep.seek(series, seg.lo + 1);
  const ObservationAccumulator acc = accumulator_for(family);
  for (int s = seg.lo + 1; s <= seg.hi; ++s) {
    acc.add(series[static_cast<std::size_t>(s - 1)], sweep.next(series), &out.gradient,
            &out.hessian);
  }
  return out;
}

// ---------------------------------------------------------------------------
// ContrastEvaluator
// ---------------------------------------------------------------------------

ContrastEvaluator::ContrastEvaluator(ModelFamily family, std::vector<double> series,
                                     double variance_floor)
    : family_(std::move(family)), series_(std::move(series)), floor_(variance_floor) {
  for (double v : series_) {
    if (!std::isfinite(v)) throw ConfigError("series contains non-finite values");
  }
  if (const auto* ar = std::get_if<ArFamily>(&family_.spec())) {
    const int p = ar->order;
    const std::size_t n = series_.size();
    ar_order_ = p;
    sxx_.assign(n + 1, 0.0);
    sxz_.assign((n + 1) * p, 0.0);
    szz_.assign((n + 1) * p * p, 0.0);
    long double axx = 0.0L;
    std::vector<long double> axz(p, 0.0L);
    std::vector<long double> azz(static_cast<std::size_t>(p * p), 0.0L);
    for (std::size_t t = 1; t <= n; ++t) {
      const long double xs = series_[t - 1];
      axx += xs * xs;
      sxx_[t] = static_cast<double>(axx);
      for (int k = 0; k < p; ++k) {
        const long double zk = (t > static_cast<std::size_t>(k + 1)) ? series_[t - k - 2] : 0.0;
        axz[k] += xs * zk;
        sxz_[t * p + k] = static_cast<double>(axz[k]);
        for (int l = 0; l < p; ++l) {
          const long double zl = (t > static_cast<std::size_t>(l + 1)) ? series_[t - l - 2] : 0.0;
          azz[k * p + l] += zk * zl;
          szz_[(t * p + k) * p + l] = static_cast<double>(azz[k * p + l]);
        }
      }
    }
  }
}

ContrastEvaluator::~ContrastEvaluator() = default;
ContrastEvaluator::ContrastEvaluator(ContrastEvaluator&&) noexcept = default;
ContrastEvaluator& ContrastEvaluator::operator=(ContrastEvaluator&&) noexcept = default;

std::unique_ptr<ContrastEvaluator::Workspace> ContrastEvaluator::make_workspace() const {
  return std::make_unique<Workspace>(family_);
}

void ContrastEvaluator::check_segment(SegmentRef seg) const { check_bounds(seg, series_.size()); }

double ContrastEvaluator::evaluate(SegmentRef seg, const Vector& theta, Vector* gradient,
                                   Matrix* hessian, Workspace* ws) const {
  if (ar_order_ > 0) {
    check_segment(seg);
    family_.check_parameters(theta);
    return evaluate_ar(seg, theta, gradient, hessian);
  }
  if (family_.recursive()) return evaluate_garch(seg, theta, gradient, hessian, ws);
  return evaluate_by_sweep(seg, theta, gradient, hessian, ws);
}

double ContrastEvaluator::evaluate_ar(SegmentRef seg, const Vector& theta, Vector* gradient,
                                      Matrix* hessian) const {
  const int p = ar_order_;
  const std::size_t lo = static_cast<std::size_t>(seg.lo);
  const std::size_t hi = static_cast<std::size_t>(seg.hi);
  const double a = sxx_[hi] - sxx_[lo];
  double value = a;
  if (gradient) gradient->setZero(p);
  if (hessian) hessian->setZero(p, p);
  for (int k = 0; k < p; ++k) {
    const double bk = sxz_[hi * p + k] - sxz_[lo * p + k];
    double ck_phi = 0.0;
    for (int l = 0; l < p; ++l) {
      const double ckl = szz_[(hi * p + k) * p + l] - szz_[(lo * p + k) * p + l];
      ck_phi += ckl * theta[l];
      if (hessian) (*hessian)(k, l) = 2.0 * ckl;
    }
    value += theta[k] * (ck_phi - 2.0 * bk);
    if (gradient) (*gradient)[k] = 2.0 * (ck_phi - bk);
  }
  return value;
}

double ContrastEvaluator::evaluate_garch(SegmentRef seg, const Vector& theta, Vector* gradient,
                                         Matrix* hessian, Workspace* ws) const {
  check_segment(seg);
  family_.check_parameters(theta);
  const auto& fam = std::get<GarchFamily>(family_.spec());
  const int d = family_.dimension();
  const int order = hessian ? 2 : (gradient ? 1 : 0);
  if (gradient) gradient->setZero(d);
  if (hessian) hessian->setZero(d, d);
  if (seg.length() == 0) return 0.0;

  if (theta[0] < floor_) throw DomainError("GARCH constant a_0 below the variance floor");
  for (int k = 1; k < d; ++k) {
    if (theta[k] < 0.0) throw DomainError("GARCH coefficients must be nonnegative");
  }
  double bsum = 0.0;
  for (int k = 1; k <= fam.p; ++k) bsum += theta[fam.q + k];
  if (!(1.0 - bsum > 0.0)) throw DomainError("GARCH needs sum of b_k < 1");

  std::vector<double> local;
  std::vector<double>& buf = ws ? ws->buffer : local;
  const GarchPass pass{series_.data(), theta.data(), seg.lo, seg.hi, fam.p, fam.q, floor_};
  double total = 0.0;
  const bool simple = fam.p == 1 && fam.q == 1;
  switch (order) {
    case 0:
      total = simple ? garch_pass<1, 1, 0>(pass, buf) : garch_pass<0, 0, 0>(pass, buf);
      break;
    case 1:
      total = simple ? garch_pass<1, 1, 1>(pass, buf) : garch_pass<0, 0, 1>(pass, buf);
      break;
    default:
      total = simple ? garch_pass<1, 1, 2>(pass, buf) : garch_pass<0, 0, 2>(pass, buf);
      break;
  }
  const double* acc_g = buf.data();
  const double* acc_h = acc_g + d;
  if (gradient) *gradient = Eigen::Map<const Vector>(acc_g, d);
  if (hessian) {
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) (*hessian)(i, j) = acc_h[i * d + j];
    }
  }
  return total;
}

double ContrastEvaluator::evaluate_by_sweep(SegmentRef seg, const Vector& theta, Vector* gradient,
                                            Matrix* hessian, Workspace* ws) const {
  check_segment(seg);
  family_.check_parameters(theta);
  const int d = family_.dimension();
  if (gradient) gradient->setZero(d);
  if (hessian) hessian->setZero(d, d);
  if (seg.length() == 0) return 0.0;

  const int order = hessian ? 2 : (gradient ? 1 : 0);
  std::optional<Workspace> local;
  if (!ws) {
    local.emplace(family_);
    ws = &*local;
  }
  MomentSweep& sweep = ws->sweep(order);
  sweep.reset(theta, floor_);
  sweep.seek(series_, seg.lo + 1);
  const ObservationAccumulator acc = accumulator_for(family_);
  double total = 0.0;
  for (int s = seg.lo + 1; s <= seg.hi; ++s) {
    total += acc.add(series_[static_cast<std::size_t>(s - 1)], sweep.next(series_), gradient,
                     hessian);
  }
  return total;
}

ScoreMoments ContrastEvaluator::score_moments(SegmentRef seg, const Vector& theta) const {
  check_segment(seg);
  family_.check_parameters(theta);
  const int d = family_.dimension();
  ScoreMoments out;
  out.count = seg.length();
  out.gradient_sum = Vector::Zero(d);
  out.hessian_sum = Matrix::Zero(d, d);
  out.outer_sum = Matrix::Zero(d, d);
  if (seg.length() == 0) return out;

  MomentSweep sweep(family_, 2);
  sweep.reset(theta, floor_);
  sweep.seek(series_, seg.lo + 1);
  const ObservationAccumulator acc = accumulator_for(family_);
  Vector g(d);
  Matrix h(d, d);
  for (int s = seg.lo + 1; s <= seg.hi; ++s) {
    g.setZero();
    h.setZero();
    out.contrast += acc.add(series_[static_cast<std::size_t>(s - 1)], sweep.next(series_), &g, &h);
    out.gradient_sum += g;
    out.hessian_sum += h;
    out.outer_sum.noalias() += g * g.transpose();
  }
  return out;
}

}  // namespace qmlcp

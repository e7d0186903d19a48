#pragma once

#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "qmlcp/models.hpp"

namespace qmlcp {

// T = {lo + 1, ..., hi} in 1-based time, so a segmentation 0 = t_0 < t_1 <
// ... < t_K = n maps to SegmentRef{t_{k-1}, t_k}.
struct SegmentRef {
  int lo = 0;
  int hi = 0;
  int length() const { return hi - lo; }
  friend bool operator==(const SegmentRef&, const SegmentRef&) = default;
};

// qhat_s(theta) = (X_s - f)^2 / h + log h with f, h evaluated on the full
// observed prefix X_{s-1}, ..., X_1 padded with zeros. Independent of any
// segmentation.
double qhat(const ModelFamily& family, const Vector& theta, std::span<const double> series, int s,
            double variance_floor = kDefaultVarianceFloor);

// -2 * quasi-log-likelihood over the segment, i.e. the sum of qhat_s. An empty
// segment contributes 0.
double segment_contrast(const ModelFamily& family, const Vector& theta,
                        std::span<const double> series, SegmentRef seg,
                        double variance_floor = kDefaultVarianceFloor);

struct SegmentScore {
  Vector gradient;
  Matrix hessian;
  bool on_boundary = false;
};

SegmentScore segment_score(const ModelFamily& family, const Vector& theta,
                           std::span<const double> series, SegmentRef seg,
                           const ParamDomain* domain = nullptr);

// Sums over a segment of the per-observation Hessians and score outer
// products (the ingredients of the sandwich covariance).
struct ScoreMoments {
  int count = 0;
  double contrast = 0.0;
  Vector gradient_sum;
  Matrix hessian_sum;
  Matrix outer_sum;
};

// Segment contrast evaluator bound to one series. Const member functions are
// safe to call concurrently; pass a per-thread Workspace to avoid
// allocations in tight loops. AR(p) segments are evaluated from prefix sums
// of lag cross-products in O(p^2); GARCH runs a flat-array recursion over the
// prefix; every other family sweeps the segment.
class ContrastEvaluator {
 public:
  class Workspace;

  ContrastEvaluator(ModelFamily family, std::vector<double> series,
                    double variance_floor = kDefaultVarianceFloor);
  ~ContrastEvaluator();
  ContrastEvaluator(ContrastEvaluator&&) noexcept;
  ContrastEvaluator& operator=(ContrastEvaluator&&) noexcept;

  const ModelFamily& family() const { return family_; }
  std::span<const double> series() const { return series_; }
  int size() const { return static_cast<int>(series_.size()); }
  double variance_floor() const { return floor_; }

  std::unique_ptr<Workspace> make_workspace() const;

  double evaluate(SegmentRef seg, const Vector& theta, Vector* gradient = nullptr,
                  Matrix* hessian = nullptr, Workspace* ws = nullptr) const;

  // Same value as evaluate() but always through the per-observation sweep.
  double evaluate_by_sweep(SegmentRef seg, const Vector& theta, Vector* gradient = nullptr,
                           Matrix* hessian = nullptr, Workspace* ws = nullptr) const;

  ScoreMoments score_moments(SegmentRef seg, const Vector& theta) const;

 private:
  void check_segment(SegmentRef seg) const;
  double evaluate_ar(SegmentRef seg, const Vector& theta, Vector* gradient, Matrix* hessian) const;
  double evaluate_garch(SegmentRef seg, const Vector& theta, Vector* gradient, Matrix* hessian,
                        Workspace* ws) const;

  ModelFamily family_;
  std::vector<double> series_;
  double floor_;
  int ar_order_ = 0;
  // Prefix sums for AR(p): X_s^2, X_s z_s, z_s z_s^T with z_s the zero-padded
  // lag vector (X_{s-1}, ..., X_{s-p}).
  std::vector<double> sxx_;
  std::vector<double> sxz_;
  std::vector<double> szz_;
};

// Per-thread scratch state (one moment sweep per derivative order).
class ContrastEvaluator::Workspace {
 public:
  explicit Workspace(const ModelFamily& family) : family_(family) {}

  MomentSweep& sweep(int order) {
    auto& slot = sweeps_[order];
    if (!slot) slot.emplace(family_, order);
    return *slot;
  }

  // Flat scratch for the GARCH recursion.
  std::vector<double> buffer;

 private:
  ModelFamily family_;
  std::optional<MomentSweep> sweeps_[3];
};

}  // namespace qmlcp

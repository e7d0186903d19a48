#pragma once

#include <vector>

#include "qmlcp/likelihood.hpp"

namespace qmlcp {

inline constexpr double kMaxInformationCondition = 1e12;

// F_hat and G_hat are per-observation averages over the segment, so
// theta_hat +- z sqrt(cov_ii / n_j) is the interval for coordinate i.
struct SandwichEstimate {
  Matrix F_hat;
  Matrix G_hat;
  Matrix cov;
  int n_j = 0;
  double condition_F = 0.0;
  bool on_boundary = false;
};

// Throws DegenerateInformation if cond(F_hat) exceeds the threshold or F_hat
// is singular.
SandwichEstimate sandwich_cov(const ContrastEvaluator& evaluator, SegmentRef seg,
                              const Vector& theta, const ParamDomain* domain = nullptr);

// Same algebra from given F and G (symmetrised first).
SandwichEstimate sandwich_from_matrices(const Matrix& F, const Matrix& G, int n_j);

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  bool contains(double v) const { return lower <= v && v <= upper; }
};

std::vector<ConfidenceInterval> confint(const SandwichEstimate& est, const Vector& theta,
                                        double level);

// Two-sided standard normal quantile z_{(1 + level) / 2}.
double normal_quantile_two_sided(double level);

}  // namespace qmlcp

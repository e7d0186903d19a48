#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "qmlcp/models.hpp"

namespace qmlcp {

// Ground truth of a piecewise model: K* regimes separated at floor(n tau_j).
struct BreakModel {
  ModelFamily family;
  std::vector<double> tau;     // K* - 1 break fractions in (0, 1)
  std::vector<Vector> thetas;  // K* parameter vectors
  InnovationLaw innovation = InnovationLaw::gaussian();
  double moment_order = 2.0;   // r used for the stationarity check

  int k_star() const { return static_cast<int>(thetas.size()); }

  // t*_j = floor(n tau_j); throws ConfigError if they collide for this n.
  std::vector<int> break_points(int n) const;

  // Dimensions, strictly increasing tau, distinct consecutive regimes and
  // every theta inside the stationarity domain for moment_order.
  void validate() const;
};

struct SeriesSample {
  std::vector<double> x;
  int n = 0;
  std::optional<std::vector<int>> true_breaks;
  std::uint64_t seed = 0;
  int burn_in = 0;
  bool zero_past = false;
};

// Iid centred, unit-variance draws; deterministic in (law, count, seed).
std::vector<double> sample_innovations(const InnovationLaw& law, std::size_t count,
                                       std::uint64_t seed);

// Builds the path forward in time on one continuous trajectory: the first
// regime runs for burn_in + t*_1 steps from a zero past (only the last t*_1
// values are kept), then each later regime continues from the same path with
// its own parameters. With zero_past the burn-in is skipped and X_t = 0 for
// t <= 0.
SeriesSample simulate_piecewise(const BreakModel& model, int n, int burn_in, std::uint64_t seed,
                                bool zero_past = false);

}  // namespace qmlcp

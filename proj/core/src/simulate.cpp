#include "qmlcp/simulate.hpp"

#include <cmath>
#include <random>
#include <sstream>

namespace qmlcp {

std::vector<int> BreakModel::break_points(int n) const {
  std::vector<int> out;
  out.reserve(tau.size());
  int prev = 0;
  for (double t : tau) {
    const int b = static_cast<int>(std::floor(n * t));
    if (b <= prev || b >= n) {
      throw ConfigError("break fractions collide or leave (0, n) for n=" + std::to_string(n));
    }
    out.push_back(b);
    prev = b;
  }
  return out;
}

void BreakModel::validate() const {
  if (thetas.empty()) throw ConfigError("break model needs at least one regime");
  if (tau.size() + 1 != thetas.size()) {
    throw ConfigError("break model needs exactly K*-1 break fractions for K* regimes");
  }
  double prev = 0.0;
  for (double t : tau) {
    if (!(t > prev && t < 1.0)) throw ConfigError("break fractions must increase strictly inside (0, 1)");
    prev = t;
  }
  for (std::size_t j = 0; j < thetas.size(); ++j) {
    family.check_parameters(thetas[j]);
    const ContractionReport rep = contraction(family, thetas[j], moment_order, innovation);
    if (!rep.in_domain) {
      std::ostringstream os;
      os << "parameter of regime " << (j + 1) << " is outside the stationarity domain of "
         << family.name() << " (beta0 = " << rep.beta0 << " >= 1 at r = " << moment_order << ")";
      throw DomainError(os.str());
    }
    if (j > 0 && (thetas[j] - thetas[j - 1]).norm() == 0.0) {
      throw ConfigError("consecutive regimes must have different parameters");
    }
  }
}

std::vector<double> sample_innovations(const InnovationLaw& law, std::size_t count,
                                       std::uint64_t seed) {
  std::vector<double> out(count);
  std::mt19937_64 rng(seed);
  if (law.kind == InnovationKind::gaussian) {
    std::normal_distribution<double> dist(0.0, 1.0);
    for (double& v : out) v = dist(rng);
  } else {
    if (!(law.dof > 2.0)) throw ConfigError("Student-t innovations need dof > 2");
    std::student_t_distribution<double> dist(law.dof);
    const double scale = std::sqrt((law.dof - 2.0) / law.dof);
    for (double& v : out) v = scale * dist(rng);
  }
  return out;
}

SeriesSample simulate_piecewise(const BreakModel& model, int n, int burn_in, std::uint64_t seed,
                                bool zero_past) {
  model.validate();
  if (n < 1) throw ConfigError("series length must be >= 1");
  if (zero_past) {
    burn_in = 0;
  } else if (burn_in < model.family.max_lag()) {
    throw ConfigError("burn-in must be at least the family's max lag (" +
                      std::to_string(model.family.max_lag()) + ")");
  }
  const std::vector<int> breaks = model.break_points(n);

  const std::size_t total = static_cast<std::size_t>(burn_in) + static_cast<std::size_t>(n);
  const std::vector<double> xi = sample_innovations(model.innovation, total, seed);
  std::vector<double> path(total, 0.0);

  MomentSweep sweep(model.family, 0);
  int start = 1;  // 1-based index into path
  for (int j = 0; j < model.k_star(); ++j) {
    const int end = burn_in + (j + 1 < model.k_star() ? breaks[j] : n);
    sweep.reset(model.thetas[j]);
    sweep.seek(path, start);
    for (int t = start; t <= end; ++t) {
      const MeanVarDerivatives& mv = sweep.next(path);
      path[t - 1] = mv.f + std::sqrt(mv.h) * xi[t - 1];
    }
    start = end + 1;
  }

  SeriesSample out;
  out.x.assign(path.begin() + burn_in, path.end());
  out.n = n;
  out.true_breaks = breaks;
  out.seed = seed;
  out.burn_in = burn_in;
  out.zero_past = zero_past;
  return out;
}

}  // namespace qmlcp

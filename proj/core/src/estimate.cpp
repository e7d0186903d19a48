#include "qmlcp/estimate.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "overloaded.hpp"
#include "qmlcp/parallel.hpp"

namespace qmlcp {

namespace {

using detail::Overloaded;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Coordinates that scale the Lipschitz sum linearly (everything except the
// constant of a volatility family and the decay exponent of RiemannianAR).
std::vector<bool> scalable_coordinates(const ModelFamily& family) {
  const int d = family.dimension();
  std::vector<bool> out(static_cast<std::size_t>(d), true);
  if (family.is_volatility()) out[0] = false;
  if (std::holds_alternative<RiemannianArFamily>(family.spec())) out[1] = false;
  return out;
}

double parse_double(std::string_view text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto res = std::from_chars(text.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) {
    throw ConfigError("cannot parse number '" + std::string(text) + "'");
  }
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------
// PenaltySchedule
// ---------------------------------------------------------------------------

PenaltySchedule PenaltySchedule::custom(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw ConfigError("custom penalty must be finite and >= 0");
  return {PenaltyKind::custom, beta};
}

PenaltySchedule PenaltySchedule::parse(std::string_view text) {
  if (text == "sqrt_n") return {PenaltyKind::sqrt_n, 0.0};
  if (text == "bic") return {PenaltyKind::bic, 0.0};
  if (text == "heavy") return {PenaltyKind::heavy, 0.0};
  if (text.rfind("custom:", 0) == 0) return custom(parse_double(text.substr(7)));
  try {
    return custom(parse_double(text));
  } catch (const ConfigError&) {
    throw ConfigError("unknown penalty '" + std::string(text) +
                      "' (expected sqrt_n, bic, heavy or custom:<beta>)");
  }
}

double PenaltySchedule::beta(int n) const {
  if (n < 2) throw ConfigError("penalty needs n >= 2");
  const double dn = n;
  switch (kind) {
    case PenaltyKind::sqrt_n:
      return std::sqrt(dn);
    case PenaltyKind::bic:
      return std::log(dn);
    case PenaltyKind::heavy:
      return dn / std::log(dn);
    case PenaltyKind::custom:
      return value;
  }
  return value;
}

std::string PenaltySchedule::name() const {
  switch (kind) {
    case PenaltyKind::sqrt_n:
      return "sqrt_n";
    case PenaltyKind::bic:
      return "bic";
    case PenaltyKind::heavy:
      return "heavy";
    case PenaltyKind::custom: {
      std::ostringstream os;
      os.precision(17);
      os << "custom:" << value;
      return os.str();
    }
  }
  return "custom";
}

// ---------------------------------------------------------------------------
// SegmentFitter
// ---------------------------------------------------------------------------

// Segment contrast plus the contraction barrier; +inf outside {beta0 < 1 - margin}.
class SegmentFitter::Objective : public BoxObjective {
 public:
  Objective(const ContrastEvaluator& evaluator, const ParamDomain& domain, const FitOptions& options)
      : evaluator_(evaluator),
        domain_(domain),
        options_(options),
        ws_(evaluator.make_workspace()) {}

  SegmentRef seg;

  double beta0(const Vector& x) const {
    return contraction(evaluator_.family(), x, domain_.moment_order, options_.innovation).beta0;
  }

  double evaluate(const Vector& x, Vector* gradient, Matrix* hessian) override {
    const double gap = 1.0 - options_.contraction_margin - beta0(x);
    if (!(gap > 0.0)) return kInf;
    double value = 0.0;
    try {
      value = evaluator_.evaluate(seg, x, gradient, hessian, ws_.get());
    } catch (const DomainError&) {
      return kInf;
    }
    if (!std::isfinite(value)) return kInf;
    const double width = options_.barrier_width;
    if (gap < width && options_.barrier_weight > 0.0) {
      const double w = options_.barrier_weight;
      const double u = gap / width;
      value += w * (-std::log(u) + u - 1.0);
      if (gradient || hessian) {
        const Vector cg = contraction_gradient(evaluator_.family(), x, domain_.moment_order,
                                               options_.innovation);
        if (gradient) gradient->noalias() += (w * (1.0 / gap - 1.0 / width)) * cg;
        if (hessian) hessian->noalias() += (w / (gap * gap)) * cg * cg.transpose();
      }
    }
    return value;
  }

  double contrast(const Vector& x) { return evaluator_.evaluate(seg, x, nullptr, nullptr, ws_.get()); }

 private:
  const ContrastEvaluator& evaluator_;
  const ParamDomain& domain_;
  const FitOptions& options_;
  std::unique_ptr<ContrastEvaluator::Workspace> ws_;
};

SegmentFitter::SegmentFitter(const ContrastEvaluator& evaluator, ParamDomain domain,
                             FitOptions options)
    : evaluator_(&evaluator),
      domain_(std::move(domain)),
      options_(options),
      minimizer_(evaluator.family().dimension(), options.minimizer) {
  domain_.validate(evaluator.family());
  if (options_.restarts < 0) throw ConfigError("restart count must be >= 0");
  objective_ = std::make_unique<Objective>(*evaluator_, domain_, options_);
}

SegmentFitter::~SegmentFitter() = default;

SegmentFitter::SegmentFitter(SegmentFitter&& other) noexcept
    : evaluator_(other.evaluator_),
      domain_(std::move(other.domain_)),
      options_(other.options_),
      minimizer_(std::move(other.minimizer_)) {
  objective_ = std::make_unique<Objective>(*evaluator_, domain_, options_);
}

namespace {

double mean_square(std::span<const double> x, SegmentRef seg) {
  double v = 0.0;
  for (int s = seg.lo + 1; s <= seg.hi; ++s) v += x[s - 1] * x[s - 1];
  return seg.length() > 0 ? v / seg.length() : 1.0;
}

}  // namespace

Vector SegmentFitter::default_start(SegmentRef seg) const {
  const ModelFamily& family = evaluator_->family();
  const int d = family.dimension();
  const double v = mean_square(evaluator_->series(), seg);

  Vector theta = Vector::Zero(d);
  std::visit(Overloaded{
                 [&](const ArFamily&) {},
                 [&](const RiemannianArFamily&) { theta << 0.0, 2.0; },
                 [&](const ArchFamily& f) {
                   theta.tail(f.order).setConstant(0.3 / f.order);
                   theta[0] = 0.7 * v;
                 },
                 [&](const GarchFamily& f) {
                   theta.segment(1, f.q).setConstant(0.1 / f.q);
                   theta.tail(f.p).setConstant(0.6 / f.p);
                   theta[0] = 0.3 * v;
                 },
                 [&](const TarchFamily& f) {
                   theta.tail(2 * f.order).setConstant(0.2 / f.order);
                   theta[0] = 0.8 * std::sqrt(v);
                 },
             },
             family.spec());
  return theta.cwiseMax(domain_.lower).cwiseMin(domain_.upper);
}

SegmentFit SegmentFitter::fit(SegmentRef seg, const std::optional<Vector>& warm_start) {
  const ModelFamily& family = evaluator_->family();
  const int d = family.dimension();
  if (seg.lo < 0 || seg.hi > evaluator_->size() || seg.length() < 1) {
    throw ConfigError("cannot fit segment (" + std::to_string(seg.lo) + ", " +
                      std::to_string(seg.hi) + "]");
  }
  objective_->seg = seg;
  const std::vector<bool> scalable = scalable_coordinates(family);
  const double safe_level = 1.0 - options_.contraction_margin - options_.barrier_width;

  // Quadratic contrast: the stationary point is the answer whenever it lies
  // strictly inside the box and clear of the barrier zone.
  if (family.linear_mean_unit_variance()) {
    Vector g(d);
    Matrix h(d, d);
    const Vector zero = Vector::Zero(d);
    evaluator_->evaluate(seg, zero, &g, &h);
    const Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
      const Vector theta = ldlt.solve(-g);
      const bool interior = theta.allFinite() && (theta.array() > domain_.lower.array()).all() &&
                            (theta.array() < domain_.upper.array()).all();
      if (interior && objective_->beta0(theta) <= safe_level) {
        SegmentFit out;
        out.cost = objective_->contrast(theta);
        out.theta = theta;
        out.evaluations = 2;
        if (std::isfinite(out.cost)) {
          Vector gt(d);
          evaluator_->evaluate(seg, theta, &gt, nullptr);
          out.converged = gt.cwiseAbs().maxCoeff() <=
                          options_.minimizer.gradient_tol * std::max(1.0, std::abs(out.cost));
          if (out.converged) return out;
        }
      }
    }
  }

  // Pull the scalable coordinates in until the point is safely inside the
  // contraction region.
  auto shrink_into_region = [&](Vector& theta, double target) {
    const double b = objective_->beta0(theta);
    if (b <= target || b == 0.0) return;
    const double factor = target / b;
    for (int k = 0; k < d; ++k) {
      if (scalable[k]) theta[k] *= factor;
    }
    theta = theta.cwiseMax(domain_.lower).cwiseMin(domain_.upper);
  };

  std::vector<Vector> starts;
  if (warm_start && warm_start->size() == d && warm_start->allFinite()) {
    Vector w = warm_start->cwiseMax(domain_.lower).cwiseMin(domain_.upper);
    shrink_into_region(w, 0.99 * safe_level);
    starts.push_back(std::move(w));
  } else {
    starts.push_back(default_start(seg));
  }
  // GARCH contrasts are often multimodal on short segments: add starts in the
  // ARCH-like and in the near-integrated basin, all at the sample level.
  if (const auto* g = std::get_if<GarchFamily>(&family.spec())) {
    const double level = mean_square(evaluator_->series(), seg);
    for (const auto& [a, b] : {std::pair{0.3, 0.05}, std::pair{0.05, 0.9}, std::pair{0.015, 0.96}}) {
      Vector persistent(d);
      persistent[0] = level * (1.0 - a - b);
      persistent.segment(1, g->q).setConstant(a / g->q);
      persistent.tail(g->p).setConstant(b / g->p);
      persistent = persistent.cwiseMax(domain_.lower).cwiseMin(domain_.upper);
      shrink_into_region(persistent, 0.99 * safe_level);
      starts.push_back(std::move(persistent));
    }
  }

  const int restarts = family.linear_mean_unit_variance() ? 0 : options_.restarts;
  if (restarts > 0) {
    std::mt19937_64 rng(mix64(options_.seed ^ mix64((static_cast<std::uint64_t>(seg.lo) << 32) ^
                                                    static_cast<std::uint64_t>(seg.hi))));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const Vector centre = default_start(seg);
    for (int r = 0; r < restarts; ++r) {
      Vector theta(d);
      for (int k = 0; k < d; ++k) {
        theta[k] = domain_.lower[k] + unit(rng) * (domain_.upper[k] - domain_.lower[k]);
      }
      if (family.is_volatility()) {
        theta[0] = std::clamp(centre[0] * std::exp(3.0 * unit(rng) - 1.5), domain_.lower[0],
                              domain_.upper[0]);
      }
      shrink_into_region(theta, (0.05 + 0.9 * unit(rng)) * safe_level);
      starts.push_back(std::move(theta));
    }
  }

  SegmentFit best;
  best.theta = starts.front();
  for (const Vector& start : starts) {
    const BoxMinimizerResult res =
        minimizer_.minimize(*objective_, start, domain_.lower, domain_.upper);
    best.evaluations += res.evaluations;
    if (!std::isfinite(res.value)) continue;
    const double cost = objective_->contrast(res.x);
    if (cost < best.cost || (cost == best.cost && res.converged && !best.converged)) {
      best.theta = res.x;
      best.cost = cost;
      best.converged = res.converged;
    }
  }
  return best;
}

SegmentFit fit_segment(const ContrastEvaluator& evaluator, SegmentRef seg, const ParamDomain& domain,
                       const std::optional<Vector>& warm_start, const FitOptions& options) {
  SegmentFitter fitter(evaluator, domain, options);
  return fitter.fit(seg, warm_start);
}

// ---------------------------------------------------------------------------
// SegmentCostTable
// ---------------------------------------------------------------------------

SegmentCostTable::SegmentCostTable(std::vector<int> positions, int min_len, int dimension,
                                   int grid_step, std::vector<int> groups)
    : positions_(std::move(positions)),
      groups_(std::move(groups)),
      min_len_(min_len),
      dim_(dimension),
      grid_step_(grid_step) {
  if (positions_.size() < 2 || positions_.front() != 0) {
    throw ConfigError("candidate positions must start at 0 and contain at least one segment");
  }
  for (std::size_t i = 1; i < positions_.size(); ++i) {
    if (positions_[i] <= positions_[i - 1]) throw ConfigError("candidate positions must increase");
  }
  if (!groups_.empty() && groups_.size() != positions_.size()) {
    throw ConfigError("one group per candidate position is required");
  }
  if (min_len_ < 1) throw ConfigError("min_len must be >= 1");
  if (dim_ < 1) throw ConfigError("table dimension must be >= 1");
  const std::size_t m = positions_.size() - 1;
  row_offset_.resize(m + 1);
  std::size_t offset = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    row_offset_[i] = offset;
    offset += m - i;
  }
  cost_.assign(offset, kInf);
  theta_.assign(offset * static_cast<std::size_t>(dim_), std::numeric_limits<double>::quiet_NaN());
  converged_.assign(offset, 0);
}

Vector SegmentCostTable::theta(int i, int j) const {
  const std::size_t base = index(i, j) * static_cast<std::size_t>(dim_);
  return Eigen::Map<const Vector>(theta_.data() + base, dim_);
}

void SegmentCostTable::set(int i, int j, double cost, const Vector& theta, bool converged) {
  if (!(0 <= i && i < j && j < size())) throw ConfigError("cost table index out of range");
  if (theta.size() != dim_) throw InvalidParameter("cost table theta has the wrong dimension");
  const std::size_t idx = index(i, j);
  cost_[idx] = cost;
  std::copy(theta.data(), theta.data() + dim_, theta_.begin() + idx * static_cast<std::size_t>(dim_));
  converged_[idx] = converged ? 1 : 0;
}

long long SegmentCostTable::admissible_cells() const {
  long long count = 0;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) count += admissible(i, j) ? 1 : 0;
  }
  return count;
}

long long SegmentCostTable::nonconverged_cells() const {
  long long count = 0;
  for (int i = 0; i < size(); ++i) {
    for (int j = i + 1; j < size(); ++j) count += (admissible(i, j) && !converged(i, j)) ? 1 : 0;
  }
  return count;
}

int default_min_len(const ModelFamily& family) { return std::max(10, 2 * family.dimension()); }

int default_grid_step(int n) { return n <= 2000 ? 1 : (n + 1999) / 2000; }

std::vector<int> grid_positions(int n, int step) {
  if (n < 1 || step < 1) throw ConfigError("grid needs n >= 1 and step >= 1");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n / step + 2));
  for (int p = 0; p < n; p += step) out.push_back(p);
  out.push_back(n);
  return out;
}

SegmentCostTable build_cost_table(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                                  const std::vector<int>& positions, const TableOptions& options,
                                  int grid_step, const std::vector<int>& groups) {
  const ModelFamily& family = evaluator.family();
  const int d = family.dimension();
  const int min_len = options.min_len > 0 ? options.min_len : default_min_len(family);
  if (min_len < d + 2) {
    throw ConfigError("min_len must be at least d + 2 = " + std::to_string(d + 2));
  }
  if (positions.empty() || positions.back() != evaluator.size()) {
    throw ConfigError("candidate positions must end at n");
  }
  SegmentCostTable table(positions, min_len, d, grid_step, groups);
  const int m = table.size() - 1;
  const int workers = std::min(options.workers > 0 ? options.workers : default_worker_count(), m);

  std::vector<std::unique_ptr<SegmentFitter>> fitters(static_cast<std::size_t>(std::max(workers, 1)));
  for (auto& f : fitters) f = std::make_unique<SegmentFitter>(evaluator, domain, options.fit);

  parallel_for(m, workers, [&](int i, int worker) {
    SegmentFitter& fitter = *fitters[static_cast<std::size_t>(worker)];
    std::optional<Vector> warm;
    for (int j = i + 1; j <= m; ++j) {
      if (!table.admissible(i, j)) continue;
      const SegmentFit fit = fitter.fit({positions[i], positions[j]},
                                        options.warm_start ? warm : std::nullopt);
      table.set(i, j, fit.cost, fit.theta, fit.converged);
      if (std::isfinite(fit.cost)) warm = fit.theta;
    }
  });
  return table;
}

SegmentCostTable build_cost_table(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                                  int grid_step, const TableOptions& options) {
  return build_cost_table(evaluator, domain, grid_positions(evaluator.size(), grid_step), options,
                          grid_step);
}

RefineCandidates refine_candidates(int n, const std::vector<int>& breaks, int step) {
  RefineCandidates out;
  std::vector<int> cand{0, n};
  for (int b : breaks) {
    for (int t = std::max(1, b - step); t <= std::min(n - 1, b + step); ++t) cand.push_back(t);
  }
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  const int k = static_cast<int>(breaks.size());
  for (int t : cand) {
    int g = 0;
    if (t == n) {
      g = k + 1;
    } else if (t > 0) {
      // nearest break, ties to the earlier one
      int best = std::numeric_limits<int>::max();
      for (int b = 0; b < k; ++b) {
        const int dist = std::abs(t - breaks[b]);
        if (dist < best) {
          best = dist;
          g = b + 1;
        }
      }
    }
    out.groups.push_back(g);
  }
  out.positions = std::move(cand);
  return out;
}

// ---------------------------------------------------------------------------
// Dynamic programming
// ---------------------------------------------------------------------------

DpResult dp_segment(const SegmentCostTable& table, int k_max, double beta,
                    std::optional<int> k_fixed) {
  if (k_max < 1) throw ConfigError("K_max must be >= 1");
  if (k_fixed && *k_fixed < 1) throw ConfigError("fixed K must be >= 1");
  if (!(beta >= 0.0)) throw ConfigError("penalty must be >= 0");
  const int m = table.size() - 1;
  const int k_top = k_fixed ? *k_fixed : k_max;

  // rest[k-1][i]: best contrast covering (p_i, n] with exactly k segments.
  std::vector<std::vector<double>> rest(static_cast<std::size_t>(k_top),
                                        std::vector<double>(static_cast<std::size_t>(m + 1), kInf));
  for (int i = 0; i < m; ++i) {
    if (table.admissible(i, m)) rest[0][i] = table.cost(i, m);
  }
  for (int k = 2; k <= k_top; ++k) {
    const auto& prev = rest[k - 2];
    auto& cur = rest[k - 1];
    for (int i = 0; i < m; ++i) {
      double best = kInf;
      for (int j = i + 1; j < m; ++j) {
        if (!table.admissible(i, j) || prev[j] == kInf) continue;
        const double v = table.cost(i, j) + prev[j];
        if (v < best) best = v;
      }
      cur[i] = best;
    }
  }

  DpResult out;
  out.best_by_k.resize(static_cast<std::size_t>(k_top));
  for (int k = 1; k <= k_top; ++k) out.best_by_k[k - 1] = rest[k - 1][0];

  int k_hat = 0;
  double best_pen = kInf;
  const int k_lo = k_fixed ? *k_fixed : 1;
  for (int k = k_lo; k <= k_top; ++k) {
    const double c = rest[k - 1][0];
    if (c == kInf) continue;
    const double pen = c + beta * k;
    if (pen < best_pen) {
      best_pen = pen;
      k_hat = k;
    }
  }
  if (k_hat == 0) throw ConfigError("no feasible segmentation for the given K range and min_len");

  out.k_hat = k_hat;
  out.contrast = rest[k_hat - 1][0];
  out.penalized = out.contrast + beta * k_hat;
  out.cut_indices.push_back(0);
  int i = 0;
  for (int k = k_hat; k > 1; --k) {
    const double target = rest[k - 1][i];
    int chosen = -1;
    for (int j = i + 1; j < m; ++j) {
      if (!table.admissible(i, j) || rest[k - 2][j] == kInf) continue;
      if (table.cost(i, j) + rest[k - 2][j] == target) {
        chosen = j;
        break;
      }
    }
    if (chosen < 0) throw Error("dynamic programming backtrack failed");
    out.cut_indices.push_back(chosen);
    out.breaks.push_back(table.positions()[chosen]);
    i = chosen;
  }
  out.cut_indices.push_back(m);
  return out;
}

// ---------------------------------------------------------------------------
// Detector
// ---------------------------------------------------------------------------

Detector::Detector(const ContrastEvaluator& evaluator, ParamDomain domain, DetectOptions options)
    : evaluator_(&evaluator), domain_(std::move(domain)), options_(std::move(options)) {
  const ModelFamily& family = evaluator.family();
  domain_.validate(family);
  const int n = evaluator.size();
  min_len_ = options_.min_len > 0 ? options_.min_len : default_min_len(family);
  if (min_len_ < family.dimension() + 2) {
    throw ConfigError("min_len must be at least d + 2 = " + std::to_string(family.dimension() + 2));
  }
  if (options_.k_max < 1) throw ConfigError("K_max must be >= 1");
  if (options_.k_fixed && *options_.k_fixed < 1) throw ConfigError("fixed K must be >= 1");
  const int k_need = options_.k_fixed ? *options_.k_fixed : options_.k_max;
  if (static_cast<long long>(n) < static_cast<long long>(k_need) * min_len_) {
    throw ConfigError("series too short: n = " + std::to_string(n) + " < K * min_len = " +
                      std::to_string(k_need) + " * " + std::to_string(min_len_));
  }
  grid_ = options_.grid > 0 ? options_.grid : default_grid_step(n);
  if (grid_ > n) throw ConfigError("grid step exceeds n");
}

TableOptions Detector::table_options() const {
  TableOptions t;
  t.min_len = min_len_;
  t.fit = options_.fit;
  t.warm_start = options_.warm_start;
  t.workers = options_.workers;
  return t;
}

const SegmentCostTable& Detector::grid_table() {
  if (!grid_table_) {
    const bool single = options_.k_max == 1 || (options_.k_fixed && *options_.k_fixed == 1);
    if (single) {
      // Only the whole-sample cell can be used.
      grid_table_.emplace(build_cost_table(*evaluator_, domain_, {0, evaluator_->size()},
                                           table_options(), grid_));
    } else {
      grid_table_.emplace(build_cost_table(*evaluator_, domain_, grid_, table_options()));
    }
  }
  return *grid_table_;
}

SegmentationResult Detector::run(const PenaltySchedule& penalty) {
  const int n = evaluator_->size();
  const double beta = penalty.beta(n);
  const SegmentCostTable& grid = grid_table();
  DpResult dp = dp_segment(grid, options_.k_max, beta, options_.k_fixed);

  SegmentationResult res;
  const SegmentCostTable* table = &grid;
  std::optional<SegmentCostTable> refined;
  if (options_.refine && grid_ > 1 && dp.k_hat > 1) {
    const RefineCandidates cand = refine_candidates(n, dp.breaks, grid_);
    refined.emplace(
        build_cost_table(*evaluator_, domain_, cand.positions, table_options(), 1, cand.groups));
    dp = dp_segment(*refined, options_.k_max, beta, options_.k_fixed);
    table = &*refined;
    res.refined = true;
  }

  res.n = n;
  res.k_hat = dp.k_hat;
  res.t_hat = dp.breaks;
  for (int t : res.t_hat) res.tau_hat.push_back(static_cast<double>(t) / n);
  res.contrast = dp.contrast;
  res.penalized = dp.penalized;
  res.beta = beta;
  res.penalty = penalty.name();
  res.grid_step = grid_;
  res.min_len = min_len_;
  res.k_max = options_.k_max;
  res.k_fixed = options_.k_fixed;
  res.level = options_.level;
  res.nonconverged_cells = grid.nonconverged_cells() + (refined ? refined->nonconverged_cells() : 0);

  for (std::size_t s = 0; s + 1 < dp.cut_indices.size(); ++s) {
    const int a = dp.cut_indices[s];
    const int b = dp.cut_indices[s + 1];
    SegmentEstimate est;
    est.seg = {table->positions()[a], table->positions()[b]};
    est.theta = table->theta(a, b);
    est.cost = table->cost(a, b);
    est.converged = table->converged(a, b);
    if (options_.covariances) {
      try {
        est.sandwich = sandwich_cov(*evaluator_, est.seg, est.theta, &domain_);
        est.conf_int = confint(*est.sandwich, est.theta, options_.level);
      } catch (const DegenerateInformation& e) {
        est.covariance_error = e.what();
      } catch (const DomainError& e) {
        est.covariance_error = e.what();
      }
    }
    res.theta_hat.push_back(est.theta);
    res.segments.push_back(std::move(est));
  }
  return res;
}

SegmentationResult detect(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                          const PenaltySchedule& penalty, const DetectOptions& options) {
  Detector detector(evaluator, domain, options);
  return detector.run(penalty);
}

}  // namespace qmlcp

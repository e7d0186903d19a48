#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qmlcp/asymptotics.hpp"
#include "qmlcp/likelihood.hpp"
#include "qmlcp/optimizer.hpp"

namespace qmlcp {

// ---------------------------------------------------------------------------
// Penalty
// ---------------------------------------------------------------------------

enum class PenaltyKind { sqrt_n, bic, heavy, custom };

// beta_n, the price of one extra segment: sqrt_n -> sqrt(n), bic -> log n,
// heavy -> n / log n, custom -> a fixed value.
struct PenaltySchedule {
  PenaltyKind kind = PenaltyKind::sqrt_n;
  double value = 0.0;  // custom only

  static PenaltySchedule custom(double beta);
  // "sqrt_n", "bic", "heavy", "custom:<beta>" or a bare number.
  static PenaltySchedule parse(std::string_view text);

  double beta(int n) const;
  std::string name() const;
};

// ---------------------------------------------------------------------------
// Segment fits
// ---------------------------------------------------------------------------

struct FitOptions {
  int restarts = 5;
  BoxMinimizerOptions minimizer;
  std::uint64_t seed = 0;
  // Iterates are kept in {beta0 < 1 - contraction_margin}; a log barrier is
  // switched on within barrier_width of that level.
  double contraction_margin = 1e-6;
  double barrier_width = 0.02;
  double barrier_weight = 1.0;
  // Law used for the moment factor of the contraction bound; at r = 2 every
  // standardized law gives the same factor.
  InnovationLaw innovation = InnovationLaw::gaussian();
};

struct SegmentFit {
  Vector theta;
  double cost = std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
};

// Reusable per-thread fitting state for one evaluator and domain.
class SegmentFitter {
 public:
  SegmentFitter(const ContrastEvaluator& evaluator, ParamDomain domain, FitOptions options = {});
  ~SegmentFitter();
  SegmentFitter(SegmentFitter&&) noexcept;
  SegmentFitter& operator=(SegmentFitter&&) = delete;

  SegmentFit fit(SegmentRef seg, const std::optional<Vector>& warm_start = std::nullopt);

  // Deterministic interior point used when no warm start is given.
  Vector default_start(SegmentRef seg) const;

  const ParamDomain& domain() const { return domain_; }
  const FitOptions& options() const { return options_; }

 private:
  class Objective;

  const ContrastEvaluator* evaluator_;
  ParamDomain domain_;
  FitOptions options_;
  BoxQuasiNewton minimizer_;
  std::unique_ptr<Objective> objective_;
};

SegmentFit fit_segment(const ContrastEvaluator& evaluator, SegmentRef seg, const ParamDomain& domain,
                       const std::optional<Vector>& warm_start = std::nullopt,
                       const FitOptions& options = {});

// ---------------------------------------------------------------------------
// Cost table
// ---------------------------------------------------------------------------

// Minimized segment contrasts over pairs of candidate positions
// p_0 = 0 < p_1 < ... < p_m = n. A cell (i, j) is admissible when
// p_j - p_i >= min_len and, if groups are given, p_i and p_j lie in different
// groups. Inadmissible or failed cells hold +inf.
class SegmentCostTable {
 public:
  SegmentCostTable(std::vector<int> positions, int min_len, int dimension, int grid_step = 0,
                   std::vector<int> groups = {});

  int n() const { return positions_.back(); }
  int min_len() const { return min_len_; }
  int grid_step() const { return grid_step_; }
  int dimension() const { return dim_; }
  const std::vector<int>& positions() const { return positions_; }
  int size() const { return static_cast<int>(positions_.size()); }

  bool admissible(int i, int j) const {
    return i < j && positions_[j] - positions_[i] >= min_len_ &&
           (groups_.empty() || groups_[i] != groups_[j]);
  }
  double cost(int i, int j) const { return cost_[index(i, j)]; }
  bool converged(int i, int j) const { return converged_[index(i, j)] != 0; }
  Vector theta(int i, int j) const;

  void set(int i, int j, double cost, const Vector& theta, bool converged);

  long long admissible_cells() const;
  long long nonconverged_cells() const;

 private:
  std::size_t index(int i, int j) const {
    return row_offset_[static_cast<std::size_t>(i)] + static_cast<std::size_t>(j - i - 1);
  }

  std::vector<int> positions_;
  std::vector<int> groups_;
  int min_len_;
  int dim_;
  int grid_step_;
  std::vector<std::size_t> row_offset_;
  std::vector<double> cost_;
  std::vector<double> theta_;
  std::vector<unsigned char> converged_;
};

struct TableOptions {
  int min_len = 0;  // 0: max(10, 2d)
  FitOptions fit;
  bool warm_start = true;  // start (lo, hi) from the fit of the previous hi in the row
  int workers = 0;         // 0: default_worker_count()
};

int default_min_len(const ModelFamily& family);
// 1 for n <= 2000, else ceil(n / 2000).
int default_grid_step(int n);
// {0, step, 2 step, ..., n}; n is always the last position.
std::vector<int> grid_positions(int n, int step);

SegmentCostTable build_cost_table(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                                  const std::vector<int>& positions, const TableOptions& options,
                                  int grid_step = 0, const std::vector<int>& groups = {});

// Candidates for the refinement pass: 0, n and every t within +-step of a
// break. Each candidate is grouped with its nearest break (0 and n get groups
// of their own), so the refined DP places at most one break per window.
struct RefineCandidates {
  std::vector<int> positions;
  std::vector<int> groups;
};
RefineCandidates refine_candidates(int n, const std::vector<int>& breaks, int step);

SegmentCostTable build_cost_table(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                                  int grid_step, const TableOptions& options);

// ---------------------------------------------------------------------------
// Dynamic programming
// ---------------------------------------------------------------------------

struct DpResult {
  int k_hat = 0;
  std::vector<int> breaks;          // interior break positions t_1 < ... < t_{K-1}
  std::vector<int> cut_indices;     // table indices 0 = c_0 < ... < c_K = m
  double contrast = 0.0;            // J_hat at the optimum
  double penalized = 0.0;           // contrast + beta K
  std::vector<double> best_by_k;    // min contrast with exactly k segments, index k-1
};

// Exact minimiser of contrast + beta K over segmentations built from the
// table's candidate positions with K <= k_max (or K == k_fixed). Ties go to
// the smaller K, then to the lexicographically smallest breaks.
DpResult dp_segment(const SegmentCostTable& table, int k_max, double beta,
                    std::optional<int> k_fixed = std::nullopt);

// ---------------------------------------------------------------------------
// Detection
// ---------------------------------------------------------------------------

struct DetectOptions {
  int k_max = 5;
  int min_len = 0;  // 0: default_min_len
  int grid = 0;     // 0: default_grid_step
  bool refine = true;
  std::optional<int> k_fixed;
  FitOptions fit;
  bool warm_start = true;
  int workers = 0;
  bool covariances = true;
  double level = 0.95;
};

struct SegmentEstimate {
  SegmentRef seg;
  Vector theta;
  double cost = 0.0;
  bool converged = false;
  std::optional<SandwichEstimate> sandwich;
  std::vector<ConfidenceInterval> conf_int;
  std::string covariance_error;
};

struct SegmentationResult {
  int n = 0;
  int k_hat = 0;
  std::vector<int> t_hat;
  std::vector<double> tau_hat;
  std::vector<Vector> theta_hat;
  double contrast = 0.0;
  double penalized = 0.0;
  double beta = 0.0;
  std::string penalty;
  int grid_step = 1;
  bool refined = false;
  int min_len = 0;
  int k_max = 0;
  std::optional<int> k_fixed;
  long long nonconverged_cells = 0;
  double level = 0.95;
  std::vector<SegmentEstimate> segments;
};

// Holds the grid cost table so several penalties can be run on one series.
class Detector {
 public:
  Detector(const ContrastEvaluator& evaluator, ParamDomain domain, DetectOptions options = {});

  const SegmentCostTable& grid_table();
  SegmentationResult run(const PenaltySchedule& penalty);

  int min_len() const { return min_len_; }
  int grid_step() const { return grid_; }

 private:
  TableOptions table_options() const;

  const ContrastEvaluator* evaluator_;
  ParamDomain domain_;
  DetectOptions options_;
  int min_len_;
  int grid_;
  std::optional<SegmentCostTable> grid_table_;
};

SegmentationResult detect(const ContrastEvaluator& evaluator, const ParamDomain& domain,
                          const PenaltySchedule& penalty, const DetectOptions& options = {});

}  // namespace qmlcp

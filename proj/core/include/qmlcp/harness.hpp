#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "qmlcp/estimate.hpp"
#include "qmlcp/simulate.hpp"

namespace qmlcp {

inline constexpr const char* kReportSchema = "qmlcp.report/1";
inline constexpr const char* kScoreSchema = "qmlcp.score/1";

struct ExperimentConfig {
  BreakModel model{ModelFamily(ArFamily{1}), {}, {}};
  std::vector<int> n_list;
  std::vector<PenaltySchedule> penalties{PenaltySchedule{}};
  int replications = 1;
  std::uint64_t seed_base = 1;  // replication i uses seed_base + i
  DetectOptions detect;
  int burn_in = 500;
  bool zero_past = false;
  int workers = 0;  // replications in flight; 0: default_worker_count()

  void validate() const;
};

// Keys: family, theta, tau, n, penalty, r, innovation, K_max, min_len, grid,
// replications, seed, plus burn_in, zero_past, refine, k_fixed, level,
// restarts. Missing keys keep the values already in `base`.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             ExperimentConfig base = ExperimentConfig{});
nlohmann::json experiment_config_to_json(const ExperimentConfig& config);

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

struct RunScore {
  int n = 0;
  int k_hat = 0;
  int k_star = 0;
  bool k_correct = false;
  std::vector<int> t_hat;
  std::vector<int> t_star;
  // Elementwise max |t_hat - t*| when K_hat = K*, otherwise
  // max_j min_k |t_hat_k - t*_j|. n when exactly one of the two is empty.
  double distance = 0.0;
  bool distance_flagged = false;
  // Per true regime: theta of the estimated segment containing the regime's
  // midpoint, its error against theta*, and per-coordinate interval coverage
  // (1 covered, 0 missed, -1 no interval).
  std::vector<Vector> theta_matched;
  std::vector<Vector> theta_error;
  std::vector<std::vector<int>> covered;
};

double break_distance(const std::vector<int>& t_hat, const std::vector<int>& t_star, int n,
                      bool* flagged = nullptr);

RunScore score(const SegmentationResult& result, const std::vector<int>& t_star,
               const std::vector<Vector>& theta_star, int n);
RunScore score(const SegmentationResult& result, const BreakModel& truth, int n);

nlohmann::json score_to_json(const RunScore& s);
RunScore score_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

struct RepRow {
  int n = 0;
  std::string penalty;
  int rep = 0;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  RunScore score;
  double seconds = 0.0;  // wall clock of the whole replication (all penalties)
};

inline const std::vector<double> kReportQuantiles{0.1, 0.25, 0.5, 0.75, 0.9};

struct RegimeStats {
  Vector bias;
  Vector rmse;
  std::vector<double> coverage;   // NaN when no replication produced an interval
  std::vector<int> coverage_count;
};

struct CellReport {
  int n = 0;
  std::string penalty;
  int replications = 0;
  int failures = 0;
  int correct = 0;
  double freq_correct = 0.0;
  std::map<int, int> k_histogram;
  std::vector<double> distance_quantiles;          // all successful replications
  std::vector<double> distance_quantiles_correct;  // K_hat = K* only (empty if none)
  double median_tau_error_correct = 0.0;           // median |tau_hat - tau*| given K_hat = K*
  std::vector<RegimeStats> regimes;
};

struct ExperimentReport {
  std::vector<CellReport> cells;
};

struct ExperimentResult {
  std::vector<RepRow> rows;
  ExperimentReport report;
  double seconds = 0.0;
};

// Type-7 sample quantile (linear interpolation between order statistics).
double quantile(std::vector<double> values, double p);

// Pure function of the rows, in (n, penalty) order of the config.
ExperimentReport aggregate(const ExperimentConfig& config, const std::vector<RepRow>& rows);

// simulate -> detect -> score for every (n, replication); the cost table of a
// replication is shared by all penalties. Failures are recorded per row.
ExperimentResult run_experiment(const ExperimentConfig& config);

nlohmann::json report_to_json(const ExperimentConfig& config, const ExperimentReport& report);
nlohmann::json rows_to_json(const std::vector<RepRow>& rows);
std::vector<RepRow> rows_from_json(const nlohmann::json& j);
nlohmann::json timing_to_json(const ExperimentResult& result);

// report.json, rows.json, rows.csv and timing.json under `dir`.
void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& config,
                      const ExperimentResult& result);

}  // namespace qmlcp

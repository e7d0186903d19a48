#include "qmlcp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "qmlcp/io.hpp"
#include "qmlcp/parallel.hpp"

namespace qmlcp {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

template <class T>
std::vector<T> scalar_or_list(const json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

}  // namespace

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

void ExperimentConfig::validate() const {
  model.validate();
  if (n_list.empty()) throw ConfigError("experiment needs at least one n");
  if (penalties.empty()) throw ConfigError("experiment needs at least one penalty");
  if (replications < 1) throw ConfigError("replications must be >= 1");
  if (burn_in < 0) throw ConfigError("burn_in must be >= 0");
  for (int n : n_list) {
    if (n < 2) throw ConfigError("every n must be >= 2");
    model.break_points(n);
  }
}

ExperimentConfig experiment_config_from_json(const json& j, ExperimentConfig base) {
  ExperimentConfig c = std::move(base);
  try {
    if (j.contains("family") || j.contains("theta")) {
      json m = json::object();
      m["family"] = j.contains("family") ? j["family"] : json(c.model.family.name());
      if (j.contains("theta")) {
        m["theta"] = j["theta"];
      } else {
        json thetas = json::array();
        for (const Vector& t : c.model.thetas) thetas.push_back(vector_to_json(t));
        m["theta"] = thetas;
      }
      m["tau"] = j.contains("tau") ? j["tau"] : json(c.model.tau);
      const InnovationLaw law = c.model.innovation;
      const double r = c.model.moment_order;
      c.model = break_model_from_json(m);
      c.model.innovation = law;
      c.model.moment_order = r;
    } else if (j.contains("tau")) {
      c.model.tau = j["tau"].get<std::vector<double>>();
    }
    if (j.contains("innovation")) c.model.innovation = InnovationLaw::parse(j["innovation"].get<std::string>());
    if (j.contains("r")) c.model.moment_order = j["r"].get<double>();
    if (j.contains("n")) c.n_list = scalar_or_list<int>(j["n"]);
    if (j.contains("penalty")) {
      c.penalties.clear();
      for (const json& p : j["penalty"].is_array() ? j["penalty"] : json::array({j["penalty"]})) {
        c.penalties.push_back(p.is_number() ? PenaltySchedule::custom(p.get<double>())
                                            : PenaltySchedule::parse(p.get<std::string>()));
      }
    }
    if (j.contains("K_max")) c.detect.k_max = j["K_max"].get<int>();
    if (j.contains("min_len")) c.detect.min_len = j["min_len"].get<int>();
    if (j.contains("grid")) c.detect.grid = j["grid"].get<int>();
    if (j.contains("replications")) c.replications = j["replications"].get<int>();
    if (j.contains("seed")) c.seed_base = j["seed"].get<std::uint64_t>();
    if (j.contains("burn_in")) c.burn_in = j["burn_in"].get<int>();
    if (j.contains("zero_past")) c.zero_past = j["zero_past"].get<bool>();
    if (j.contains("refine")) c.detect.refine = j["refine"].get<bool>();
    if (j.contains("k_fixed")) {
      if (j["k_fixed"].is_null()) {
        c.detect.k_fixed.reset();
      } else {
        c.detect.k_fixed = j["k_fixed"].get<int>();
      }
    }
    if (j.contains("level")) c.detect.level = j["level"].get<double>();
    if (j.contains("restarts")) c.detect.fit.restarts = j["restarts"].get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid config value: ") + e.what());
  }
  return c;
}

json experiment_config_to_json(const ExperimentConfig& c) {
  json thetas = json::array();
  for (const Vector& t : c.model.thetas) thetas.push_back(vector_to_json(t));
  json pens = json::array();
  for (const PenaltySchedule& p : c.penalties) pens.push_back(p.name());
  json j;
  j["family"] = c.model.family.name();
  j["theta"] = thetas;
  j["tau"] = c.model.tau;
  j["innovation"] = c.model.innovation.name();
  j["r"] = c.model.moment_order;
  j["n"] = c.n_list;
  j["penalty"] = pens;
  j["K_max"] = c.detect.k_max;
  j["min_len"] = c.detect.min_len;
  j["grid"] = c.detect.grid;
  j["refine"] = c.detect.refine;
  j["k_fixed"] = c.detect.k_fixed ? json(*c.detect.k_fixed) : json(nullptr);
  j["level"] = c.detect.level;
  j["restarts"] = c.detect.fit.restarts;
  j["replications"] = c.replications;
  j["seed"] = c.seed_base;
  j["burn_in"] = c.burn_in;
  j["zero_past"] = c.zero_past;
  return j;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

double break_distance(const std::vector<int>& t_hat, const std::vector<int>& t_star, int n,
                      bool* flagged) {
  if (flagged) *flagged = false;
  if (t_hat.empty() && t_star.empty()) return 0.0;
  if (t_hat.empty() || t_star.empty()) {
    if (flagged) *flagged = true;
    return n;
  }
  int worst = 0;
  if (t_hat.size() == t_star.size()) {
    for (std::size_t k = 0; k < t_hat.size(); ++k) worst = std::max(worst, std::abs(t_hat[k] - t_star[k]));
    return worst;
  }
  for (int ts : t_star) {
    int nearest = std::numeric_limits<int>::max();
    for (int th : t_hat) nearest = std::min(nearest, std::abs(th - ts));
    worst = std::max(worst, nearest);
  }
  return worst;
}

RunScore score(const SegmentationResult& result, const std::vector<int>& t_star,
               const std::vector<Vector>& theta_star, int n) {
  if (theta_star.size() != t_star.size() + 1) {
    throw ConfigError("truth needs one more regime than break points");
  }
  RunScore s;
  s.n = n;
  s.k_hat = result.k_hat;
  s.k_star = static_cast<int>(theta_star.size());
  s.k_correct = s.k_hat == s.k_star;
  s.t_hat = result.t_hat;
  s.t_star = t_star;
  s.distance = break_distance(s.t_hat, s.t_star, n, &s.distance_flagged);

  for (std::size_t j = 0; j < theta_star.size(); ++j) {
    const int a = j == 0 ? 0 : t_star[j - 1];
    const int b = j + 1 < theta_star.size() ? t_star[j] : n;
    const int mid = a + (b - a + 1) / 2;  // a time point in (a, b]
    std::size_t seg = 0;
    while (seg + 1 < result.segments.size() && result.segments[seg].seg.hi < mid) ++seg;
    const SegmentEstimate& est = result.segments.at(seg);
    s.theta_matched.push_back(est.theta);
    s.theta_error.push_back(est.theta - theta_star[j]);
    std::vector<int> cov(static_cast<std::size_t>(theta_star[j].size()), -1);
    if (!est.conf_int.empty()) {
      for (std::size_t i = 0; i < cov.size(); ++i) {
        cov[i] = est.conf_int[i].contains(theta_star[j][static_cast<Eigen::Index>(i)]) ? 1 : 0;
      }
    }
    s.covered.push_back(std::move(cov));
  }
  return s;
}

RunScore score(const SegmentationResult& result, const BreakModel& truth, int n) {
  return score(result, truth.break_points(n), truth.thetas, n);
}

json score_to_json(const RunScore& s) {
  json matched = json::array();
  json errors = json::array();
  for (const Vector& v : s.theta_matched) matched.push_back(vector_to_json(v));
  for (const Vector& v : s.theta_error) errors.push_back(vector_to_json(v));
  json j;
  j["schema"] = kScoreSchema;
  j["n"] = s.n;
  j["K_hat"] = s.k_hat;
  j["K_star"] = s.k_star;
  j["K_correct"] = s.k_correct;
  j["t_hat"] = s.t_hat;
  j["t_star"] = s.t_star;
  j["distance"] = s.distance;
  j["distance_flagged"] = s.distance_flagged;
  j["theta_matched"] = matched;
  j["theta_error"] = errors;
  j["covered"] = s.covered;
  return j;
}

RunScore score_from_json(const json& j) {
  RunScore s;
  s.n = j.at("n").get<int>();
  s.k_hat = j.at("K_hat").get<int>();
  s.k_star = j.at("K_star").get<int>();
  s.k_correct = j.at("K_correct").get<bool>();
  s.t_hat = j.at("t_hat").get<std::vector<int>>();
  s.t_star = j.at("t_star").get<std::vector<int>>();
  s.distance = j.at("distance").get<double>();
  s.distance_flagged = j.at("distance_flagged").get<bool>();
  for (const json& v : j.at("theta_matched")) s.theta_matched.push_back(vector_from_json(v));
  for (const json& v : j.at("theta_error")) s.theta_error.push_back(vector_from_json(v));
  s.covered = j.at("covered").get<std::vector<std::vector<int>>>();
  return s;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return kNaN;
  if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("quantile level must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

ExperimentReport aggregate(const ExperimentConfig& config, const std::vector<RepRow>& rows) {
  ExperimentReport report;
  const int k_star = config.model.k_star();
  for (int n : config.n_list) {
    for (const PenaltySchedule& pen : config.penalties) {
      CellReport cell;
      cell.n = n;
      cell.penalty = pen.name();
      std::vector<const RepRow*> ok;
      for (const RepRow& r : rows) {
        if (r.n != n || r.penalty != cell.penalty) continue;
        ++cell.replications;
        if (r.ok) {
          ok.push_back(&r);
        } else {
          ++cell.failures;
        }
      }
      std::vector<double> dist;
      std::vector<double> dist_correct;
      std::vector<double> tau_err;
      for (const RepRow* r : ok) {
        ++cell.k_histogram[r->score.k_hat];
        dist.push_back(r->score.distance);
        if (r->score.k_correct) {
          ++cell.correct;
          dist_correct.push_back(r->score.distance);
          tau_err.push_back(r->score.distance / n);
        }
      }
      cell.freq_correct = ok.empty() ? 0.0 : static_cast<double>(cell.correct) / ok.size();
      for (double p : kReportQuantiles) {
        cell.distance_quantiles.push_back(quantile(dist, p));
        if (!dist_correct.empty()) cell.distance_quantiles_correct.push_back(quantile(dist_correct, p));
      }
      cell.median_tau_error_correct = quantile(tau_err, 0.5);

      for (int j = 0; j < k_star; ++j) {
        const Eigen::Index d = config.model.thetas[static_cast<std::size_t>(j)].size();
        RegimeStats st;
        st.bias = Vector::Zero(d);
        st.rmse = Vector::Zero(d);
        st.coverage.assign(static_cast<std::size_t>(d), 0.0);
        st.coverage_count.assign(static_cast<std::size_t>(d), 0);
        for (const RepRow* r : ok) {
          const Vector& e = r->score.theta_error[static_cast<std::size_t>(j)];
          st.bias += e;
          st.rmse += e.cwiseProduct(e);
          const auto& cv = r->score.covered[static_cast<std::size_t>(j)];
          for (std::size_t i = 0; i < cv.size(); ++i) {
            if (cv[i] < 0) continue;
            ++st.coverage_count[i];
            st.coverage[i] += cv[i];
          }
        }
        if (!ok.empty()) {
          st.bias /= static_cast<double>(ok.size());
          st.rmse = (st.rmse / static_cast<double>(ok.size())).cwiseSqrt();
        } else {
          st.bias.setConstant(kNaN);
          st.rmse.setConstant(kNaN);
        }
        for (std::size_t i = 0; i < st.coverage.size(); ++i) {
          st.coverage[i] = st.coverage_count[i] > 0 ? st.coverage[i] / st.coverage_count[i] : kNaN;
        }
        cell.regimes.push_back(std::move(st));
      }
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Driver
// ---------------------------------------------------------------------------

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const int n_count = static_cast<int>(config.n_list.size());
  const int reps = config.replications;
  const int pens = static_cast<int>(config.penalties.size());
  std::vector<RepRow> rows(static_cast<std::size_t>(n_count * reps * pens));
  ParamDomain domain = ParamDomain::default_for(config.model.family);
  domain.moment_order = config.model.moment_order;

  DetectOptions det = config.detect;
  det.workers = 1;
  const int workers = config.workers > 0 ? config.workers : default_worker_count();

  parallel_for(n_count * reps, workers, [&](int task, int) {
    const int ni = task / reps;
    const int rep = task % reps;
    const int n = config.n_list[static_cast<std::size_t>(ni)];
    const std::uint64_t seed = config.seed_base + static_cast<std::uint64_t>(rep);
    auto row_at = [&](int p) -> RepRow& {
      return rows[static_cast<std::size_t>((ni * pens + p) * reps + rep)];
    };
    for (int p = 0; p < pens; ++p) {
      RepRow& row = row_at(p);
      row.n = n;
      row.penalty = config.penalties[static_cast<std::size_t>(p)].name();
      row.rep = rep;
      row.seed = seed;
    }
    const auto start = std::chrono::steady_clock::now();
    try {
      const SeriesSample sample =
          simulate_piecewise(config.model, n, config.burn_in, seed, config.zero_past);
      const ContrastEvaluator evaluator(config.model.family, sample.x, domain.variance_floor);
      Detector detector(evaluator, domain, det);
      for (int p = 0; p < pens; ++p) {
        RepRow& row = row_at(p);
        try {
          const SegmentationResult res = detector.run(config.penalties[static_cast<std::size_t>(p)]);
          row.score = score(res, config.model, n);
          row.ok = true;
        } catch (const std::exception& e) {
          row.error = e.what();
        }
      }
    } catch (const std::exception& e) {
      for (int p = 0; p < pens; ++p) row_at(p).error = e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    for (int p = 0; p < pens; ++p) row_at(p).seconds = secs;
  });

  ExperimentResult out;
  out.rows = std::move(rows);
  out.report = aggregate(config, out.rows);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

json report_to_json(const ExperimentConfig& config, const ExperimentReport& report) {
  json cells = json::array();
  for (const CellReport& c : report.cells) {
    json hist = json::object();
    for (const auto& [k, count] : c.k_histogram) hist[std::to_string(k)] = count;
    json regimes = json::array();
    for (const RegimeStats& st : c.regimes) {
      json cov = json::array();
      for (double v : st.coverage) cov.push_back(number_or_null(v));
      json bias = json::array();
      json rmse = json::array();
      for (Eigen::Index i = 0; i < st.bias.size(); ++i) {
        bias.push_back(number_or_null(st.bias[i]));
        rmse.push_back(number_or_null(st.rmse[i]));
      }
      regimes.push_back({{"bias", bias}, {"rmse", rmse}, {"coverage", cov}, {"coverage_count", st.coverage_count}});
    }
    json dq = json::array();
    json dqc = json::array();
    for (double v : c.distance_quantiles) dq.push_back(number_or_null(v));
    for (double v : c.distance_quantiles_correct) dqc.push_back(number_or_null(v));
    cells.push_back({{"n", c.n},
                     {"penalty", c.penalty},
                     {"replications", c.replications},
                     {"failures", c.failures},
                     {"correct", c.correct},
                     {"freq_K_correct", c.freq_correct},
                     {"K_histogram", hist},
                     {"distance_quantiles", dq},
                     {"distance_quantiles_K_correct", dqc},
                     {"median_tau_error_K_correct", number_or_null(c.median_tau_error_correct)},
                     {"regimes", regimes}});
  }
  json j;
  j["schema"] = kReportSchema;
  j["config"] = experiment_config_to_json(config);
  j["quantile_levels"] = kReportQuantiles;
  j["cells"] = cells;
  return j;
}

json rows_to_json(const std::vector<RepRow>& rows) {
  json out = json::array();
  for (const RepRow& r : rows) {
    json j{{"n", r.n}, {"penalty", r.penalty}, {"rep", r.rep}, {"seed", r.seed}, {"ok", r.ok}};
    if (r.ok) {
      j["score"] = score_to_json(r.score);
    } else {
      j["error"] = r.error;
    }
    out.push_back(std::move(j));
  }
  return out;
}

std::vector<RepRow> rows_from_json(const json& j) {
  std::vector<RepRow> rows;
  for (const json& r : j) {
    RepRow row;
    row.n = r.at("n").get<int>();
    row.penalty = r.at("penalty").get<std::string>();
    row.rep = r.at("rep").get<int>();
    row.seed = r.at("seed").get<std::uint64_t>();
    row.ok = r.at("ok").get<bool>();
    if (row.ok) {
      row.score = score_from_json(r.at("score"));
    } else {
      row.error = r.value("error", std::string());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

json timing_to_json(const ExperimentResult& result) {
  std::vector<double> secs;
  for (const RepRow& r : result.rows) secs.push_back(r.seconds);
  return {{"total_seconds", result.seconds},
          {"replication_seconds_median", number_or_null(quantile(secs, 0.5))},
          {"replication_seconds_max", number_or_null(secs.empty() ? kNaN : *std::max_element(secs.begin(), secs.end()))}};
}

void write_experiment(const std::filesystem::path& dir, const ExperimentConfig& config,
                      const ExperimentResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
  write_json(dir / "report.json", report_to_json(config, result.report));
  write_json(dir / "rows.json", rows_to_json(result.rows));
  write_json(dir / "timing.json", timing_to_json(result));

  std::ofstream csv(dir / "rows.csv");
  if (!csv) throw IoError("cannot open '" + (dir / "rows.csv").string() + "' for writing");
  csv << "n,penalty,rep,seed,ok,K_hat,K_star,distance,distance_flagged\n";
  char buf[64];
  for (const RepRow& r : result.rows) {
    csv << r.n << ',' << r.penalty << ',' << r.rep << ',' << r.seed << ',' << (r.ok ? 1 : 0) << ',';
    if (r.ok) {
      std::snprintf(buf, sizeof buf, "%.17g", r.score.distance);
      csv << r.score.k_hat << ',' << r.score.k_star << ',' << buf << ','
          << (r.score.distance_flagged ? 1 : 0) << '\n';
    } else {
      csv << ",,,\n";
    }
  }
  if (!csv) throw IoError("failed writing rows.csv");
}

}  // namespace qmlcp

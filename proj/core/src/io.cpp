#include "qmlcp/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace qmlcp {

using nlohmann::json;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <class T>
T required(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type: " + e.what());
  }
}

}  // namespace

void write_series_csv(const std::filesystem::path& path, const std::vector<double>& x) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << "x\n";
  for (double v : x) out << format_double(v) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::vector<double> parse_series_csv(const std::string& text) {
  std::vector<double> x;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  bool seen_data = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string cell = trim(line);
    if (cell.empty()) continue;
    if (!seen_data && (cell == "x" || cell == "\"x\"")) {
      seen_data = true;
      continue;
    }
    seen_data = true;
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end == cell.c_str() || *end != '\0' || !std::isfinite(v)) {
      throw IoError("malformed CSV at line " + std::to_string(line_no) + ": '" + cell +
                    "' is not a finite number (expected one value per line)");
    }
    x.push_back(v);
  }
  if (x.empty()) throw IoError("malformed CSV: no data rows");
  return x;
}

std::vector<double> read_series_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_series_csv(buf.str());
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw IoError("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

json vector_to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector vector_from_json(const json& j) {
  const auto values = j.get<std::vector<double>>();
  return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json series_sidecar(const BreakModel& model, const SeriesSample& sample) {
  json thetas = json::array();
  for (const Vector& t : model.thetas) thetas.push_back(vector_to_json(t));
  json j;
  j["schema"] = kSeriesSchema;
  j["family"] = model.family.name();
  j["theta"] = thetas;
  j["tau"] = model.tau;
  j["innovation"] = model.innovation.name();
  j["r"] = model.moment_order;
  j["n"] = sample.n;
  j["seed"] = sample.seed;
  j["burn_in"] = sample.burn_in;
  j["zero_past"] = sample.zero_past;
  j["true_breaks"] = sample.true_breaks.value_or(std::vector<int>{});
  return j;
}

BreakModel break_model_from_json(const json& j) {
  BreakModel m{ModelFamily::parse(required<std::string>(j, "family")), {}, {}};
  if (j.contains("tau")) m.tau = required<std::vector<double>>(j, "tau");
  for (const auto& t : required<std::vector<std::vector<double>>>(j, "theta")) {
    m.thetas.push_back(Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())));
  }
  if (j.contains("innovation")) m.innovation = InnovationLaw::parse(required<std::string>(j, "innovation"));
  if (j.contains("r")) m.moment_order = required<double>(j, "r");
  return m;
}

json segmentation_to_json(const SegmentationResult& r) {
  json segs = json::array();
  for (const SegmentEstimate& s : r.segments) {
    json js;
    js["lo"] = s.seg.lo;
    js["hi"] = s.seg.hi;
    js["theta"] = vector_to_json(s.theta);
    js["cost"] = s.cost;
    js["converged"] = s.converged;
    if (s.sandwich) {
      json cov = json::array();
      for (Eigen::Index i = 0; i < s.sandwich->cov.rows(); ++i) {
        cov.push_back(vector_to_json(s.sandwich->cov.row(i).transpose()));
      }
      js["cov"] = cov;
      js["condition_F"] = s.sandwich->condition_F;
      js["on_boundary"] = s.sandwich->on_boundary;
      json ci = json::array();
      for (const ConfidenceInterval& c : s.conf_int) ci.push_back({c.lower, c.upper});
      js["conf_int"] = ci;
    } else {
      js["cov"] = nullptr;
      js["conf_int"] = nullptr;
      if (!s.covariance_error.empty()) js["covariance_error"] = s.covariance_error;
    }
    segs.push_back(js);
  }
  json thetas = json::array();
  for (const Vector& t : r.theta_hat) thetas.push_back(vector_to_json(t));

  json j;
  j["schema"] = kSegmentationSchema;
  j["n"] = r.n;
  j["K_hat"] = r.k_hat;
  j["t_hat"] = r.t_hat;
  j["tau_hat"] = r.tau_hat;
  j["theta_hat"] = thetas;
  j["contrast"] = r.contrast;
  j["penalized"] = r.penalized;
  j["penalty"] = r.penalty;
  j["beta_n"] = r.beta;
  j["grid"] = r.grid_step;
  j["refined"] = r.refined;
  j["min_len"] = r.min_len;
  j["K_max"] = r.k_max;
  j["k_fixed"] = r.k_fixed ? json(*r.k_fixed) : json(nullptr);
  j["nonconverged_cells"] = r.nonconverged_cells;
  j["level"] = r.level;
  j["segments"] = segs;
  return j;
}

SegmentationResult segmentation_from_json(const json& j) {
  if (j.value("schema", std::string()) != kSegmentationSchema) {
    throw ConfigError("not a segmentation result (schema field missing or different)");
  }
  SegmentationResult r;
  r.n = required<int>(j, "n");
  r.k_hat = required<int>(j, "K_hat");
  r.t_hat = required<std::vector<int>>(j, "t_hat");
  r.tau_hat = required<std::vector<double>>(j, "tau_hat");
  for (const auto& t : required<std::vector<std::vector<double>>>(j, "theta_hat")) {
    r.theta_hat.push_back(Eigen::Map<const Vector>(t.data(), static_cast<Eigen::Index>(t.size())));
  }
  r.contrast = required<double>(j, "contrast");
  r.penalized = required<double>(j, "penalized");
  r.penalty = required<std::string>(j, "penalty");
  r.beta = required<double>(j, "beta_n");
  r.grid_step = required<int>(j, "grid");
  r.refined = required<bool>(j, "refined");
  r.min_len = required<int>(j, "min_len");
  r.k_max = required<int>(j, "K_max");
  if (j.contains("k_fixed") && !j["k_fixed"].is_null()) r.k_fixed = j["k_fixed"].get<int>();
  r.nonconverged_cells = j.value("nonconverged_cells", 0LL);
  r.level = j.value("level", 0.95);
  for (const json& js : required<json>(j, "segments")) {
    SegmentEstimate s;
    s.seg = {required<int>(js, "lo"), required<int>(js, "hi")};
    s.theta = vector_from_json(js.at("theta"));
    s.cost = required<double>(js, "cost");
    s.converged = required<bool>(js, "converged");
    if (js.contains("cov") && !js["cov"].is_null()) {
      SandwichEstimate est;
      const auto rows = js["cov"].get<std::vector<std::vector<double>>>();
      est.cov.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t a = 0; a < rows.size(); ++a) {
        for (std::size_t b = 0; b < rows[a].size(); ++b) est.cov(a, b) = rows[a][b];
      }
      est.n_j = s.seg.length();
      est.condition_F = js.value("condition_F", 0.0);
      est.on_boundary = js.value("on_boundary", false);
      s.sandwich = est;
      for (const auto& c : js.at("conf_int")) s.conf_int.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
    }
    s.covariance_error = js.value("covariance_error", std::string());
    r.segments.push_back(std::move(s));
  }
  return r;
}

}  // namespace qmlcp

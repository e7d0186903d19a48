#include "cli.hpp"

#include <filesystem>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "qmlcp/harness.hpp"
#include "qmlcp/io.hpp"

namespace qmlcp {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

// "0.4,0.1,0.3" per regime; several regimes either as repeated flags or
// separated by ';'.
std::vector<Vector> parse_regimes(const std::vector<std::string>& args) {
  std::vector<Vector> out;
  for (const std::string& arg : args) {
    for (const std::string& regime : split(arg, ';')) {
      std::vector<double> values;
      for (const std::string& cell : split(regime, ',')) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(cell, &used));
          if (cell.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(cell);
        } catch (const std::exception&) {
          throw ConfigError("cannot parse theta entry '" + cell + "' in '" + regime + "'");
        }
      }
      if (values.empty()) throw ConfigError("empty theta regime");
      out.push_back(Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
    }
  }
  return out;
}

struct ModelFlags {
  std::string family;
  std::vector<std::string> theta;
  std::vector<double> tau;
  std::string innovation = "gaussian";
  double r = 2.0;
  std::string config;

  void add_to(CLI::App* app, bool with_truth) {
    app->add_option("--family", family, "AR(p), RiemannianAR(L), ARCH(q), GARCH(p,q) or TARCH(q)");
    if (with_truth) {
      app->add_option("--theta", theta, "Regime parameters, comma separated; repeat or use ';' per regime");
      app->add_option("--tau", tau, "Break fractions in (0, 1)")->delimiter(',');
      app->add_option("--innovation", innovation, "gaussian or student:<dof>");
    }
    app->add_option("--r", r, "Moment order of the stationarity test");
    app->add_option("--config", config, "JSON run configuration; its values override flags");
  }
};

struct DetectFlags {
  std::vector<std::string> penalty{"sqrt_n"};
  int k_max = 5;
  int min_len = 0;
  int grid = 0;
  bool no_refine = false;
  std::optional<int> k_fixed;
  double level = 0.95;
  int restarts = 5;

  void add_to(CLI::App* app) {
    app->add_option("--penalty", penalty, "sqrt_n, bic, heavy or custom:<beta>")->delimiter(',');
    app->add_option("--k-max", k_max, "Largest number of segments");
    app->add_option("--min-len", min_len, "Minimal segment length (0: max(10, 2d))");
    app->add_option("--grid", grid, "Candidate grid step (0: 1 for n <= 2000, else ceil(n/2000))");
    app->add_flag("--no-refine", no_refine, "Skip the +-grid refinement pass");
    app->add_option("--k-fixed", k_fixed, "Known number of segments");
    app->add_option("--level", level, "Confidence level of the parameter intervals");
    app->add_option("--restarts", restarts, "Random restarts per segment fit");
  }

  DetectOptions options() const {
    DetectOptions o;
    o.k_max = k_max;
    o.min_len = min_len;
    o.grid = grid;
    o.refine = !no_refine;
    o.k_fixed = k_fixed;
    o.level = level;
    o.fit.restarts = restarts;
    return o;
  }
};

// Flags first, then the config file on top.
ExperimentConfig assemble(const ModelFlags& m, const DetectFlags* d, bool need_truth,
                          ExperimentConfig c = {}) {
  std::optional<json> file;
  if (!m.config.empty()) file = read_json(m.config);
  const bool family_known = !m.family.empty() || (file && file->contains("family"));
  if (!family_known) throw ConfigError("--family is required (or a 'family' key in --config)");

  if (!m.family.empty()) c.model.family = ModelFamily::parse(m.family);
  c.model.thetas = parse_regimes(m.theta);
  c.model.tau = m.tau;
  c.model.innovation = InnovationLaw::parse(m.innovation);
  c.model.moment_order = m.r;
  if (d) {
    c.detect = d->options();
    c.penalties.clear();
    for (const std::string& p : d->penalty) c.penalties.push_back(PenaltySchedule::parse(p));
  }
  if (file) c = experiment_config_from_json(*file, std::move(c));
  if (need_truth && c.model.thetas.empty()) throw ConfigError("--theta is required");
  return c;
}

fs::path ensure_dir(const std::string& dir) {
  const fs::path p(dir.empty() ? "." : dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create directory '" + p.string() + "': " + ec.message());
  return p;
}

ParamDomain domain_for(const ExperimentConfig& c) {
  ParamDomain domain = ParamDomain::default_for(c.model.family);
  domain.moment_order = c.model.moment_order;
  return domain;
}

void print_segmentation(std::ostream& out, const SegmentationResult& r) {
  out << "K_hat = " << r.k_hat << "\nt_hat =";
  for (int t : r.t_hat) out << ' ' << t;
  out << "\npenalized contrast = " << r.penalized << " (beta_n = " << r.beta << ")\n";
  for (std::size_t s = 0; s < r.segments.size(); ++s) {
    const SegmentEstimate& e = r.segments[s];
    out << "segment " << (s + 1) << " (" << e.seg.lo << ", " << e.seg.hi << "]: theta =";
    for (Eigen::Index i = 0; i < e.theta.size(); ++i) out << ' ' << e.theta[i];
    if (!e.converged) out << " [not converged]";
    out << '\n';
  }
}

}  // namespace

int cli_main(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multiple break detection by penalized quasi-likelihood"};
  app.require_subcommand(1);

  // simulate
  ModelFlags sim_model;
  int sim_n = 1000;
  std::uint64_t sim_seed = 1;
  int sim_burn = 500;
  bool sim_zero_past = false;
  std::string sim_out = ".";
  auto* sim = app.add_subcommand("simulate", "Simulate a piecewise path; writes series.csv and series.json");
  sim_model.add_to(sim, true);
  sim->add_option("--n", sim_n, "Series length");
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--burn-in", sim_burn, "Burn-in steps before the kept sample");
  sim->add_flag("--zero-past", sim_zero_past, "Start from X_t = 0 for t <= 0 without burn-in");
  sim->add_option("--out", sim_out, "Output directory");

  // detect
  ModelFlags det_model;
  DetectFlags det_flags;
  std::string det_input;
  std::string det_out;
  auto* det = app.add_subcommand("detect", "Detect breaks in a single-column CSV series");
  det_model.add_to(det, false);
  det_flags.add_to(det);
  det->add_option("--input", det_input, "CSV file with one value per line")->required();
  det->add_option("--out", det_out, "Output directory for segmentation.json");

  // score
  std::string score_result;
  std::string score_truth;
  std::string score_out;
  auto* sc = app.add_subcommand("score", "Score a segmentation against a simulation sidecar");
  sc->add_option("--result", score_result, "segmentation.json from detect")->required();
  sc->add_option("--truth", score_truth, "series.json sidecar from simulate")->required();
  sc->add_option("--out", score_out, "Output directory for score.json");

  // mc
  ModelFlags mc_model;
  DetectFlags mc_flags;
  std::vector<int> mc_n{1000};
  int mc_reps = 10;
  std::uint64_t mc_seed = 1;
  int mc_burn = 500;
  bool mc_zero_past = false;
  std::string mc_out = ".";
  auto* mc = app.add_subcommand("mc", "Monte Carlo experiment: simulate, detect and score");
  mc_model.add_to(mc, true);
  mc_flags.add_to(mc);
  mc->add_option("--n", mc_n, "Series lengths")->delimiter(',');
  mc->add_option("--replications", mc_reps, "Replications per n");
  mc->add_option("--seed", mc_seed, "Seed of replication 0");
  mc->add_option("--burn-in", mc_burn, "Burn-in steps");
  mc->add_flag("--zero-past", mc_zero_past, "Start from X_t = 0 for t <= 0 without burn-in");
  mc->add_option("--out", mc_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*sim) {
      ExperimentConfig base;
      base.n_list = {sim_n};
      base.seed_base = sim_seed;
      base.burn_in = sim_burn;
      base.zero_past = sim_zero_past;
      const ExperimentConfig c = assemble(sim_model, nullptr, true, std::move(base));
      const int n = c.n_list.at(0);
      const SeriesSample sample = simulate_piecewise(c.model, n, c.burn_in, c.seed_base, c.zero_past);
      const fs::path dir = ensure_dir(sim_out);
      write_series_csv(dir / "series.csv", sample.x);
      write_json(dir / "series.json", series_sidecar(c.model, sample));
      out << "wrote " << (dir / "series.csv").string() << " (n = " << n << ", K* = " << c.model.k_star()
          << ")\n";
    } else if (*det) {
      const ExperimentConfig c = assemble(det_model, &det_flags, false);
      if (c.penalties.size() != 1) throw ConfigError("detect takes exactly one penalty");
      std::vector<double> series = read_series_csv(det_input);
      const ParamDomain domain = domain_for(c);
      const ContrastEvaluator evaluator(c.model.family, std::move(series), domain.variance_floor);
      const SegmentationResult res = detect(evaluator, domain, c.penalties[0], c.detect);
      print_segmentation(out, res);
      if (!det_out.empty()) {
        const fs::path dir = ensure_dir(det_out);
        write_json(dir / "segmentation.json", segmentation_to_json(res));
      }
    } else if (*sc) {
      const SegmentationResult res = segmentation_from_json(read_json(score_result));
      const json side = read_json(score_truth);
      const BreakModel truth = break_model_from_json(side);
      const int n = side.at("n").get<int>();
      const auto t_star = side.at("true_breaks").get<std::vector<int>>();
      const json s = score_to_json(score(res, t_star, truth.thetas, n));
      out << s.dump(2) << '\n';
      if (!score_out.empty()) write_json(ensure_dir(score_out) / "score.json", s);
    } else if (*mc) {
      ExperimentConfig base;
      base.n_list = mc_n;
      base.replications = mc_reps;
      base.seed_base = mc_seed;
      base.burn_in = mc_burn;
      base.zero_past = mc_zero_past;
      const ExperimentConfig c = assemble(mc_model, &mc_flags, true, std::move(base));
      const ExperimentResult result = run_experiment(c);
      const fs::path dir = ensure_dir(mc_out);
      write_experiment(dir, c, result);
      for (const CellReport& cell : result.report.cells) {
        out << "n = " << cell.n << ", penalty = " << cell.penalty << ": freq(K_hat = K*) = " << cell.freq_correct
            << ", failures = " << cell.failures << '\n';
      }
      out << "wrote " << (dir / "report.json").string() << '\n';
    }
  } catch (const DegenerateInformation& e) {
    err << "qmlcp: numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const IoError& e) {
    err << "qmlcp: input/output error: " << e.what() << '\n';
    return kExitIo;
  } catch (const DomainError& e) {
    err << "qmlcp: parameter out of domain: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InvalidParameter& e) {
    err << "qmlcp: invalid parameter: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "qmlcp: configuration error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const Error& e) {
    err << "qmlcp: numerical error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "qmlcp: error: " << e.what() << '\n';
    return kExitOther;
  }
  return kExitOk;
}

int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("qmlcp");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (std::string& s : storage) argv.push_back(s.data());
  return cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qmlcp

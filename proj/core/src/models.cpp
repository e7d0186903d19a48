#include "qmlcp/models.hpp"

#include "overloaded.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>

namespace qmlcp {

namespace {

using detail::Overloaded;

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

double lag_value(std::span<const double> x, int s, int k) {
  const int idx = s - k - 1;
  return idx >= 0 ? x[static_cast<std::size_t>(idx)] : 0.0;
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

// ---------------------------------------------------------------------------
// InnovationLaw
// ---------------------------------------------------------------------------

InnovationLaw InnovationLaw::student_t(double dof) {
  if (!(dof > 2.0)) {
    throw ConfigError("Student-t innovations need dof > 2 (unit variance), got " +
                      std::to_string(dof));
  }
  return {InnovationKind::student_t, dof};
}

InnovationLaw InnovationLaw::parse(std::string_view text) {
  const std::string u = upper(text);
  if (u == "GAUSSIAN" || u == "NORMAL") return gaussian();
  static const std::regex re(R"(^\s*(STUDENT|STUDENT_T|T)\s*[:(]\s*([0-9.eE+-]+)\s*\)?\s*$)");
  std::smatch m;
  if (std::regex_match(u, m, re)) {
    double dof = 0.0;
    try {
      dof = std::stod(m[2].str());
    } catch (const std::exception&) {
      throw ConfigError("malformed innovation law '" + std::string(text) + "'");
    }
    return student_t(dof);
  }
  throw ConfigError("unknown innovation law '" + std::string(text) +
                    "' (expected gaussian or student:<dof>)");
}

std::string InnovationLaw::name() const {
  if (kind == InnovationKind::gaussian) return "gaussian";
  std::ostringstream os;
  os << "student:" << dof;
  return os.str();
}

double abs_moment_root(const InnovationLaw& law, double r) {
  if (!(r > 0.0)) throw ConfigError("moment order must be positive");
  const double half = 0.5 * r;
  double log_moment = 0.0;
  if (law.kind == InnovationKind::gaussian) {
    log_moment = half * std::log(2.0) + std::lgamma(0.5 * (r + 1.0)) -
                 0.5 * std::log(std::numbers::pi);
  } else {
    const double nu = law.dof;
    if (r >= nu) return std::numeric_limits<double>::infinity();
    log_moment = half * std::log(nu - 2.0) + std::lgamma(0.5 * (r + 1.0)) +
                 std::lgamma(0.5 * (nu - r)) - 0.5 * std::log(std::numbers::pi) -
                 std::lgamma(0.5 * nu);
  }
  return std::exp(log_moment / r);
}

// ---------------------------------------------------------------------------
// ModelFamily
// ---------------------------------------------------------------------------

ModelFamily::ModelFamily(Spec spec) : spec_(spec) {
  std::visit(Overloaded{
                 [](const ArFamily& f) {
                   if (f.order < 1) throw ConfigError("AR order must be >= 1");
                 },
                 [](const RiemannianArFamily& f) {
                   if (f.truncation < 1) throw ConfigError("RiemannianAR truncation must be >= 1");
                 },
                 [](const ArchFamily& f) {
                   if (f.order < 1) throw ConfigError("ARCH order must be >= 1");
                 },
                 [](const GarchFamily& f) {
                   if (f.p < 1 || f.q < 1) throw ConfigError("GARCH orders must be >= 1");
                 },
                 [](const TarchFamily& f) {
                   if (f.order < 1) throw ConfigError("TARCH order must be >= 1");
                 },
             },
             spec_);
}

ModelFamily ModelFamily::parse(std::string_view text) {
  static const std::regex re(R"(^\s*([A-Z]+)\s*\(\s*([0-9]+)\s*(?:,\s*([0-9]+)\s*)?\)\s*$)");
  const std::string u = upper(text);
  std::smatch m;
  if (!std::regex_match(u, m, re)) {
    throw ConfigError("unknown model family '" + std::string(text) + "'");
  }
  const std::string kind = m[1].str();
  const bool two = m[3].matched;
  int a = 0;
  int b = 0;
  try {
    a = std::stoi(m[2].str());
    if (two) b = std::stoi(m[3].str());
  } catch (const std::exception&) {
    throw ConfigError("unknown model family '" + std::string(text) + "'");
  }
  if (kind == "GARCH" && two) return ModelFamily(GarchFamily{a, b});
  if (!two) {
    if (kind == "AR") return ModelFamily(ArFamily{a});
    if (kind == "RIEMANNIANAR") return ModelFamily(RiemannianArFamily{a});
    if (kind == "ARCH") return ModelFamily(ArchFamily{a});
    if (kind == "TARCH") return ModelFamily(TarchFamily{a});
  }
  throw ConfigError("unknown model family '" + std::string(text) + "'");
}

std::string ModelFamily::name() const {
  return std::visit(
      Overloaded{
          [](const ArFamily& f) { return "AR(" + std::to_string(f.order) + ")"; },
          [](const RiemannianArFamily& f) {
            return "RiemannianAR(" + std::to_string(f.truncation) + ")";
          },
          [](const ArchFamily& f) { return "ARCH(" + std::to_string(f.order) + ")"; },
          [](const GarchFamily& f) {
            return "GARCH(" + std::to_string(f.p) + "," + std::to_string(f.q) + ")";
          },
          [](const TarchFamily& f) { return "TARCH(" + std::to_string(f.order) + ")"; },
      },
      spec_);
}

int ModelFamily::dimension() const {
  return std::visit(Overloaded{
                        [](const ArFamily& f) { return f.order; },
                        [](const RiemannianArFamily&) { return 2; },
                        [](const ArchFamily& f) { return f.order + 1; },
                        [](const GarchFamily& f) { return 1 + f.q + f.p; },
                        [](const TarchFamily& f) { return 1 + 2 * f.order; },
                    },
                    spec_);
}

int ModelFamily::max_lag() const {
  return std::visit(Overloaded{
                        [](const ArFamily& f) { return f.order; },
                        [](const RiemannianArFamily& f) { return f.truncation; },
                        [](const ArchFamily& f) { return f.order; },
                        [](const GarchFamily& f) { return std::max(f.p, f.q); },
                        [](const TarchFamily& f) { return f.order; },
                    },
                    spec_);
}

bool ModelFamily::is_volatility() const {
  return !std::holds_alternative<ArFamily>(spec_) &&
         !std::holds_alternative<RiemannianArFamily>(spec_);
}

std::vector<std::string> ModelFamily::parameter_names() const {
  std::vector<std::string> names;
  std::visit(Overloaded{
                 [&](const ArFamily& f) {
                   for (int k = 1; k <= f.order; ++k) names.push_back("phi" + std::to_string(k));
                 },
                 [&](const RiemannianArFamily&) { names = {"c", "gamma"}; },
                 [&](const ArchFamily& f) {
                   for (int k = 0; k <= f.order; ++k) names.push_back("psi" + std::to_string(k));
                 },
                 [&](const GarchFamily& f) {
                   for (int k = 0; k <= f.q; ++k) names.push_back("a" + std::to_string(k));
                   for (int k = 1; k <= f.p; ++k) names.push_back("b" + std::to_string(k));
                 },
                 [&](const TarchFamily& f) {
                   names.push_back("b0");
                   for (int k = 1; k <= f.order; ++k) names.push_back("bplus" + std::to_string(k));
                   for (int k = 1; k <= f.order; ++k) names.push_back("bminus" + std::to_string(k));
                 },
             },
             spec_);
  return names;
}

void ModelFamily::check_parameters(const Vector& theta) const {
  if (theta.size() != dimension()) {
    throw InvalidParameter(name() + " expects " + std::to_string(dimension()) +
                           " parameters, got " + std::to_string(theta.size()));
  }
  if (!theta.allFinite()) throw InvalidParameter("non-finite parameter for " + name());
}

// ---------------------------------------------------------------------------
// ParamDomain
// ---------------------------------------------------------------------------

ParamDomain ParamDomain::default_for(const ModelFamily& family) {
  const int d = family.dimension();
  ParamDomain dom;
  dom.lower = Vector::Zero(d);
  dom.upper = Vector::Zero(d);
  std::visit(Overloaded{
                 [&](const ArFamily&) {
                   dom.lower.setConstant(-0.99);
                   dom.upper.setConstant(0.99);
                 },
                 [&](const RiemannianArFamily&) {
                   dom.lower << -0.99, 1.05;
                   dom.upper << 0.99, 8.0;
                 },
                 [&](const ArchFamily&) {
                   dom.lower.setConstant(0.0);
                   dom.upper.setConstant(0.999);
                   dom.lower[0] = 1e-6;
                   dom.upper[0] = 10.0;
                 },
                 [&](const GarchFamily&) {
                   dom.lower.setConstant(0.0);
                   dom.upper.setConstant(0.999);
                   dom.lower[0] = 1e-6;
                   dom.upper[0] = 10.0;
                 },
                 [&](const TarchFamily&) {
                   dom.lower.setConstant(0.0);
                   dom.upper.setConstant(0.999);
                   // sigma >= b_0 so h >= b_0^2 stays above the 1e-8 floor.
                   dom.lower[0] = 1e-4;
                   dom.upper[0] = 10.0;
                 },
             },
             family.spec());
  return dom;
}

void ParamDomain::validate(const ModelFamily& family) const {
  const int d = family.dimension();
  if (lower.size() != d || upper.size() != d) {
    throw ConfigError("domain box dimension does not match " + family.name());
  }
  for (int i = 0; i < d; ++i) {
    if (!(lower[i] < upper[i])) throw ConfigError("domain box needs lower < upper coordinatewise");
  }
  if (!(variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
  if (!(moment_order >= 1.0)) throw ConfigError("moment order r must be >= 1");
}

bool ParamDomain::contains(const Vector& theta) const {
  if (theta.size() != lower.size()) return false;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta[i] >= lower[i] && theta[i] <= upper[i])) return false;
  }
  return true;
}

bool ParamDomain::on_boundary(const Vector& theta, double tol) const {
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double scale = tol * std::max(1.0, std::abs(theta[i]));
    if (theta[i] - lower[i] <= scale || upper[i] - theta[i] <= scale) return true;
  }
  return false;
}

// ---------------------------------------------------------------------------
// Contraction
// ---------------------------------------------------------------------------

ContractionReport contraction(const ModelFamily& family, const Vector& theta, double r,
                              const InnovationLaw& law) {
  family.check_parameters(theta);
  ContractionReport rep;
  std::visit(Overloaded{
                 [&](const ArFamily& f) {
                   for (int k = 0; k < f.order; ++k) rep.coefficient_tail.push_back(std::abs(theta[k]));
                 },
                 [&](const RiemannianArFamily& f) {
                   for (int k = 1; k <= f.truncation; ++k) {
                     rep.coefficient_tail.push_back(std::abs(theta[0]) * std::pow(k, -theta[1]));
                   }
                 },
                 [&](const ArchFamily& f) {
                   rep.is_arch_type = true;
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.order; ++k) rep.coefficient_tail.push_back(m * m * theta[k]);
                 },
                 [&](const GarchFamily& f) {
                   rep.is_arch_type = true;
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.q; ++k) rep.coefficient_tail.push_back(m * m * theta[k]);
                   for (int k = 1; k <= f.p; ++k) rep.coefficient_tail.push_back(theta[f.q + k]);
                 },
                 [&](const TarchFamily& f) {
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.order; ++k) {
                     rep.coefficient_tail.push_back(
                         m * std::max(std::abs(theta[k]), std::abs(theta[f.order + k])));
                   }
                 },
             },
             family.spec());
  for (double c : rep.coefficient_tail) rep.beta0 += c;
  rep.in_domain = rep.beta0 < 1.0;
  return rep;
}

Vector contraction_gradient(const ModelFamily& family, const Vector& theta, double r,
                            const InnovationLaw& law) {
  family.check_parameters(theta);
  Vector g = Vector::Zero(theta.size());
  std::visit(Overloaded{
                 [&](const ArFamily& f) {
                   for (int k = 0; k < f.order; ++k) g[k] = sign_of(theta[k]);
                 },
                 [&](const RiemannianArFamily& f) {
                   double s = 0.0;
                   double sl = 0.0;
                   for (int k = 1; k <= f.truncation; ++k) {
                     const double w = std::pow(k, -theta[1]);
                     s += w;
                     sl += w * std::log(static_cast<double>(k));
                   }
                   g[0] = sign_of(theta[0]) * s;
                   g[1] = -std::abs(theta[0]) * sl;
                 },
                 [&](const ArchFamily& f) {
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.order; ++k) g[k] = m * m;
                 },
                 [&](const GarchFamily& f) {
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.q; ++k) g[k] = m * m;
                   for (int k = 1; k <= f.p; ++k) g[f.q + k] = 1.0;
                 },
                 [&](const TarchFamily& f) {
                   const double m = abs_moment_root(law, r);
                   for (int k = 1; k <= f.order; ++k) {
                     const double bp = theta[k];
                     const double bm = theta[f.order + k];
                     if (std::abs(bp) >= std::abs(bm)) {
                       g[k] = m * sign_of(bp);
                     } else {
                       g[f.order + k] = m * sign_of(bm);
                     }
                   }
                 },
             },
             family.spec());
  return g;
}

DecayClass decay_class(const ModelFamily& family, const Vector& theta) {
  if (std::holds_alternative<RiemannianArFamily>(family.spec())) {
    family.check_parameters(theta);
    return {false, theta[1]};
  }
  return {};
}

// ---------------------------------------------------------------------------
// Point evaluations, routed through MomentSweep on the forward-ordered past.
// ---------------------------------------------------------------------------

namespace {

const MeanVarDerivatives& evaluate_at_end(MomentSweep& sweep, const Vector& theta,
                                          std::span<const double> past, double floor,
                                          std::vector<double>& forward) {
  forward.assign(past.rbegin(), past.rend());
  sweep.reset(theta, floor);
  const int s = static_cast<int>(forward.size()) + 1;
  sweep.seek(forward, s);
  return sweep.next(forward);
}

}  // namespace

double conditional_mean(const ModelFamily& family, const Vector& theta,
                        std::span<const double> past) {
  family.check_parameters(theta);
  if (family.is_volatility()) return 0.0;
  MomentSweep sweep(family, 0);
  std::vector<double> forward;
  return evaluate_at_end(sweep, theta, past, kDefaultVarianceFloor, forward).f;
}

double conditional_variance(const ModelFamily& family, const Vector& theta,
                            std::span<const double> past, double variance_floor) {
  MomentSweep sweep(family, 0);
  std::vector<double> forward;
  return evaluate_at_end(sweep, theta, past, variance_floor, forward).h;
}

MeanVarDerivatives mean_var_derivatives(const ModelFamily& family, const Vector& theta,
                                        std::span<const double> past, const ParamDomain* domain) {
  MomentSweep sweep(family, 2);
  std::vector<double> forward;
  const double floor = domain ? domain->variance_floor : kDefaultVarianceFloor;
  MeanVarDerivatives out = evaluate_at_end(sweep, theta, past, floor, forward);
  out.on_boundary = domain != nullptr && domain->on_boundary(theta);
  return out;
}

// ---------------------------------------------------------------------------
// MomentSweep
// ---------------------------------------------------------------------------

MomentSweep::MomentSweep(const ModelFamily& family, int derivative_order)
    : family_(family), order_(derivative_order), dim_(family.dimension()) {
  if (order_ < 0 || order_ > 2) throw ConfigError("derivative order must be 0, 1 or 2");
  if (order_ >= 1) {
    out_.df = Vector::Zero(dim_);
    out_.dh = Vector::Zero(dim_);
    grad_work_ = Vector::Zero(dim_);
  }
  if (order_ >= 2) {
    out_.d2f = Matrix::Zero(dim_, dim_);
    out_.d2h = Matrix::Zero(dim_, dim_);
    hess_work_ = Matrix::Zero(dim_, dim_);
  }
  if (const auto* g = std::get_if<GarchFamily>(&family_.spec())) {
    sig2_.assign(static_cast<std::size_t>(g->p), 0.0);
    if (order_ >= 1) dsig2_.assign(static_cast<std::size_t>(g->p), Vector::Zero(dim_));
    if (order_ >= 2) d2sig2_.assign(static_cast<std::size_t>(g->p), Matrix::Zero(dim_, dim_));
  }
  if (const auto* rf = std::get_if<RiemannianArFamily>(&family_.spec())) {
    powers_.assign(static_cast<std::size_t>(rf->truncation), 0.0);
    logs_.resize(static_cast<std::size_t>(rf->truncation));
    for (int k = 1; k <= rf->truncation; ++k) logs_[k - 1] = std::log(static_cast<double>(k));
  }
}

void MomentSweep::reset(const Vector& theta, double variance_floor) {
  family_.check_parameters(theta);
  theta_ = theta;
  floor_ = variance_floor;
  s_ = 1;
  std::visit(
      Overloaded{
          [&](const ArFamily&) {},
          [&](const RiemannianArFamily& f) {
            for (int k = 1; k <= f.truncation; ++k) powers_[k - 1] = std::exp(-theta[1] * logs_[k - 1]);
          },
          [&](const ArchFamily&) {
            if (theta[0] < floor_) throw DomainError("ARCH constant psi_0 below the variance floor");
            for (Eigen::Index k = 1; k < theta.size(); ++k) {
              if (theta[k] < 0.0) throw DomainError("ARCH lag weights must be nonnegative");
            }
          },
          [&](const GarchFamily& f) {
            if (theta[0] < floor_) throw DomainError("GARCH constant a_0 below the variance floor");
            for (Eigen::Index k = 1; k < theta.size(); ++k) {
              if (theta[k] < 0.0) throw DomainError("GARCH coefficients must be nonnegative");
            }
            double bsum = 0.0;
            for (int k = 1; k <= f.p; ++k) bsum += theta[f.q + k];
            const double slack = 1.0 - bsum;
            if (!(slack > 0.0)) throw DomainError("GARCH needs sum of b_k < 1");
            const double level = theta[0] / slack;
            for (int k = 0; k < f.p; ++k) {
              sig2_[k] = level;
              if (order_ >= 1) {
                dsig2_[k].setZero();
                dsig2_[k][0] = 1.0 / slack;
                for (int j = 1; j <= f.p; ++j) dsig2_[k][f.q + j] = theta[0] / (slack * slack);
              }
              if (order_ >= 2) {
                Matrix& H = d2sig2_[k];
                H.setZero();
                for (int j = 1; j <= f.p; ++j) {
                  H(0, f.q + j) = H(f.q + j, 0) = 1.0 / (slack * slack);
                  for (int i = 1; i <= f.p; ++i) {
                    H(f.q + i, f.q + j) = 2.0 * theta[0] / (slack * slack * slack);
                  }
                }
              }
            }
          },
          [&](const TarchFamily&) {
            if (theta[0] * theta[0] < floor_) {
              throw DomainError("TARCH constant b_0 squared below the variance floor");
            }
            for (Eigen::Index k = 1; k < theta.size(); ++k) {
              if (theta[k] < 0.0) throw DomainError("TARCH coefficients must be nonnegative");
            }
          },
      },
      family_.spec());
}

void MomentSweep::seek(std::span<const double> x, int s) {
  if (s < 1) throw ConfigError("time index must be >= 1");
  if (!family_.recursive()) {
    s_ = s;
    return;
  }
  if (s < s_) throw ConfigError("GARCH sweep cannot seek backwards; reset first");
  while (s_ < s) step_garch(x, false);
}

const MeanVarDerivatives& MomentSweep::next(std::span<const double> x) {
  if (family_.recursive()) {
    step_garch(x, true);
  } else {
    compute_lag_family(x);
    ++s_;
  }
  return out_;
}

void MomentSweep::compute_lag_family(std::span<const double> x) {
  const int s = s_;
  const Vector& th = theta_;
  std::visit(
      Overloaded{
          [&](const ArFamily& f) {
            double mean = 0.0;
            for (int k = 1; k <= f.order; ++k) {
              const double v = lag_value(x, s, k);
              mean += th[k - 1] * v;
              if (order_ >= 1) out_.df[k - 1] = v;
            }
            out_.f = mean;
            out_.h = 1.0;
          },
          [&](const RiemannianArFamily& f) {
            double sw = 0.0;
            double swl = 0.0;
            double swll = 0.0;
            const int kmax = std::min(f.truncation, s - 1);
            for (int k = 1; k <= kmax; ++k) {
              const double v = x[static_cast<std::size_t>(s - k - 1)];
              const double wv = powers_[k - 1] * v;
              sw += wv;
              if (order_ >= 1) {
                swl += wv * logs_[k - 1];
                if (order_ >= 2) swll += wv * logs_[k - 1] * logs_[k - 1];
              }
            }
            out_.f = th[0] * sw;
            out_.h = 1.0;
            if (order_ >= 1) {
              out_.df[0] = sw;
              out_.df[1] = -th[0] * swl;
            }
            if (order_ >= 2) {
              out_.d2f(0, 0) = 0.0;
              out_.d2f(0, 1) = out_.d2f(1, 0) = -swl;
              out_.d2f(1, 1) = th[0] * swll;
            }
          },
          [&](const ArchFamily& f) {
            double h = th[0];
            if (order_ >= 1) out_.dh[0] = 1.0;
            for (int k = 1; k <= f.order; ++k) {
              const double v = lag_value(x, s, k);
              h += th[k] * v * v;
              if (order_ >= 1) out_.dh[k] = v * v;
            }
            out_.f = 0.0;
            out_.h = h;
          },
          [&](const TarchFamily& f) {
            const int q = f.order;
            double sigma = th[0];
            if (order_ >= 1) grad_work_[0] = 1.0;
            for (int k = 1; k <= q; ++k) {
              const double v = lag_value(x, s, k);
              const double pos = std::max(v, 0.0);
              const double neg = -std::min(v, 0.0);
              sigma += th[k] * pos + th[q + k] * neg;
              if (order_ >= 1) {
                grad_work_[k] = pos;
                grad_work_[q + k] = neg;
              }
            }
            out_.f = 0.0;
            out_.h = sigma * sigma;
            if (order_ >= 1) out_.dh.noalias() = (2.0 * sigma) * grad_work_;
            if (order_ >= 2) out_.d2h.noalias() = 2.0 * grad_work_ * grad_work_.transpose();
          },
          [&](const GarchFamily&) {},
      },
      family_.spec());
  if (!(out_.h >= floor_)) {
    throw DomainError("conditional variance fell below the floor at s=" + std::to_string(s));
  }
}

void MomentSweep::step_garch(std::span<const double> x, bool store) {
  const auto& f = std::get<GarchFamily>(family_.spec());
  const Vector& th = theta_;
  const int s = s_;
  double h = th[0];
  for (int k = 1; k <= f.q; ++k) {
    const double v = lag_value(x, s, k);
    h += th[k] * v * v;
  }
  for (int k = 1; k <= f.p; ++k) h += th[f.q + k] * sig2_[k - 1];

  if (order_ >= 1) {
    Vector& g = grad_work_;
    g.setZero();
    g[0] = 1.0;
    for (int k = 1; k <= f.q; ++k) {
      const double v = lag_value(x, s, k);
      g[k] = v * v;
    }
    for (int k = 1; k <= f.p; ++k) {
      g[f.q + k] += sig2_[k - 1];
      g.noalias() += th[f.q + k] * dsig2_[k - 1];
    }
  }
  if (order_ >= 2) {
    Matrix& H = hess_work_;
    H.setZero();
    for (int k = 1; k <= f.p; ++k) {
      const int bk = f.q + k;
      H.noalias() += th[bk] * d2sig2_[k - 1];
      H.row(bk) += dsig2_[k - 1].transpose();
      H.col(bk) += dsig2_[k - 1];
    }
  }

  if (!(h >= floor_)) {
    throw DomainError("conditional variance fell below the floor at s=" + std::to_string(s));
  }
  if (store) {
    out_.f = 0.0;
    out_.h = h;
    if (order_ >= 1) out_.dh = grad_work_;
    if (order_ >= 2) out_.d2h = hess_work_;
  }

  // Shift the history: the oldest slot becomes the newest.
  std::rotate(sig2_.rbegin(), sig2_.rbegin() + 1, sig2_.rend());
  sig2_[0] = h;
  if (order_ >= 1) {
    std::rotate(dsig2_.rbegin(), dsig2_.rbegin() + 1, dsig2_.rend());
    dsig2_[0] = grad_work_;
  }
  if (order_ >= 2) {
    std::rotate(d2sig2_.rbegin(), d2sig2_.rbegin() + 1, d2sig2_.rend());
    d2sig2_[0] = hess_work_;
  }
  ++s_;
}

}  // namespace qmlcp

#pragma once

#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "qmlcp/types.hpp"

namespace qmlcp {

inline constexpr double kDefaultVarianceFloor = 1e-8;

// ---------------------------------------------------------------------------
// Innovation laws. Innovations are always centred with unit variance; the
// Student-t law is rescaled by sqrt((dof - 2) / dof).
// ---------------------------------------------------------------------------

enum class InnovationKind { gaussian, student_t };

struct InnovationLaw {
  InnovationKind kind = InnovationKind::gaussian;
  double dof = 0.0;

  static InnovationLaw gaussian() { return {}; }
  static InnovationLaw student_t(double dof);
  static InnovationLaw parse(std::string_view text);

  std::string name() const;
};

// (E|xi_0|^r)^(1/r) for the standardized law, +inf when the moment is
// infinite. Closed form (no sampling).
double abs_moment_root(const InnovationLaw& law, double r);

// ---------------------------------------------------------------------------
// Model families. Parameter ordering per family:
//   AR(p)            (phi_1, ..., phi_p),            f = sum phi_k x_k, h = 1
//   RiemannianAR(L)  (c, gamma), phi_k = c k^-gamma for k <= L,      h = 1
//   ARCH(q)          (psi_0, psi_1, ..., psi_q),     h = psi_0 + sum psi_k x_k^2
//   GARCH(p,q)       (a_0, a_1..a_q, b_1..b_p),      sigma^2 recursion
//   TARCH(q)         (b_0, b_1^+..b_q^+, b_1^-..b_q^-),
//                    sigma = b_0 + sum b_k^+ max(x_k,0) - b_k^- min(x_k,0)
// ---------------------------------------------------------------------------

struct ArFamily {
  int order = 1;
};
struct RiemannianArFamily {
  int truncation = 50;
};
struct ArchFamily {
  int order = 1;
};
struct GarchFamily {
  int p = 1;  // lagged variances (b_k)
  int q = 1;  // lagged squared observations (a_k)
};
struct TarchFamily {
  int order = 1;
};

class ModelFamily {
 public:
  using Spec = std::variant<ArFamily, RiemannianArFamily, ArchFamily, GarchFamily, TarchFamily>;

  explicit ModelFamily(Spec spec);

  // Accepts "AR(p)", "RiemannianAR(L)", "ARCH(q)", "GARCH(p,q)", "TARCH(q)"
  // (case-insensitive). Throws ConfigError for anything else.
  static ModelFamily parse(std::string_view text);

  const Spec& spec() const { return spec_; }
  std::string name() const;
  int dimension() const;
  // Number of lagged observations entering f/h directly. GARCH additionally
  // carries its variance recursion over the whole past.
  int max_lag() const;
  bool recursive() const { return std::holds_alternative<GarchFamily>(spec_); }
  bool is_volatility() const;
  // AR(p): mean linear in theta and h == 1, so the contrast is a quadratic.
  bool linear_mean_unit_variance() const { return std::holds_alternative<ArFamily>(spec_); }
  std::vector<std::string> parameter_names() const;

  // Throws InvalidParameter on dimension mismatch or non-finite entries.
  void check_parameters(const Vector& theta) const;

 private:
  Spec spec_;
};

// Compact parameter box plus the moment order used for the stationarity test
// and the variance floor of the conditional variance.
struct ParamDomain {
  Vector lower;
  Vector upper;
  double moment_order = 2.0;
  double variance_floor = kDefaultVarianceFloor;

  static ParamDomain default_for(const ModelFamily& family);

  void validate(const ModelFamily& family) const;
  bool contains(const Vector& theta) const;
  bool on_boundary(const Vector& theta, double tol = 1e-10) const;
};

struct ContractionReport {
  double beta0 = 0.0;
  std::vector<double> coefficient_tail;
  bool is_arch_type = false;
  bool in_domain = false;
};

// Lipschitz-coefficient sum of the family at theta. AR and TARCH use the
// general bound on (f, M); ARCH and GARCH use the bound on h with the
// (E|xi|^r)^(2/r) factor. For GARCH the tail lists a_k weighted by the moment
// factor followed by b_k.
ContractionReport contraction(const ModelFamily& family, const Vector& theta, double r,
                              const InnovationLaw& law = InnovationLaw::gaussian());

// Gradient of beta0 in theta (a subgradient where |.| or max(.) kinks).
Vector contraction_gradient(const ModelFamily& family, const Vector& theta, double r,
                            const InnovationLaw& law = InnovationLaw::gaussian());

// Geometric (finite order, GARCH) or Riemannian k^-gamma decay of the
// Lipschitz coefficients; gamma is meaningful only for RiemannianAR.
struct DecayClass {
  bool geometric = true;
  double gamma = 0.0;
};
DecayClass decay_class(const ModelFamily& family, const Vector& theta);

// ---------------------------------------------------------------------------
// Conditional moments. `past` is reversed: past[0] = X_{s-1}, past[1] = X_{s-2}
// and so on; entries beyond its end are zero.
// ---------------------------------------------------------------------------

double conditional_mean(const ModelFamily& family, const Vector& theta,
                        std::span<const double> past);

double conditional_variance(const ModelFamily& family, const Vector& theta,
                            std::span<const double> past,
                            double variance_floor = kDefaultVarianceFloor);

struct MeanVarDerivatives {
  double f = 0.0;
  double h = 1.0;
  Vector df;
  Vector dh;
  Matrix d2f;
  Matrix d2h;
  bool on_boundary = false;
};

MeanVarDerivatives mean_var_derivatives(const ModelFamily& family, const Vector& theta,
                                        std::span<const double> past,
                                        const ParamDomain* domain = nullptr);

// Streams f_theta and h_theta (and optionally their first/second derivatives)
// along a forward series x[0] = X_1, x[1] = X_2, ... using only the values
// before each time point. Lag families are random access; GARCH runs its
// recursion, initialised at a_0 / (1 - sum b_k), so seeks are forward only.
class MomentSweep {
 public:
  MomentSweep(const ModelFamily& family, int derivative_order);

  // Restart at s = 1 with new parameters. Throws DomainError when theta
  // cannot produce a variance above the floor.
  void reset(const Vector& theta, double variance_floor = kDefaultVarianceFloor);

  // Move to time s (1-based). For GARCH this runs the recursion over x.
  void seek(std::span<const double> x, int s);

  // Moments at the current time, then advance by one.
  const MeanVarDerivatives& next(std::span<const double> x);

  int time() const { return s_; }
  const ModelFamily& family() const { return family_; }

 private:
  void compute_lag_family(std::span<const double> x);
  void step_garch(std::span<const double> x, bool store);

  ModelFamily family_;
  int order_;
  int dim_;
  int s_ = 1;
  double floor_ = kDefaultVarianceFloor;
  Vector theta_;
  MeanVarDerivatives out_;

  // RiemannianAR weights k^-gamma and log k.
  std::vector<double> powers_;
  std::vector<double> logs_;

  // GARCH state; index 0 is the most recent lag.
  std::vector<double> sig2_;
  std::vector<Vector> dsig2_;
  std::vector<Matrix> d2sig2_;
  Vector grad_work_;
  Matrix hess_work_;
};

}  // namespace qmlcp

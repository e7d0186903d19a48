#include "qmlcp/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <boost/math/distributions/normal.hpp>

namespace qmlcp {

SandwichEstimate sandwich_from_matrices(const Matrix& F, const Matrix& G, int n_j) {
  if (F.rows() != F.cols() || G.rows() != G.cols() || F.rows() != G.rows() || F.rows() == 0) {
    throw ConfigError("F and G must be square matrices of the same dimension");
  }
  if (n_j < 1) throw ConfigError("segment length must be >= 1");
  SandwichEstimate est;
  est.n_j = n_j;
  est.F_hat = 0.5 * (F + F.transpose());
  est.G_hat = 0.5 * (G + G.transpose());
  if (!est.F_hat.allFinite() || !est.G_hat.allFinite()) {
    throw DegenerateInformation("information matrix has non-finite entries");
  }

  Eigen::JacobiSVD<Matrix> svd(est.F_hat, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& sv = svd.singularValues();
  const double smax = sv[0];
  const double smin = sv[sv.size() - 1];
  est.condition_F = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(smin > 0.0) || est.condition_F > kMaxInformationCondition) {
    std::ostringstream os;
    os << "information matrix is degenerate (condition number " << est.condition_F << ")";
    throw DegenerateInformation(os.str());
  }
  const Matrix f_inv = svd.matrixV() * sv.cwiseInverse().asDiagonal() * svd.matrixU().transpose();
  est.cov = f_inv * est.G_hat * f_inv.transpose();
  est.cov = 0.5 * (est.cov + est.cov.transpose()).eval();
  return est;
}

SandwichEstimate sandwich_cov(const ContrastEvaluator& evaluator, SegmentRef seg,
                              const Vector& theta, const ParamDomain* domain) {
  if (seg.length() < 1) throw ConfigError("sandwich covariance needs a non-empty segment");
  const ScoreMoments m = evaluator.score_moments(seg, theta);
  const double inv_n = 1.0 / m.count;
  SandwichEstimate est = sandwich_from_matrices(m.hessian_sum * inv_n, m.outer_sum * inv_n, m.count);
  est.on_boundary = domain != nullptr && domain->on_boundary(theta);
  return est;
}

double normal_quantile_two_sided(double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must be in (0, 1)");
  static const boost::math::normal_distribution<double> standard;
  return boost::math::quantile(standard, 0.5 * (1.0 + level));
}

std::vector<ConfidenceInterval> confint(const SandwichEstimate& est, const Vector& theta,
                                        double level) {
  if (theta.size() != est.cov.rows()) throw InvalidParameter("theta dimension does not match covariance");
  const double z = normal_quantile_two_sided(level);
  std::vector<ConfidenceInterval> out(static_cast<std::size_t>(theta.size()));
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double half = z * std::sqrt(std::max(est.cov(i, i), 0.0) / est.n_j);
    out[static_cast<std::size_t>(i)] = {theta[i] - half, theta[i] + half};
  }
  return out;
}

}  // namespace qmlcp

#include "slds/distributions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "slds/error.hpp"
#include "slds/linalg.hpp"

namespace slds {

namespace {

void require_positive(double value, const char* what) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw ParameterDomainError(std::string(what) + " must be positive and finite, got " +
                               std::to_string(value));
  }
}

}  // namespace

double RngStream::uniform() {
  // 53 random bits, shifted half a step off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double RngStream::standard_normal() {
  std::normal_distribution<double> normal(0.0, 1.0);
  return normal(engine_);
}

double sample_gamma(double shape, double rate, RngStream& rng) {
  require_positive(shape, "gamma shape");
  require_positive(rate, "gamma rate");
  std::gamma_distribution<double> gamma(shape, 1.0);
  double draw = gamma(rng.engine()) / rate;
  // Tiny shapes underflow; keep the draw inside the support.
  return std::max(draw, std::numeric_limits<double>::denorm_min());
}

double sample_log_gamma(double shape, RngStream& rng) {
  require_positive(shape, "gamma shape");
  if (shape >= 1.0) {
    std::gamma_distribution<double> gamma(shape, 1.0);
    return std::log(gamma(rng.engine()));
  }
  // G(a) = G(a + 1) * U^(1/a)
  std::gamma_distribution<double> gamma(shape + 1.0, 1.0);
  const double log_g = std::log(gamma(rng.engine()));
  return log_g + std::log(rng.uniform()) / shape;
}

double sample_beta(double a, double b, RngStream& rng) {
  require_positive(a, "beta parameter a");
  require_positive(b, "beta parameter b");
  const double log_x = sample_log_gamma(a, rng);
  const double log_y = sample_log_gamma(b, rng);
  const double hi = std::max(log_x, log_y);
  const double x = std::exp(log_x - hi);
  const double y = std::exp(log_y - hi);
  double draw = x / (x + y);
  // Keep strictly inside (0, 1).
  constexpr double eps = std::numeric_limits<double>::epsilon();
  return std::clamp(draw, std::numeric_limits<double>::min(), 1.0 - eps / 2);
}

int sample_binomial(int trials, double p, RngStream& rng) {
  if (trials < 0) throw ParameterDomainError("binomial trials must be nonnegative");
  if (!(p >= 0.0 && p <= 1.0)) throw ParameterDomainError("binomial p must lie in [0, 1]");
  if (trials == 0 || p == 0.0) return 0;
  if (p == 1.0) return trials;
  std::binomial_distribution<int> binomial(trials, p);
  return binomial(rng.engine());
}

VectorXd sample_dirichlet(const VectorXd& concentration, RngStream& rng) {
  if (concentration.size() == 0) throw ParameterDomainError("dirichlet: empty concentration");
  VectorXd logs(concentration.size());
  for (Eigen::Index i = 0; i < concentration.size(); ++i) {
    require_positive(concentration[i], "dirichlet concentration");
    logs[i] = sample_log_gamma(concentration[i], rng);
  }
  const double hi = logs.maxCoeff();
  VectorXd out = (logs.array() - hi).exp().matrix();
  out /= out.sum();
  return out;
}

int sample_categorical(std::span<const double> weights, RngStream& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ParameterDomainError("categorical weights must be finite and nonnegative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw ParameterDomainError("categorical weights are all zero");
  double u = rng.uniform() * total;
  int last_positive = -1;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = static_cast<int>(i);
    if (u < weights[i]) return last_positive;
    u -= weights[i];
  }
  return last_positive;
}

int sample_categorical_log(std::span<const double> log_weights, RngStream& rng) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double lw : log_weights) {
    if (std::isnan(lw) || lw == std::numeric_limits<double>::infinity()) {
      throw NumericalError("categorical log-weight is NaN or +inf");
    }
    hi = std::max(hi, lw);
  }
  if (!std::isfinite(hi)) throw NumericalError("categorical log-weights are all -inf");
  std::vector<double> weights(log_weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) weights[i] = std::exp(log_weights[i] - hi);
  return sample_categorical(weights, rng);
}

VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, RngStream& rng) {
  if (cov.rows() != mean.size()) throw ValidationError("sample_mvn: dimension mismatch");
  const auto llt = cholesky(cov, "sample_mvn covariance");
  VectorXd z(mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.standard_normal();
  return mean + llt.matrixL() * z;
}

VectorXd sample_mvn_info(const VectorXd& theta, const MatrixXd& lambda, RngStream& rng) {
  if (lambda.rows() != theta.size()) throw ValidationError("sample_mvn_info: dimension mismatch");
  const auto llt = cholesky(lambda, "sample_mvn_info precision");
  VectorXd z(theta.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.standard_normal();
  // lambda = L L^T, so L^{-T} z has covariance lambda^{-1}.
  const VectorXd mean = llt.solve(theta);
  return mean + llt.matrixU().solve(z);
}

MatrixXd sample_inverse_wishart(double dof, const MatrixXd& scale, RngStream& rng) {
  const auto d = scale.rows();
  if (scale.cols() != d || d == 0) throw ParameterDomainError("inverse-wishart: scale must be square");
  if (!(dof > static_cast<double>(d) - 1.0)) {
    throw ParameterDomainError("inverse-wishart: dof must exceed D - 1, got " + std::to_string(dof));
  }
  if (!is_spd(scale)) throw ParameterDomainError("inverse-wishart: scale is not SPD");

  // Bartlett decomposition of W ~ Wishart(dof, scale^{-1}); X = W^{-1}.
  const MatrixXd precision_chol = cholesky(spd_inverse(scale, "inverse-wishart scale"),
                                           "inverse-wishart scale inverse")
                                      .matrixL();
  MatrixXd bartlett = MatrixXd::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const double chi2 = 2.0 * sample_gamma(0.5 * (dof - static_cast<double>(i)), 1.0, rng);
    bartlett(i, i) = std::sqrt(chi2);
    for (Eigen::Index j = 0; j < i; ++j) bartlett(i, j) = rng.standard_normal();
  }
  const MatrixXd factor = precision_chol * bartlett;  // W = F F^T
  // X = F^{-T} F^{-1}
  const MatrixXd inv_factor =
      factor.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
  return symmetrized(inv_factor.transpose() * inv_factor);
}

MatrixXd sample_matrix_normal(const MatrixXd& mean, const MatrixXd& row_cov,
                              const MatrixXd& col_cov, RngStream& rng) {
  if (row_cov.rows() != mean.rows() || col_cov.rows() != mean.cols()) {
    throw ValidationError("sample_matrix_normal: dimension mismatch");
  }
  const auto row_llt = cholesky(row_cov, "matrix-normal row covariance");
  const auto col_llt = cholesky(col_cov, "matrix-normal column covariance");
  MatrixXd z(mean.rows(), mean.cols());
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) z(i, j) = rng.standard_normal();
  }
  const MatrixXd row_l = row_llt.matrixL();
  const MatrixXd col_l = col_llt.matrixL();
  return mean + row_l * z * col_l.transpose();
}

}  // namespace slds

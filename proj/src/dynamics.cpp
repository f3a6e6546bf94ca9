#include "slds/dynamics.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "slds/error.hpp"
#include "slds/linalg.hpp"

namespace slds {

void MniwPrior::validate() const {
  const auto d = M.rows();
  if (d == 0 || M.cols() != d || K.rows() != d || K.cols() != d || S0.rows() != d ||
      S0.cols() != d) {
    throw ValidationError("MNIW prior: M, K, S0 must all be D x D");
  }
  if (!is_spd(K)) throw ValidationError("MNIW prior: K is not SPD");
  if (!is_spd(S0)) throw ValidationError("MNIW prior: S0 is not SPD");
  if (!(n0 > static_cast<double>(d) - 1.0)) {
    throw ValidationError("MNIW prior: n0 must exceed D - 1");
  }
}

MniwPrior MniwPrior::defaults(int dim) {
  MniwPrior p;
  p.M = MatrixXd::Identity(dim, dim);
  p.K = 1e-3 * MatrixXd::Identity(dim, dim);
  p.n0 = dim + 2.0;
  p.S0 = 1e-5 * MatrixXd::Identity(dim, dim);
  return p;
}

MatrixXd SufficientStats::residual() const {
  const auto llt = cholesky(S_xbarxbar, "S_xbarxbar");
  return symmetrized(S_xx - S_xxbar * llt.solve(S_xxbar.transpose()));
}

MatrixXd SufficientStats::posterior_mean() const {
  const auto llt = cholesky(S_xbarxbar, "S_xbarxbar");
  // S_xxbar S^{-1} = (S^{-1} S_xxbar^T)^T for symmetric S.
  return llt.solve(S_xxbar.transpose()).transpose();
}

namespace {

SufficientStats prior_terms(const MniwPrior& prior) {
  SufficientStats s;
  s.S_xbarxbar = prior.K;
  s.S_xxbar = prior.M * prior.K;
  s.S_xx = prior.M * prior.K * prior.M.transpose();
  s.count = 0;
  return s;
}

void check_alignment(const MatrixXd& x, std::span<const int> z, const MniwPrior& prior) {
  if (static_cast<std::size_t>(x.rows()) != z.size()) {
    throw ValidationError("state and mode sequences differ in length");
  }
  if (x.cols() != prior.dim()) {
    throw ValidationError("state dimension does not match the MNIW prior");
  }
}

}  // namespace

SufficientStats accumulate_statistics(const MatrixXd& x, std::span<const int> z, int k,
                                      const MniwPrior& prior) {
  check_alignment(x, z, prior);
  SufficientStats s = prior_terms(prior);
  for (Eigen::Index t = 1; t < x.rows(); ++t) {
    if (z[t] != k) continue;
    const VectorXd prev = x.row(t - 1).transpose();
    const VectorXd cur = x.row(t).transpose();
    s.S_xbarxbar.noalias() += prev * prev.transpose();
    s.S_xxbar.noalias() += cur * prev.transpose();
    s.S_xx.noalias() += cur * cur.transpose();
    ++s.count;
  }
  return s;
}

MatrixXd sample_sigma(const SufficientStats& stats, const MniwPrior& prior, RngStream& rng) {
  const MatrixXd scale = symmetrized(stats.residual() + prior.S0);
  return sample_inverse_wishart(stats.count + prior.n0, scale, rng);
}

MatrixXd sample_A(const SufficientStats& stats, const MatrixXd& sigma, RngStream& rng) {
  const MatrixXd col_cov = spd_inverse(stats.S_xbarxbar, "S_xbarxbar");
  return sample_matrix_normal(stats.posterior_mean(), sigma, col_cov, rng);
}

DynParams sample_dynamics_prior(const MniwPrior& prior, RngStream& rng) {
  const SufficientStats s = prior_terms(prior);
  DynParams out;
  out.Sigma = sample_inverse_wishart(prior.n0, prior.S0, rng);
  out.A = sample_A(s, out.Sigma, rng);
  return out;
}

std::vector<DynParams> sample_dynamics_all(const MatrixXd& x, std::span<const int> z,
                                           const MniwPrior& prior, int L, RngStream& rng) {
  check_alignment(x, z, prior);
  if (L < 1) throw ValidationError("L must be at least 1");
  std::vector<SufficientStats> stats(L, prior_terms(prior));
  for (Eigen::Index t = 1; t < x.rows(); ++t) {
    const int k = z[t];
    if (k < 0 || k >= L) throw ValidationError("mode label outside [0, L)");
    const VectorXd prev = x.row(t - 1).transpose();
    const VectorXd cur = x.row(t).transpose();
    auto& s = stats[k];
    s.S_xbarxbar.noalias() += prev * prev.transpose();
    s.S_xxbar.noalias() += cur * prev.transpose();
    s.S_xx.noalias() += cur * cur.transpose();
    ++s.count;
  }
  std::vector<DynParams> out(L);
  for (int k = 0; k < L; ++k) {
    out[k].Sigma = sample_sigma(stats[k], prior, rng);
    out[k].A = sample_A(stats[k], out[k].Sigma, rng);
  }
  return out;
}

namespace {

double log_multivariate_gamma(double x, int d) {
  double out = 0.25 * d * (d - 1) * std::log(std::numbers::pi);
  for (int j = 1; j <= d; ++j) out += std::lgamma(x + 0.5 * (1 - j));
  return out;
}

}  // namespace

double mniw_log_density(const DynParams& dyn, const MniwPrior& prior) {
  const int d = prior.dim();
  const double dd = d;
  const auto sigma_llt = cholesky(dyn.Sigma, "Sigma");
  const double log_det_sigma = 2.0 * sigma_llt.matrixLLT().diagonal().array().log().sum();
  const double log_det_s0 = spd_log_det(prior.S0, "S0");
  const double log_det_k = spd_log_det(prior.K, "K");
  const MatrixXd sigma_inv = sigma_llt.solve(MatrixXd::Identity(d, d));

  const double nu = prior.n0;
  const double log_iw = 0.5 * nu * log_det_s0 - 0.5 * nu * dd * std::log(2.0) -
                        log_multivariate_gamma(0.5 * nu, d) -
                        0.5 * (nu + dd + 1.0) * log_det_sigma -
                        0.5 * (prior.S0 * sigma_inv).trace();

  const MatrixXd diff = dyn.A - prior.M;
  const double quad = (prior.K * diff.transpose() * sigma_inv * diff).trace();
  const double log_mn = -0.5 * quad - 0.5 * dd * dd * std::log(2.0 * std::numbers::pi) +
                        0.5 * dd * log_det_k - 0.5 * dd * log_det_sigma;
  return log_iw + log_mn;
}

}  // namespace slds

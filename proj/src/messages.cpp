#include "slds/messages.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "slds/error.hpp"
#include "slds/linalg.hpp"

namespace slds {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double log_sum_exp(const Eigen::Ref<const VectorXd>& v) {
  const double hi = v.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((v.array() - hi).exp().sum());
}

// Precomputed observation terms: C^T R^{-1} C, C^T R^{-1}, and the
// normalizer of N(y; Cx, R).
struct ObsTerms {
  MatrixXd ct_rinv_c;
  MatrixXd ct_rinv;
  MatrixXd r_inv;
  double log_norm = 0.0;

  explicit ObsTerms(const ObsModel& obs) {
    const auto r_llt = cholesky(obs.R, "observation noise R");
    r_inv = symmetrized(r_llt.solve(MatrixXd::Identity(obs.R.rows(), obs.R.cols())));
    ct_rinv = obs.C.transpose() * r_inv;
    ct_rinv_c = symmetrized(ct_rinv * obs.C);
    const double log_det = 2.0 * r_llt.matrixLLT().diagonal().array().log().sum();
    log_norm = -0.5 * (static_cast<double>(obs.R.rows()) * kLog2Pi + log_det);
  }

  void absorb(InfoMessage& msg, const VectorXd& y) const {
    msg.lambda += ct_rinv_c;
    msg.theta.noalias() += ct_rinv * y;
    msg.log_scale += log_norm - 0.5 * y.dot(r_inv * y);
  }
};

// Integrates x_{t} out of N(x_t; A x_{t-1}, Sigma) * msg(x_t), giving a
// potential over x_{t-1}. Written through (I + Lambda Sigma)^{-1} so that no
// inverse of Sigma or Lambda is needed.
InfoMessage propagate_backward(const InfoMessage& msg, const DynParams& dyn, Eigen::Index t) {
  const auto d = msg.lambda.rows();
  const MatrixXd i_plus = MatrixXd::Identity(d, d) + msg.lambda * dyn.Sigma;
  Eigen::PartialPivLU<MatrixXd> lu(i_plus);
  const double det = lu.determinant();
  if (!(det > 0.0) || !std::isfinite(det)) {
    throw LinAlgError("backward message at t=" + std::to_string(t) +
                      ": I + Lambda Sigma is singular or not positive");
  }
  const VectorXd solved_theta = lu.solve(msg.theta);
  const MatrixXd damped = symmetrized(lu.solve(msg.lambda));  // (Sigma + Lambda^{-1})^{-1}

  InfoMessage out;
  out.lambda = symmetrized(dyn.A.transpose() * damped * dyn.A);
  out.theta = dyn.A.transpose() * solved_theta;
  out.log_scale =
      msg.log_scale - 0.5 * std::log(det) + 0.5 * (dyn.Sigma * msg.theta).dot(solved_theta);
  if (!out.lambda.allFinite() || !out.theta.allFinite() || !std::isfinite(out.log_scale)) {
    throw LinAlgError("backward message at t=" + std::to_string(t) + ": non-finite result");
  }
  return out;
}

// Moments of a potential after regularizing its precision.
struct Moments {
  VectorXd mean;
  MatrixXd cov;
};

Moments moments_of(const InfoMessage& msg, std::string_view what) {
  const auto llt = cholesky(regularized(msg.lambda), what);
  Moments m;
  m.cov = symmetrized(llt.solve(MatrixXd::Identity(msg.lambda.rows(), msg.lambda.cols())));
  m.mean = llt.solve(msg.theta);
  return m;
}

InfoMessage potential_with_observation(const VectorXd& mean, const MatrixXd& cov,
                                       double log_weight, const VectorXd& y,
                                       const ObsTerms& terms) {
  InfoMessage pot = InfoMessage::from_moments(mean, cov);
  pot.log_scale += log_weight;
  terms.absorb(pot, y);
  return pot;
}

void normalize(InfoMessage& msg) { msg.log_scale -= msg.log_integral(); }

void check_inputs(const MatrixXd& y, std::span<const int> z,
                  const std::vector<DynParams>& dynamics, const ObsModel& obs) {
  obs.validate();
  if (y.rows() == 0) throw ValidationError("empty observation sequence");
  if (static_cast<std::size_t>(y.rows()) != z.size()) {
    throw ValidationError("observation and mode sequences differ in length");
  }
  if (y.cols() != obs.obs_dim()) {
    throw ValidationError("observation dimension does not match C");
  }
  for (int k : z) {
    if (k < 0 || static_cast<std::size_t>(k) >= dynamics.size()) {
      throw ValidationError("mode label " + std::to_string(k) + " has no dynamics");
    }
  }
}

}  // namespace

InfoMessage InfoMessage::zero(int dim) {
  return {MatrixXd::Zero(dim, dim), VectorXd::Zero(dim), 0.0};
}

InfoMessage InfoMessage::from_moments(const VectorXd& mean, const MatrixXd& cov) {
  const auto llt = cholesky(cov, "Gaussian covariance");
  InfoMessage msg;
  msg.lambda = symmetrized(llt.solve(MatrixXd::Identity(cov.rows(), cov.cols())));
  msg.theta = llt.solve(mean);
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  msg.log_scale = -0.5 * (static_cast<double>(mean.size()) * kLog2Pi + log_det) -
                  0.5 * mean.dot(msg.theta);
  return msg;
}

VectorXd InfoMessage::mean() const {
  return cholesky(regularized(lambda), "information matrix").solve(theta);
}

double InfoMessage::log_integral() const {
  const auto llt = cholesky(regularized(lambda), "information matrix");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return log_scale + 0.5 * (static_cast<double>(theta.size()) * kLog2Pi - log_det) +
         0.5 * theta.dot(llt.solve(theta));
}

void ObsModel::validate() const {
  if (C.rows() == 0 || C.cols() == 0) throw ValidationError("observation matrix C is empty");
  if (R.rows() != C.rows() || R.cols() != C.rows()) {
    throw ValidationError("observation noise R must be D_y x D_y");
  }
  if (!is_spd(R)) throw ValidationError("observation noise R is not SPD");
}

ObsModel ObsModel::identity(int dim, double noise) {
  return {MatrixXd::Identity(dim, dim), noise * MatrixXd::Identity(dim, dim)};
}

InitialStatePrior InitialStatePrior::from_first_observation(const MatrixXd& y,
                                                            const ObsModel& obs) {
  if (y.rows() == 0) throw ValidationError("empty observation sequence");
  const MatrixXd c_pinv = obs.C.completeOrthogonalDecomposition().pseudoInverse();
  InitialStatePrior p;
  p.mean = c_pinv * y.row(0).transpose();
  p.cov = regularized(c_pinv * obs.R * c_pinv.transpose());
  return p;
}

MatrixXd DiscreteMessages::probabilities() const { return log_values.array().exp().matrix(); }

BackwardMessages backward_info_messages(const MatrixXd& y, std::span<const int> z,
                                        const std::vector<DynParams>& dynamics,
                                        const ObsModel& obs) {
  check_inputs(y, z, dynamics, obs);
  const ObsTerms terms(obs);
  const auto T = y.rows();
  const int d = obs.state_dim();

  BackwardMessages out;
  out.incoming.resize(T);
  out.filtered.resize(T);
  out.incoming[T - 1] = InfoMessage::zero(d);
  for (Eigen::Index t = T - 1; t >= 0; --t) {
    out.filtered[t] = out.incoming[t];
    terms.absorb(out.filtered[t], y.row(t).transpose());
    if (t > 0) out.incoming[t - 1] = propagate_backward(out.filtered[t], dynamics[z[t]], t);
  }
  return out;
}

InfoMessage initial_likelihood_params(const InitialStatePrior& init, const VectorXd& y_0,
                                      const ObsModel& obs) {
  const ObsTerms terms(obs);
  return potential_with_observation(init.mean, init.cov, 0.0, y_0, terms);
}

LocalLikelihoods::LocalLikelihoods(const InfoMessage& forward_prev, const VectorXd& y_t,
                                   const ObsModel& obs) {
  const ObsTerms terms(obs);
  const Moments prev = moments_of(forward_prev, "forward message");
  prev_mean_ = prev.mean;
  prev_cov_ = prev.cov;
  prev_log_integral_ = forward_prev.log_integral();
  InfoMessage obs_only = InfoMessage::zero(obs.state_dim());
  terms.absorb(obs_only, y_t);
  obs_lambda_ = std::move(obs_only.lambda);
  obs_theta_ = std::move(obs_only.theta);
  obs_log_scale_ = obs_only.log_scale;
}

InfoMessage LocalLikelihoods::params(const DynParams& dyn_k) const {
  const VectorXd pred_mean = dyn_k.A * prev_mean_;
  const MatrixXd pred_cov = symmetrized(dyn_k.A * prev_cov_ * dyn_k.A.transpose() + dyn_k.Sigma);
  InfoMessage pot = InfoMessage::from_moments(pred_mean, pred_cov);
  pot.lambda += obs_lambda_;
  pot.theta += obs_theta_;
  pot.log_scale += prev_log_integral_ + obs_log_scale_;
  return pot;
}

// For x ~ N(mu, P) and the potential exp(c - x'Lx/2 + h'x), with P = F F' and
// B = I + F' L F:
//   log E[...] = c - log|B|/2 - mu'L mu/2 + h'mu + |B^{-1/2} F' (h - L mu)|^2/2.
VectorXd LocalLikelihoods::log_marginals(const std::vector<DynParams>& dynamics,
                                         const InfoMessage& backward) const {
  const MatrixXd lambda = symmetrized(backward.lambda + obs_lambda_);
  const VectorXd theta = backward.theta + obs_theta_;
  const double base = backward.log_scale + obs_log_scale_ + prev_log_integral_;
  const auto d = prev_mean_.size();
  const auto L = static_cast<Eigen::Index>(dynamics.size());
  VectorXd out(L);
  MatrixXd pred_cov(d, d), b(d, d);
  VectorXd pred_mean(d), resid(d);
  for (Eigen::Index k = 0; k < L; ++k) {
    const auto& dyn = dynamics[k];
    pred_mean.noalias() = dyn.A * prev_mean_;
    pred_cov.noalias() = dyn.A * prev_cov_ * dyn.A.transpose();
    pred_cov += dyn.Sigma;
    const Eigen::LLT<MatrixXd> p_llt(symmetrized(pred_cov));
    if (p_llt.info() != Eigen::Success) {
      throw LinAlgError("predictive covariance of mode " + std::to_string(k) +
                        " is not positive definite");
    }
    const MatrixXd f = p_llt.matrixL();
    b.noalias() = f.transpose() * lambda * f;
    b.diagonal().array() += 1.0;
    const Eigen::LLT<MatrixXd> b_llt(symmetrized(b));
    if (b_llt.info() != Eigen::Success) {
      throw LinAlgError("local likelihood of mode " + std::to_string(k) + " is degenerate");
    }
    resid.noalias() = theta - lambda * pred_mean;
    const VectorXd white = b_llt.matrixL().solve(f.transpose() * resid);
    const double log_det_b = 2.0 * b_llt.matrixLLT().diagonal().array().log().sum();
    out[k] = base - 0.5 * log_det_b - 0.5 * pred_mean.dot(lambda * pred_mean) +
             theta.dot(pred_mean) + 0.5 * white.squaredNorm();
  }
  return out;
}

InfoMessage local_likelihood_params(const InfoMessage& forward_prev, const VectorXd& y_t,
                                    const DynParams& dyn_k, const ObsModel& obs) {
  return LocalLikelihoods(forward_prev, y_t, obs).params(dyn_k);
}

ForwardMessages forward_info_messages(const MatrixXd& y, std::span<const int> z,
                                      const std::vector<DynParams>& dynamics, const ObsModel& obs,
                                      const InitialStatePrior& init) {
  check_inputs(y, z, dynamics, obs);
  const auto T = y.rows();
  ForwardMessages out;
  out.filtered.reserve(T);
  out.log_evidence.reserve(T);
  double evidence = 0.0;
  for (Eigen::Index t = 0; t < T; ++t) {
    InfoMessage pot = t == 0 ? initial_likelihood_params(init, y.row(0).transpose(), obs)
                             : local_likelihood_params(out.filtered.back(),
                                                       y.row(t).transpose(), dynamics[z[t]], obs);
    const double step = pot.log_integral();
    if (!std::isfinite(step)) {
      throw LinAlgError("forward message at t=" + std::to_string(t) + ": non-finite evidence");
    }
    evidence += step;
    normalize(pot);
    out.filtered.push_back(std::move(pot));
    out.log_evidence.push_back(evidence);
  }
  return out;
}

double mode_marginal_likelihood(const InfoMessage& params_k, const InfoMessage& backward) {
  InfoMessage combined;
  combined.lambda = params_k.lambda + backward.lambda;
  combined.theta = params_k.theta + backward.theta;
  combined.log_scale = params_k.log_scale + backward.log_scale;
  return combined.log_integral();
}

MatrixXd transition_log_likelihoods(const MatrixXd& x, const std::vector<DynParams>& dynamics) {
  const auto T = x.rows();
  const auto L = static_cast<Eigen::Index>(dynamics.size());
  const auto d = x.cols();
  std::vector<MatrixXd> l_inv(L);
  std::vector<double> norm(L);
  for (Eigen::Index k = 0; k < L; ++k) {
    const auto llt = cholesky(dynamics[k].Sigma, "Sigma of mode " + std::to_string(k));
    const MatrixXd l = llt.matrixL();
    l_inv[k] = l.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(d, d));
    norm[k] = -0.5 * (static_cast<double>(d) * kLog2Pi +
                      2.0 * l.diagonal().array().log().sum());
  }
  MatrixXd out = MatrixXd::Zero(T, L);
  VectorXd prev(d), cur(d), resid(d);
  for (Eigen::Index t = 1; t < T; ++t) {
    prev = x.row(t - 1).transpose();
    cur = x.row(t).transpose();
    for (Eigen::Index k = 0; k < L; ++k) {
      resid.noalias() = cur - dynamics[k].A * prev;
      out(t, k) = norm[k] - 0.5 * (l_inv[k] * resid).squaredNorm();
    }
  }
  return out;
}

DiscreteMessages hmm_backward_messages(const MatrixXd& log_likelihoods,
                                       const TransitionModel& transition) {
  const auto T = log_likelihoods.rows();
  const auto L = log_likelihoods.cols();
  if (transition.pi.rows() != L || transition.pi.cols() != L) {
    throw ValidationError("transition matrix does not match the number of modes");
  }
  DiscreteMessages msgs;
  msgs.log_values.resize(T, L);
  msgs.log_values.row(T - 1).setConstant(-std::log(static_cast<double>(L)));
  VectorXd v(L), e(L), s(L);
  for (Eigen::Index t = T - 1; t >= 1; --t) {
    v = log_likelihoods.row(t).transpose() + msgs.log_values.row(t).transpose();
    const double hi = v.maxCoeff();
    if (!std::isfinite(hi)) {
      throw NumericalError("discrete backward message at t=" + std::to_string(t) +
                           " has no finite entry");
    }
    e = (v.array() - hi).exp().matrix();
    s.noalias() = transition.pi * e;
    VectorXd row = s.array().log().matrix();
    row.array() += hi;
    row.array() -= log_sum_exp(row);
    msgs.log_values.row(t - 1) = row.transpose();
  }
  return msgs;
}

DiscreteMessages hmm_backward_messages(const MatrixXd& x, const TransitionModel& transition,
                                       const std::vector<DynParams>& dynamics) {
  if (static_cast<Eigen::Index>(dynamics.size()) != transition.num_modes()) {
    throw ValidationError("dynamics list does not match the number of modes");
  }
  return hmm_backward_messages(transition_log_likelihoods(x, dynamics), transition);
}

}  // namespace slds

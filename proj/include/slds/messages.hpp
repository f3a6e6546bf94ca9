#pragma once

// Gaussian and discrete message passing for the SLDS conditionals.
//
// Continuous messages are Gaussian potentials in information form,
//   phi(x) = exp(log_scale - 1/2 x^T lambda x + theta^T x),
// so that likelihood ratios between modes can be read off exactly.

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slds/dynamics.hpp"
#include "slds/hdp.hpp"

namespace slds {

struct InfoMessage {
  MatrixXd lambda;
  VectorXd theta;
  double log_scale = 0.0;

  static InfoMessage zero(int dim);
  /// The normalized Gaussian density N(mean, cov) as a potential.
  static InfoMessage from_moments(const VectorXd& mean, const MatrixXd& cov);

  int dim() const { return static_cast<int>(theta.size()); }
  /// lambda^{-1} theta (lambda regularized when near-singular).
  VectorXd mean() const;
  /// log of the integral of the potential over x.
  double log_integral() const;
};

/// y_t = C x_t + w_t, w_t ~ N(0, R).
struct ObsModel {
  MatrixXd C;
  MatrixXd R;

  int state_dim() const { return static_cast<int>(C.cols()); }
  int obs_dim() const { return static_cast<int>(C.rows()); }
  void validate() const;

  static ObsModel identity(int dim, double noise);
};

/// Gaussian prior on the first state x_1.
struct InitialStatePrior {
  VectorXd mean;
  MatrixXd cov;

  /// mean = C^+ y_1, cov = C^+ R C^+^T (= R when C = I).
  static InitialStatePrior from_first_observation(const MatrixXd& y, const ObsModel& obs);
};

/// Row-normalized discrete backward messages. Row t holds
/// log m_{t+1,t}(z_t) for t = 0..T-1 with logsumexp(row) = 0; the last row
/// is the uniform terminal message.
struct DiscreteMessages {
  MatrixXd log_values;

  MatrixXd probabilities() const;
};

struct BackwardMessages {
  /// m_{t+1,t}(x_t): marginalizes x_{t+1:T} and y_{t+1:T}. Last entry is zero.
  std::vector<InfoMessage> incoming;
  /// incoming[t] combined with the observation y_t.
  std::vector<InfoMessage> filtered;
};

struct ForwardMessages {
  /// Normalized p(x_t | y_{1:t}, z_{1:t}).
  std::vector<InfoMessage> filtered;
  /// log p(y_{1:t} | z_{1:t}).
  std::vector<double> log_evidence;
};

/// y is T x D_y, one observation per row; z has length T.
BackwardMessages backward_info_messages(const MatrixXd& y, std::span<const int> z,
                                        const std::vector<DynParams>& dynamics,
                                        const ObsModel& obs);

ForwardMessages forward_info_messages(const MatrixXd& y, std::span<const int> z,
                                      const std::vector<DynParams>& dynamics, const ObsModel& obs,
                                      const InitialStatePrior& init);

/// Potential over x_t: integral of p(y_t | x_t) p(x_t | x_{t-1}, k) against the
/// normalized forward message for x_{t-1}.
InfoMessage local_likelihood_params(const InfoMessage& forward_prev, const VectorXd& y_t,
                                    const DynParams& dyn_k, const ObsModel& obs);

/// local_likelihood_params for one (forward_prev, y_t) pair and many modes,
/// sharing the observation terms and the forward moments.
class LocalLikelihoods {
 public:
  LocalLikelihoods(const InfoMessage& forward_prev, const VectorXd& y_t, const ObsModel& obs);

  InfoMessage params(const DynParams& dyn_k) const;

  /// mode_marginal_likelihood(params(dynamics[k]), backward) for every k,
  /// evaluated in moment form through Cholesky factors only.
  VectorXd log_marginals(const std::vector<DynParams>& dynamics,
                         const InfoMessage& backward) const;

 private:
  VectorXd prev_mean_;
  MatrixXd prev_cov_;
  double prev_log_integral_ = 0.0;
  MatrixXd obs_lambda_;
  VectorXd obs_theta_;
  double obs_log_scale_ = 0.0;
};

/// Potential over x_1: p(y_1 | x_1) p(x_1).
InfoMessage initial_likelihood_params(const InitialStatePrior& init, const VectorXd& y_0,
                                      const ObsModel& obs);

/// log f_k = log of the integral of params_k(x) * backward(x). Equals
/// log p(y_{t:T} | y_{1:t-1}, z) when params_k comes from a normalized forward
/// message and backward is the incoming message m_{t+1,t}.
double mode_marginal_likelihood(const InfoMessage& params_k, const InfoMessage& backward);

/// T x L matrix of log N(x_t; A_k x_{t-1}, Sigma_k); row 0 is zero (x_1 has a
/// mode-independent prior). x is T x D.
MatrixXd transition_log_likelihoods(const MatrixXd& x, const std::vector<DynParams>& dynamics);

DiscreteMessages hmm_backward_messages(const MatrixXd& x, const TransitionModel& transition,
                                       const std::vector<DynParams>& dynamics);

/// Same as above from precomputed log-likelihoods.
DiscreteMessages hmm_backward_messages(const MatrixXd& log_likelihoods,
                                       const TransitionModel& transition);

}  // namespace slds

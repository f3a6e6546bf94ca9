#include "slds/gibbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

#include "slds/error.hpp"
#include "slds/linalg.hpp"

namespace slds {

namespace {

double safe_log(double v) { return std::log(std::max(v, kMinConcentration)); }

void validate_observations(const MatrixXd& y) {
  if (y.cols() == 0) throw ValidationError("observations have zero dimensions");
  if (y.rows() < 2) throw ValidationError("need at least two time steps");
  if (!y.allFinite()) throw ValidationError("observations contain NaN or Inf");
}

// Log-weights over k for z_t, excluding the likelihood term.
void add_transition_terms(const ModelState& state, int t, Eigen::Ref<VectorXd> log_w) {
  const int T = state.length();
  const int L = state.num_modes();
  const auto& tm = state.transition;
  for (int k = 0; k < L; ++k) {
    log_w[k] += t == 0 ? safe_log(tm.beta[k]) : safe_log(tm.pi(state.z[t - 1], k));
    if (t + 1 < T) log_w[k] += safe_log(tm.pi(k, state.z[t + 1]));
  }
}

// log f_k for every mode. At t = 0 the prior on x_1 does not depend on the
// mode, so every entry is the same.
VectorXd mode_log_likelihoods(const ModelState& state, const MatrixXd& y, int t,
                              const InfoMessage* forward_prev, const InfoMessage& backward_in) {
  const VectorXd y_t = y.row(t).transpose();
  if (t == 0) {
    const InfoMessage pot = initial_likelihood_params(state.init, y_t, state.obs);
    return VectorXd::Constant(state.num_modes(), mode_marginal_likelihood(pot, backward_in));
  }
  return LocalLikelihoods(*forward_prev, y_t, state.obs).log_marginals(state.dynamics, backward_in);
}

VectorXd normalized_from_log(const VectorXd& log_w) {
  const double hi = log_w.maxCoeff();
  VectorXd w = (log_w.array() - hi).exp().matrix();
  return w / w.sum();
}

}  // namespace

void SamplerConfig::validate() const {
  if (L < 1) throw ValidationError("L must be at least 1");
  if (iterations < 0) throw ValidationError("iterations must be nonnegative");
  if (select_window < 1 || select_window > iterations + 1) {
    throw ValidationError("select_window must lie in [1, iterations + 1]");
  }
  if (burn_in < 0) throw ValidationError("burn_in must be nonnegative");
  if (thin < 0) throw ValidationError("thin must be nonnegative");
  priors.validate();
}

SamplerConfig SamplerConfig::resolved(int obs_dim) const {
  SamplerConfig out = *this;
  if (out.C.size() == 0) out.C = MatrixXd::Identity(obs_dim, obs_dim);
  if (out.R.size() == 0) out.R = 1e-4 * MatrixXd::Identity(obs_dim, obs_dim);
  if (out.C.rows() != obs_dim) throw ValidationError("C row count does not match observations");
  if (!out.mniw) out.mniw = MniwPrior::defaults(static_cast<int>(out.C.cols()));
  return out;
}

void ModelState::validate() const {
  const auto T = static_cast<Eigen::Index>(z.size());
  const int L = hp.L;
  if (x.rows() != T) throw ValidationError("state sequence length differs from mode sequence");
  if (x.cols() != obs.state_dim()) throw ValidationError("state dimension differs from C");
  if (static_cast<int>(dynamics.size()) != L) throw ValidationError("dynamics list length != L");
  if (transition.beta.size() != L || transition.pi.rows() != L || transition.pi.cols() != L) {
    throw ValidationError("transition model dimensions != L");
  }
  for (int k : z) {
    if (k < 0 || k >= L) throw ValidationError("mode label outside [0, L)");
  }
  if (transition.beta.minCoeff() < 0.0 || std::abs(transition.beta.sum() - 1.0) > 1e-12) {
    throw ValidationError("beta is not a simplex vector");
  }
  for (int j = 0; j < L; ++j) {
    if (transition.pi.row(j).minCoeff() < 0.0 ||
        std::abs(transition.pi.row(j).sum() - 1.0) > 1e-12) {
      throw ValidationError("pi row " + std::to_string(j) + " is not a simplex vector");
    }
  }
  for (int k = 0; k < L; ++k) {
    if (!is_spd(dynamics[k].Sigma)) {
      throw ValidationError("Sigma of mode " + std::to_string(k) + " is not SPD");
    }
    if (!dynamics[k].A.allFinite()) {
      throw ValidationError("A of mode " + std::to_string(k) + " has non-finite entries");
    }
  }
  if (std::abs(hp.alpha - (1.0 - hp.rho) * hp.alpha_plus_kappa()) > 1e-10 * (1.0 + hp.alpha) ||
      std::abs(hp.kappa - hp.rho * hp.alpha_plus_kappa()) > 1e-10 * (1.0 + hp.kappa)) {
    throw ValidationError("alpha/kappa inconsistent with rho");
  }
}

ModelState initialize(const MatrixXd& y, const SamplerConfig& config, RngStream& rng) {
  validate_observations(y);
  config.validate();
  const SamplerConfig cfg = config.resolved(static_cast<int>(y.cols()));

  ModelState s;
  s.obs = ObsModel{cfg.C, cfg.R};
  s.obs.validate();
  s.mniw = *cfg.mniw;
  s.mniw.validate();
  if (s.mniw.dim() != s.obs.state_dim()) {
    throw ValidationError("MNIW prior dimension does not match the state dimension");
  }
  s.init = cfg.init ? *cfg.init : InitialStatePrior::from_first_observation(y, s.obs);

  s.hp = sample_hyperparameter_prior(cfg.priors, cfg.L, rng, cfg.sticky);
  s.transition = sample_transition_prior(s.hp, rng);

  const auto T = y.rows();
  s.z.resize(T);
  s.z[0] = sample_categorical({s.transition.beta.data(), static_cast<std::size_t>(cfg.L)}, rng);
  for (Eigen::Index t = 1; t < T; ++t) {
    const VectorXd row = s.transition.pi.row(s.z[t - 1]).transpose();
    s.z[t] = sample_categorical({row.data(), static_cast<std::size_t>(cfg.L)}, rng);
  }

  s.dynamics.reserve(cfg.L);
  for (int k = 0; k < cfg.L; ++k) s.dynamics.push_back(sample_dynamics_prior(s.mniw, rng));

  const MatrixXd c_pinv = s.obs.C.completeOrthogonalDecomposition().pseudoInverse();
  s.x = y * c_pinv.transpose();
  return s;
}

std::vector<int> block_sample_modes(const ModelState& state, RngStream& rng) {
  const int T = state.length();
  const int L = state.num_modes();
  const MatrixXd loglik = transition_log_likelihoods(state.x, state.dynamics);
  const DiscreteMessages msgs = hmm_backward_messages(loglik, state.transition);

  std::vector<int> z(T);
  VectorXd log_w(L);
  for (int t = 0; t < T; ++t) {
    for (int k = 0; k < L; ++k) {
      const double prior =
          t == 0 ? safe_log(state.transition.beta[k]) : safe_log(state.transition.pi(z[t - 1], k));
      log_w[k] = prior + loglik(t, k) + msgs.log_values(t, k);
    }
    z[t] = sample_categorical_log({log_w.data(), static_cast<std::size_t>(L)}, rng);
  }
  return z;
}

MatrixXd block_sample_states(const ModelState& state, const MatrixXd& y, RngStream& rng) {
  const int T = state.length();
  const int d = state.obs.state_dim();
  const BackwardMessages back = backward_info_messages(y, state.z, state.dynamics, state.obs);

  // Sigma^{-1} and Sigma^{-1} A per mode that occurs in z.
  std::vector<MatrixXd> sigma_inv(state.num_modes());
  std::vector<MatrixXd> sigma_inv_a(state.num_modes());
  for (int t = 1; t < T; ++t) {
    const int k = state.z[t];
    if (sigma_inv[k].size() == 0) {
      sigma_inv[k] = spd_inverse(state.dynamics[k].Sigma, "Sigma of mode " + std::to_string(k));
      sigma_inv_a[k] = sigma_inv[k] * state.dynamics[k].A;
    }
  }

  MatrixXd x(T, d);
  const InfoMessage prior = InfoMessage::from_moments(state.init.mean, state.init.cov);
  {
    const MatrixXd lambda = symmetrized(prior.lambda + back.filtered[0].lambda);
    const VectorXd theta = prior.theta + back.filtered[0].theta;
    x.row(0) = sample_mvn_info(theta, lambda, rng).transpose();
  }
  for (int t = 1; t < T; ++t) {
    const int k = state.z[t];
    const MatrixXd lambda = symmetrized(sigma_inv[k] + back.filtered[t].lambda);
    const VectorXd theta = sigma_inv_a[k] * x.row(t - 1).transpose() + back.filtered[t].theta;
    try {
      x.row(t) = sample_mvn_info(theta, lambda, rng).transpose();
    } catch (const LinAlgError& e) {
      throw LinAlgError("state sample at t=" + std::to_string(t) + ": " + e.what());
    }
  }
  return x;
}

VectorXd sequential_mode_weights(const ModelState& state, const MatrixXd& y, int t) {
  const int T = state.length();
  if (t < 0 || t >= T) throw ValidationError("time index out of range");
  const BackwardMessages back = backward_info_messages(y, state.z, state.dynamics, state.obs);
  std::optional<InfoMessage> forward_prev;
  if (t > 0) {
    const MatrixXd y_head = y.topRows(t);
    const std::vector<int> z_head(state.z.begin(), state.z.begin() + t);
    forward_prev = forward_info_messages(y_head, z_head, state.dynamics, state.obs, state.init)
                       .filtered.back();
  }
  VectorXd log_w = mode_log_likelihoods(state, y, t, forward_prev ? &*forward_prev : nullptr,
                                        back.incoming[t]);
  add_transition_terms(state, t, log_w);
  return normalized_from_log(log_w);
}

std::vector<int> sequential_sample_modes(const ModelState& state, const MatrixXd& y,
                                         RngStream& rng) {
  const int T = state.length();
  const int L = state.num_modes();
  const BackwardMessages back = backward_info_messages(y, state.z, state.dynamics, state.obs);

  ModelState work = state;
  InfoMessage forward_prev;
  for (int t = 0; t < T; ++t) {
    VectorXd log_w =
        mode_log_likelihoods(work, y, t, t > 0 ? &forward_prev : nullptr, back.incoming[t]);
    add_transition_terms(work, t, log_w);
    const int k = sample_categorical_log({log_w.data(), static_cast<std::size_t>(L)}, rng);
    work.z[t] = k;
    const VectorXd y_t = y.row(t).transpose();
    forward_prev = t == 0 ? initial_likelihood_params(work.init, y_t, work.obs)
                          : local_likelihood_params(forward_prev, y_t, work.dynamics[k], work.obs);
    forward_prev.log_scale -= forward_prev.log_integral();
  }
  return std::move(work.z);
}

LogJointTerms log_joint_terms(const ModelState& state, const MatrixXd& y) {
  LogJointTerms terms;
  const int T = state.length();
  const int L = state.num_modes();

  const auto r_llt = cholesky(state.obs.R, "observation noise R");
  for (int t = 0; t < T; ++t) {
    terms.observation += gaussian_log_density(y.row(t).transpose(),
                                              state.obs.C * state.x.row(t).transpose(), r_llt);
  }

  const auto init_llt = cholesky(state.init.cov, "initial state covariance");
  terms.states = gaussian_log_density(state.x.row(0).transpose(), state.init.mean, init_llt);
  const MatrixXd loglik = transition_log_likelihoods(state.x, state.dynamics);
  for (int t = 1; t < T; ++t) terms.states += loglik(t, state.z[t]);

  // p(z | beta, alpha, kappa) with each pi row integrated against its Dirichlet.
  const MatrixXi n = count_transitions(state.z, L);
  const auto& hp = state.hp;
  terms.modes = safe_log(state.transition.beta[state.z[0]]);
  for (int j = 0; j < L; ++j) {
    const int row_total = n.row(j).sum();
    if (row_total == 0) continue;
    double conc_total = 0.0;
    for (int k = 0; k < L; ++k) {
      const double c =
          std::max(hp.alpha * state.transition.beta[k] + (j == k ? hp.kappa : 0.0),
                   kMinConcentration);
      conc_total += c;
      if (n(j, k) > 0) terms.modes += std::lgamma(c + n(j, k)) - std::lgamma(c);
    }
    terms.modes += std::lgamma(conc_total) - std::lgamma(conc_total + row_total);
  }

  std::set<int> used(state.z.begin(), state.z.end());
  for (int k : used) terms.dynamics += mniw_log_density(state.dynamics[k], state.mniw);
  return terms;
}

double log_joint(const ModelState& state, const MatrixXd& y) {
  const double v = log_joint_terms(state, y).total();
  return std::isnan(v) ? -std::numeric_limits<double>::infinity() : v;
}

ModelState sweep(const ModelState& state, const MatrixXd& y, const SamplerConfig& config,
                 RngStream& rng) {
  ModelState next = state;
  const auto stage = [](const char* name, auto&& fn) {
    try {
      fn();
    } catch (const ValidationError&) {
      throw;
    } catch (const std::exception& e) {
      throw NumericalError(std::string(name) + ": " + e.what());
    }
  };
  stage("sequential mode sampling", [&] { next.z = sequential_sample_modes(next, y, rng); });
  stage("state sampling", [&] { next.x = block_sample_states(next, y, rng); });
  stage("block mode sampling", [&] { next.z = block_sample_modes(next, rng); });
  TransitionStats stats;
  stage("transition sampling", [&] {
    stats = collect_statistics(next.z, next.transition.beta, next.hp, rng);
    next.transition.beta = sample_global_beta(stats.m_bar, next.hp.gamma, next.hp.L, rng);
    next.transition.pi =
        sample_transition_rows(next.transition.beta, stats.n, next.hp.alpha, next.hp.kappa, rng);
  });
  if (config.resample_hyperparameters) {
    stage("hyperparameter sampling", [&] {
      next.hp = sample_hyperparameters(stats, next.hp, config.priors, rng, config.sticky);
    });
  }
  stage("dynamics sampling", [&] {
    next.dynamics = sample_dynamics_all(next.x, next.z, next.mniw, next.hp.L, rng);
  });
  return next;
}

ChainResult run_chain(const MatrixXd& y, const SamplerConfig& config, RngStream& rng) {
  config.validate();
  ChainResult result;
  result.config_echo = config.resolved(static_cast<int>(y.cols()));
  result.seed = rng.seed();

  ModelState state = initialize(y, config, rng);
  const int total = config.iterations;
  const int window_start = total + 1 - config.select_window;

  const auto record = [&](int iteration, const ModelState& s) {
    const double lj = log_joint(s, y);
    result.log_joint_trace.push_back(lj);
    if (iteration >= window_start) result.window.push_back({iteration, lj, s});
    if (config.thin > 0 && iteration > 0 && iteration % config.thin == 0) {
      result.thinned.push_back({iteration, lj, s});
    }
  };

  record(0, state);
  for (int it = 1; it <= total; ++it) {
    try {
      state = sweep(state, y, config, rng);
    } catch (const NumericalError& e) {
      throw NumericalError("sweep " + std::to_string(it) + ": " + e.what());
    } catch (const LinAlgError& e) {
      throw NumericalError("sweep " + std::to_string(it) + ": " + e.what());
    }
    record(it, state);
  }

  result.best = result.window.front();
  for (const auto& snap : result.window) {
    if (snap.log_joint > result.best.log_joint) result.best = snap;
  }
  return result;
}

}  // namespace slds

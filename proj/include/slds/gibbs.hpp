#pragma once

// Gibbs sampler for the sticky HDP-SLDS. One sweep runs, in order:
//   1. sequential sampling of z (x marginalized)
//   2. block sampling of x given z
//   3. block sampling of z given x
//   4. beta and pi
//   5. hyperparameters (optional)
//   6. per-mode dynamics (A, Sigma)

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "slds/distributions.hpp"
#include "slds/dynamics.hpp"
#include "slds/hdp.hpp"
#include "slds/messages.hpp"

namespace slds {

struct SamplerConfig {
  int L = 100;
  int iterations = 105;
  int select_window = 5;
  int burn_in = 0;
  int thin = 5;
  HyperPriors priors;
  bool resample_hyperparameters = true;
  bool sticky = true;
  /// Observation noise; empty means 1e-4 I.
  MatrixXd R;
  /// Observation matrix; empty means identity.
  MatrixXd C;
  std::optional<InitialStatePrior> init;
  std::optional<MniwPrior> mniw;

  void validate() const;
  /// Fills R, C, and the MNIW prior for observation dimension `obs_dim`.
  SamplerConfig resolved(int obs_dim) const;
};

struct ModelState {
  std::vector<int> z;  // length T, labels in [0, L)
  MatrixXd x;          // T x D, one state per row
  std::vector<DynParams> dynamics;
  TransitionModel transition;
  HdpParams hp;
  ObsModel obs;
  MniwPrior mniw;
  InitialStatePrior init;

  int length() const { return static_cast<int>(z.size()); }
  int num_modes() const { return hp.L; }
  /// Throws ValidationError when dimensions or simplex/SPD invariants fail.
  void validate() const;
};

struct LogJointTerms {
  double observation = 0.0;  // sum_t log N(y_t; C x_t, R)
  double states = 0.0;       // log p(x_1) + sum_t log N(x_t; A x_{t-1}, Sigma)
  double modes = 0.0;        // log p(z | beta, alpha, kappa) with pi integrated out
  double dynamics = 0.0;     // MNIW log density of the modes present in z

  double total() const { return observation + states + modes + dynamics; }
};

struct Snapshot {
  int iteration = 0;
  double log_joint = 0.0;
  ModelState state;
};

struct ChainResult {
  std::vector<Snapshot> window;   // the final select_window states
  std::vector<Snapshot> thinned;  // every thin-th sweep (thin > 0)
  std::vector<double> log_joint_trace;  // index 0 is the initial state
  Snapshot best;
  SamplerConfig config_echo;
  std::uint64_t seed = 0;
};

/// y is T x D_y with T >= 2 and finite entries.
ModelState initialize(const MatrixXd& y, const SamplerConfig& config, RngStream& rng);

std::vector<int> block_sample_modes(const ModelState& state, RngStream& rng);

MatrixXd block_sample_states(const ModelState& state, const MatrixXd& y, RngStream& rng);

/// Normalized p(z_t = k | z_{-t}, y, pi, theta) with x marginalized, computed
/// from the forward message at t - 1 and the backward message into t.
VectorXd sequential_mode_weights(const ModelState& state, const MatrixXd& y, int t);

std::vector<int> sequential_sample_modes(const ModelState& state, const MatrixXd& y,
                                         RngStream& rng);

LogJointTerms log_joint_terms(const ModelState& state, const MatrixXd& y);
double log_joint(const ModelState& state, const MatrixXd& y);

ModelState sweep(const ModelState& state, const MatrixXd& y, const SamplerConfig& config,
                 RngStream& rng);

ChainResult run_chain(const MatrixXd& y, const SamplerConfig& config, RngStream& rng);

}  // namespace slds

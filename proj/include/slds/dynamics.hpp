#pragma once

// Conjugate matrix-normal inverse-Wishart updates for the per-mode dynamics
// x_t = A x_{t-1} + e_t, e_t ~ N(0, Sigma).

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "slds/distributions.hpp"

namespace slds {

/// Prior A | Sigma ~ MN(M, Sigma, K^{-1}), Sigma ~ IW(n0, S0).
struct MniwPrior {
  MatrixXd M;
  MatrixXd K;
  double n0 = 0.0;
  MatrixXd S0;

  int dim() const { return static_cast<int>(M.rows()); }
  void validate() const;

  /// M = I, K = 1e-3 I, n0 = D + 2, S0 = 1e-5 I.
  static MniwPrior defaults(int dim);
};

struct SufficientStats {
  MatrixXd S_xbarxbar;  // Xbar Xbar^T + K
  MatrixXd S_xxbar;     // X Xbar^T + M K
  MatrixXd S_xx;        // X X^T + M K M^T
  int count = 0;        // number of (x_{t-1}, x_t) pairs

  /// S_xx - S_xxbar S_xbarxbar^{-1} S_xxbar^T
  MatrixXd residual() const;
  /// S_xxbar S_xbarxbar^{-1}: posterior mean of A.
  MatrixXd posterior_mean() const;
};

struct DynParams {
  MatrixXd A;
  MatrixXd Sigma;
};

/// Statistics for mode k over the pairs (x_{t-1}, x_t), t >= 1, with z_t == k.
/// `x` is T x D with one time step per row.
SufficientStats accumulate_statistics(const MatrixXd& x, std::span<const int> z, int k,
                                      const MniwPrior& prior);

/// Sigma ~ IW(N + n0, residual + S0).
MatrixXd sample_sigma(const SufficientStats& stats, const MniwPrior& prior, RngStream& rng);

/// A ~ MN(S_xxbar S_xbarxbar^{-1}, Sigma, S_xbarxbar^{-1}).
MatrixXd sample_A(const SufficientStats& stats, const MatrixXd& sigma, RngStream& rng);

/// Draw from the MNIW prior.
DynParams sample_dynamics_prior(const MniwPrior& prior, RngStream& rng);

/// Sigma then A for every mode 0..L-1. Unvisited modes get prior draws.
std::vector<DynParams> sample_dynamics_all(const MatrixXd& x, std::span<const int> z,
                                           const MniwPrior& prior, int L, RngStream& rng);

/// log MN(A; M, Sigma, K^{-1}) + log IW(Sigma; n0, S0)
double mniw_log_density(const DynParams& dyn, const MniwPrior& prior);

}  // namespace slds

#pragma once

// Sticky HDP transition machinery under the weak-limit (L-component)
// approximation: transition counts, restaurant-process auxiliaries, and the
// Dirichlet posteriors for the global weights beta and the rows of pi.

#include <span>

#include <Eigen/Dense>

#include "slds/distributions.hpp"

namespace slds {

using MatrixXi = Eigen::MatrixXi;
using VectorXi = Eigen::VectorXi;

/// Concentrations of the sticky HDP. Construct through `from_concentration`
/// so that alpha = (1 - rho)(alpha + kappa) and kappa = rho (alpha + kappa).
struct HdpParams {
  double gamma = 1.0;
  double alpha = 1.0;
  double kappa = 0.0;
  double rho = 0.0;
  int L = 1;

  double alpha_plus_kappa() const { return alpha + kappa; }

  static HdpParams from_concentration(double gamma, double alpha_plus_kappa, double rho, int L);
};

/// Hyperprior parameters: (alpha + kappa) ~ Gamma(a, b), rho ~ Beta(c, d),
/// gamma ~ Gamma(e, f). Gamma priors use the rate parameterization.
struct HyperPriors {
  double a = 10.0;
  double b = 1.0;
  double c = 20.0;
  double d = 2.0;
  double e = 10.0;
  double f = 1.0;

  void validate() const;
};

struct TransitionModel {
  VectorXd beta;  // global weights, length L
  MatrixXd pi;    // L x L, row j is the transition distribution out of mode j

  int num_modes() const { return static_cast<int>(beta.size()); }
};

struct TransitionStats {
  MatrixXi n;      // transition counts n_jk
  MatrixXi m;      // table counts m_jk
  VectorXi w;      // self-transition override counts w_j
  MatrixXi m_bar;  // informative table counts
};

/// Concentration floor used where alpha * beta_k underflows.
inline constexpr double kMinConcentration = 1e-300;

VectorXd init_beta(const HdpParams& hp, RngStream& rng);

MatrixXi count_transitions(std::span<const int> z, int L);

/// Table counts by direct restaurant simulation: customer i of n_jk opens a
/// new table with probability c / (i - 1 + c), c = alpha beta_k + kappa [j == k].
MatrixXi sample_table_counts(const MatrixXi& n, const VectorXd& beta, double alpha, double kappa,
                             RngStream& rng);

struct OverrideDraw {
  VectorXi w;
  MatrixXi m_bar;
};

/// w_j ~ Binomial(m_jj, rho / (rho + beta_j (1 - rho))); m_bar subtracts w
/// from the diagonal of m.
OverrideDraw sample_overrides(const MatrixXi& m, double rho, const VectorXd& beta, RngStream& rng);

/// beta ~ Dir(gamma / L + column sums of m_bar).
VectorXd sample_global_beta(const MatrixXi& m_bar, double gamma, int L, RngStream& rng);

/// pi_j ~ Dir(alpha beta + n_j. + kappa e_j). Rows of unvisited modes are
/// drawn from the prior.
MatrixXd sample_transition_rows(const VectorXd& beta, const MatrixXi& n, double alpha,
                                double kappa, RngStream& rng);

/// Draws TransitionModel from the prior: beta from init_beta, then each pi row.
TransitionModel sample_transition_prior(const HdpParams& hp, RngStream& rng);

/// Full auxiliary-variable pass given a mode sequence: counts -> tables ->
/// overrides. `beta` is the current global weight vector.
TransitionStats collect_statistics(std::span<const int> z, const VectorXd& beta,
                                   const HdpParams& hp, RngStream& rng);

/// Resamples (gamma, alpha + kappa, rho) given the auxiliary counts.
///
///  - alpha + kappa: per visited restaurant j with n_j customers draw
///    r_j ~ Beta(alpha + kappa + 1, n_j) and s_j ~ Bernoulli(n_j / (n_j + alpha + kappa)),
///    then alpha + kappa ~ Gamma(a + m.. - sum s, b - sum log r).
///  - gamma: with K occupied dishes (column sums of m_bar > 0) and M = sum m_bar,
///    draw eta ~ Beta(gamma + 1, M) and zeta ~ Bernoulli(M / (M + gamma)),
///    then gamma ~ Gamma(e + K - zeta, f - log eta).
///  - rho ~ Beta(c + sum w, d + m.. - sum w).
///
/// With `sticky == false` rho and kappa stay at zero. With no data each
/// update reduces to its prior.
HdpParams sample_hyperparameters(const TransitionStats& stats, const HdpParams& hp,
                                 const HyperPriors& priors, RngStream& rng, bool sticky = true);

/// Draws the initial hyperparameters from their priors.
HdpParams sample_hyperparameter_prior(const HyperPriors& priors, int L, RngStream& rng,
                                      bool sticky = true);

/// (alpha beta_j + kappa) / (alpha + kappa): prior mean of pi_jj given beta.
VectorXd expected_self_transition(const HdpParams& hp, const VectorXd& beta);

}  // namespace slds

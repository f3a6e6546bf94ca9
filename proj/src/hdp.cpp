#include "slds/hdp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "slds/error.hpp"

namespace slds {

namespace {

void validate_counts(const MatrixXi& counts, const char* what) {
  if (counts.rows() != counts.cols()) {
    throw ValidationError(std::string(what) + " must be square");
  }
  if (counts.size() > 0 && counts.minCoeff() < 0) {
    throw ValidationError(std::string(what) + " must be nonnegative");
  }
}

void validate_simplex(const VectorXd& beta, Eigen::Index L) {
  if (beta.size() != L) throw ValidationError("beta length does not match L");
  if (beta.size() > 0 && (beta.minCoeff() < 0.0 || std::abs(beta.sum() - 1.0) > 1e-9)) {
    throw ValidationError("beta is not a simplex vector");
  }
}

}  // namespace

HdpParams HdpParams::from_concentration(double gamma, double alpha_plus_kappa, double rho, int L) {
  if (!(gamma > 0.0)) throw ParameterDomainError("gamma must be positive");
  if (!(alpha_plus_kappa > 0.0)) throw ParameterDomainError("alpha + kappa must be positive");
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterDomainError("rho must lie in [0, 1]");
  if (L < 1) throw ValidationError("L must be at least 1");
  HdpParams hp;
  hp.gamma = gamma;
  hp.rho = rho;
  hp.alpha = (1.0 - rho) * alpha_plus_kappa;
  hp.kappa = rho * alpha_plus_kappa;
  hp.L = L;
  return hp;
}

void HyperPriors::validate() const {
  for (double v : {a, b, c, d, e, f}) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw ValidationError("hyperprior parameters (a..f) must be positive");
    }
  }
}

VectorXd init_beta(const HdpParams& hp, RngStream& rng) {
  if (hp.L < 1) throw ValidationError("L must be at least 1");
  if (!(hp.gamma > 0.0)) throw ParameterDomainError("gamma must be positive");
  return sample_dirichlet(VectorXd::Constant(hp.L, hp.gamma / hp.L), rng);
}

MatrixXi count_transitions(std::span<const int> z, int L) {
  if (L < 1) throw ValidationError("L must be at least 1");
  MatrixXi n = MatrixXi::Zero(L, L);
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (z[t] < 0 || z[t] >= L) {
      throw ValidationError("mode label " + std::to_string(z[t]) + " at t=" + std::to_string(t) +
                            " outside [0, L)");
    }
    if (t > 0) ++n(z[t - 1], z[t]);
  }
  return n;
}

MatrixXi sample_table_counts(const MatrixXi& n, const VectorXd& beta, double alpha, double kappa,
                             RngStream& rng) {
  validate_counts(n, "transition counts");
  validate_simplex(beta, n.rows());
  if (!(alpha >= 0.0 && kappa >= 0.0 && alpha + kappa > 0.0)) {
    throw ParameterDomainError("need alpha, kappa >= 0 with alpha + kappa > 0");
  }
  const auto L = n.rows();
  MatrixXi m = MatrixXi::Zero(L, L);
  for (Eigen::Index j = 0; j < L; ++j) {
    for (Eigen::Index k = 0; k < L; ++k) {
      const int customers = n(j, k);
      if (customers == 0) continue;
      const double c =
          std::max(alpha * beta[k] + (j == k ? kappa : 0.0), kMinConcentration);
      int tables = 0;
      for (int i = 0; i < customers; ++i) {
        if (rng.uniform() * (i + c) < c) ++tables;
      }
      m(j, k) = tables;
    }
  }
  return m;
}

OverrideDraw sample_overrides(const MatrixXi& m, double rho, const VectorXd& beta, RngStream& rng) {
  validate_counts(m, "table counts");
  validate_simplex(beta, m.rows());
  if (!(rho >= 0.0 && rho <= 1.0)) throw ParameterDomainError("rho must lie in [0, 1]");
  const auto L = m.rows();
  OverrideDraw out{VectorXi::Zero(L), m};
  if (rho == 0.0) return out;
  for (Eigen::Index j = 0; j < L; ++j) {
    const double p = rho / (rho + beta[j] * (1.0 - rho));
    out.w[j] = sample_binomial(m(j, j), p, rng);
    out.m_bar(j, j) -= out.w[j];
  }
  return out;
}

VectorXd sample_global_beta(const MatrixXi& m_bar, double gamma, int L, RngStream& rng) {
  validate_counts(m_bar, "informative table counts");
  if (m_bar.rows() != L) throw ValidationError("m_bar dimension does not match L");
  if (!(gamma > 0.0)) throw ParameterDomainError("gamma must be positive");
  const VectorXd conc =
      (m_bar.colwise().sum().cast<double>().transpose().array() + gamma / L).matrix();
  return sample_dirichlet(conc, rng);
}

MatrixXd sample_transition_rows(const VectorXd& beta, const MatrixXi& n, double alpha,
                                double kappa, RngStream& rng) {
  validate_counts(n, "transition counts");
  validate_simplex(beta, n.rows());
  if (!(alpha >= 0.0 && kappa >= 0.0 && alpha + kappa > 0.0)) {
    throw ParameterDomainError("need alpha, kappa >= 0 with alpha + kappa > 0");
  }
  const auto L = n.rows();
  MatrixXd pi(L, L);
  VectorXd conc(L);
  for (Eigen::Index j = 0; j < L; ++j) {
    for (Eigen::Index k = 0; k < L; ++k) {
      conc[k] = std::max(alpha * beta[k] + n(j, k) + (j == k ? kappa : 0.0), kMinConcentration);
    }
    pi.row(j) = sample_dirichlet(conc, rng).transpose();
  }
  return pi;
}

TransitionModel sample_transition_prior(const HdpParams& hp, RngStream& rng) {
  TransitionModel tm;
  tm.beta = init_beta(hp, rng);
  tm.pi = sample_transition_rows(tm.beta, MatrixXi::Zero(hp.L, hp.L), hp.alpha, hp.kappa, rng);
  return tm;
}

TransitionStats collect_statistics(std::span<const int> z, const VectorXd& beta,
                                   const HdpParams& hp, RngStream& rng) {
  TransitionStats stats;
  stats.n = count_transitions(z, hp.L);
  stats.m = sample_table_counts(stats.n, beta, hp.alpha, hp.kappa, rng);
  auto overrides = sample_overrides(stats.m, hp.rho, beta, rng);
  stats.w = std::move(overrides.w);
  stats.m_bar = std::move(overrides.m_bar);
  return stats;
}

HdpParams sample_hyperparameters(const TransitionStats& stats, const HdpParams& hp,
                                 const HyperPriors& priors, RngStream& rng, bool sticky) {
  priors.validate();
  validate_counts(stats.n, "transition counts");
  validate_counts(stats.m, "table counts");
  validate_counts(stats.m_bar, "informative table counts");
  const auto L = stats.n.rows();
  if (stats.m.rows() != L || stats.m_bar.rows() != L || stats.w.size() != L || hp.L != L) {
    throw ValidationError("transition statistics dimensions disagree");
  }

  // alpha + kappa
  const double ak = hp.alpha_plus_kappa();
  double shape = priors.a;
  double rate = priors.b;
  const long total_tables = stats.m.cast<long>().sum();
  shape += static_cast<double>(total_tables);
  for (Eigen::Index j = 0; j < L; ++j) {
    const int customers = stats.n.row(j).sum();
    if (customers == 0) continue;
    rate -= std::log(sample_beta(ak + 1.0, customers, rng));
    if (rng.uniform() * (customers + ak) < customers) shape -= 1.0;
  }
  const double new_ak = sample_gamma(shape, rate, rng);

  // gamma
  const VectorXi dish_counts = stats.m_bar.colwise().sum().transpose();
  const double informative = dish_counts.cast<double>().sum();
  const double occupied = static_cast<double>((dish_counts.array() > 0).count());
  double g_shape = priors.e + occupied;
  double g_rate = priors.f;
  if (informative > 0.0) {
    g_rate -= std::log(sample_beta(hp.gamma + 1.0, informative, rng));
    if (rng.uniform() * (informative + hp.gamma) < informative) g_shape -= 1.0;
  }
  const double new_gamma = sample_gamma(g_shape, g_rate, rng);

  // rho
  double new_rho = 0.0;
  if (sticky) {
    const double overrides = stats.w.cast<double>().sum();
    new_rho = sample_beta(priors.c + overrides,
                          priors.d + static_cast<double>(total_tables) - overrides, rng);
  }
  return HdpParams::from_concentration(new_gamma, new_ak, new_rho, hp.L);
}

HdpParams sample_hyperparameter_prior(const HyperPriors& priors, int L, RngStream& rng,
                                      bool sticky) {
  priors.validate();
  const double ak = sample_gamma(priors.a, priors.b, rng);
  const double rho = sticky ? sample_beta(priors.c, priors.d, rng) : 0.0;
  const double gamma = sample_gamma(priors.e, priors.f, rng);
  return HdpParams::from_concentration(gamma, ak, rho, L);
}

VectorXd expected_self_transition(const HdpParams& hp, const VectorXd& beta) {
  const double ak = hp.alpha_plus_kappa();
  return ((hp.alpha * beta.array() + hp.kappa) / ak).matrix();
}

}  // namespace slds

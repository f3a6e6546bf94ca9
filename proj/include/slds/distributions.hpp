#pragma once

// Sampling primitives for every distribution the sampler draws from. All
// functions are pure given (parameters, rng state): replaying a seed replays
// the draws bit-exactly.

#include <cstdint>
#include <random>
#include <span>

#include <Eigen/Dense>

namespace slds {

using Eigen::MatrixXd;
using Eigen::VectorXd;

/// Seeded pseudo-random stream. One stream per chain; never share a stream
/// across threads.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::mt19937_64& engine() { return engine_; }

  double uniform();         // (0, 1), never exactly 0 or 1
  double standard_normal();

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

double sample_gamma(double shape, double rate, RngStream& rng);

/// log of a Gamma(shape, 1) draw. Stays finite for shapes far below 1, where
/// the draw itself underflows to zero.
double sample_log_gamma(double shape, RngStream& rng);

double sample_beta(double a, double b, RngStream& rng);

int sample_binomial(int trials, double p, RngStream& rng);

/// Dirichlet draw; normalization is done in log space so tiny
/// concentrations produce exact zeros rather than NaN.
VectorXd sample_dirichlet(const VectorXd& concentration, RngStream& rng);

/// Index draw proportional to nonnegative (unnormalized) weights.
int sample_categorical(std::span<const double> weights, RngStream& rng);

/// Index draw proportional to exp(log_weights), with max subtraction.
/// Entries may be -inf; at least one must be finite.
int sample_categorical_log(std::span<const double> log_weights, RngStream& rng);

VectorXd sample_mvn(const VectorXd& mean, const MatrixXd& cov, RngStream& rng);

/// Draw from the Gaussian with precision `lambda` and mean lambda^{-1} theta.
VectorXd sample_mvn_info(const VectorXd& theta, const MatrixXd& lambda, RngStream& rng);

/// Inverse-Wishart IW(dof, scale) with E[X] = scale / (dof - D - 1).
MatrixXd sample_inverse_wishart(double dof, const MatrixXd& scale, RngStream& rng);

/// Matrix normal MN(mean, row_cov, col_cov): vec(X) ~ N(vec(mean), col_cov (x) row_cov).
MatrixXd sample_matrix_normal(const MatrixXd& mean, const MatrixXd& row_cov,
                              const MatrixXd& col_cov, RngStream& rng);

}  // namespace slds

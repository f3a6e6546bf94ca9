#pragma once

#include <string_view>

#include <Eigen/Dense>

namespace slds {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd symmetrized(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

/// Lower Cholesky factor; throws LinAlgError naming `what` on failure.
Eigen::LLT<MatrixXd> cholesky(const MatrixXd& m, std::string_view what);

/// Inverse of an SPD matrix via Cholesky, re-symmetrized.
MatrixXd spd_inverse(const MatrixXd& m, std::string_view what);

/// log|m| for SPD m.
double spd_log_det(const MatrixXd& m, std::string_view what);

/// Adds 1e-10 I when the smallest eigenvalue of the (symmetrized) matrix is
/// below 1e-12. Applied before inverting precision sums.
MatrixXd regularized(const MatrixXd& m);

/// True when m is symmetric within `tol` (relative to its largest entry) and
/// Cholesky succeeds.
bool is_spd(const MatrixXd& m, double tol = 1e-10);

/// log N(x; mean, cov) using a precomputed Cholesky factor of cov.
double gaussian_log_density(const VectorXd& x, const VectorXd& mean,
                            const Eigen::LLT<MatrixXd>& cov_chol);

}  // namespace slds

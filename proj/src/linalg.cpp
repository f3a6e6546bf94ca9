#include "slds/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "slds/error.hpp"

namespace slds {

Eigen::LLT<MatrixXd> cholesky(const MatrixXd& m, std::string_view what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw LinAlgError(std::string(what) + ": expected a non-empty square matrix");
  }
  if (!m.allFinite()) {
    throw LinAlgError(std::string(what) + ": non-finite entries");
  }
  Eigen::LLT<MatrixXd> llt(symmetrized(m));
  if (llt.info() != Eigen::Success) {
    throw LinAlgError(std::string(what) + ": matrix is not positive definite");
  }
  return llt;
}

MatrixXd spd_inverse(const MatrixXd& m, std::string_view what) {
  const auto llt = cholesky(m, what);
  return symmetrized(llt.solve(MatrixXd::Identity(m.rows(), m.cols())));
}

double spd_log_det(const MatrixXd& m, std::string_view what) {
  const auto llt = cholesky(m, what);
  const MatrixXd& l = llt.matrixLLT();
  return 2.0 * l.diagonal().array().log().sum();
}

MatrixXd regularized(const MatrixXd& m) {
  MatrixXd s = symmetrized(m);
  // det / trace^(n-1) is a lower bound on the smallest eigenvalue of an SPD
  // matrix, which settles most calls without an eigendecomposition.
  Eigen::LLT<MatrixXd> llt(s);
  if (llt.info() == Eigen::Success) {
    const double trace = s.trace();
    const auto pivots = llt.matrixLLT().diagonal().array().square().eval();
    double bound = pivots.prod();
    for (Eigen::Index i = 1; i < s.rows(); ++i) bound /= trace;
    if (bound >= 1e-12) return s;
  }
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(s, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < 1e-12) {
    s.diagonal().array() += 1e-10;
  }
  return s;
}

bool is_spd(const MatrixXd& m, double tol) {
  if (m.rows() != m.cols() || m.rows() == 0 || !m.allFinite()) return false;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > tol * scale) return false;
  Eigen::LLT<MatrixXd> llt(symmetrized(m));
  return llt.info() == Eigen::Success;
}

double gaussian_log_density(const VectorXd& x, const VectorXd& mean,
                            const Eigen::LLT<MatrixXd>& cov_chol) {
  const VectorXd white = cov_chol.matrixL().solve(x - mean);
  const double log_det = 2.0 * cov_chol.matrixLLT().diagonal().array().log().sum();
  const auto d = static_cast<double>(x.size());
  return -0.5 * (d * std::log(2.0 * std::numbers::pi) + log_det + white.squaredNorm());
}

}  // namespace slds

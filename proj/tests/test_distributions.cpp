#include <doctest.h>

#include <boost/math/distributions/beta.hpp>
#include <boost/math/distributions/exponential.hpp>
#include <boost/math/distributions/inverse_gamma.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include "slds/distributions.hpp"
#include "slds/error.hpp"
#include "slds/linalg.hpp"
#include "test_support.hpp"

using namespace slds;
using slds::testing::ks_critical_1pct;
using slds::testing::ks_distance;
using slds::testing::relative_error;

namespace {

constexpr int kDraws = 100000;

MatrixXd empirical_cov(const std::vector<VectorXd>& draws, const VectorXd& mean) {
  MatrixXd cov = MatrixXd::Zero(mean.size(), mean.size());
  for (const auto& d : draws) cov += (d - mean) * (d - mean).transpose();
  return cov / static_cast<double>(draws.size());
}

VectorXd empirical_mean(const std::vector<VectorXd>& draws) {
  VectorXd m = VectorXd::Zero(draws.front().size());
  for (const auto& d : draws) m += d;
  return m / static_cast<double>(draws.size());
}

}  // namespace

TEST_CASE("gamma draws match the analytic mean and exponential special case") {
  RngStream rng(11);
  std::vector<double> draws(kDraws);
  for (auto& d : draws) d = sample_gamma(10.0, 1.0, rng);
  CHECK(relative_error(slds::testing::mean(draws), 10.0) < 0.02);
  CHECK(*std::min_element(draws.begin(), draws.end()) > 0.0);

  const double lambda = 2.5;
  for (auto& d : draws) d = sample_gamma(1.0, lambda, rng);
  boost::math::exponential_distribution<> expo(lambda);
  CHECK(ks_distance(draws, [&](double x) { return boost::math::cdf(expo, x); }) <
        ks_critical_1pct(draws.size()));

  CHECK_THROWS_AS(sample_gamma(0.0, 1.0, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_gamma(1.0, -1.0, rng), ParameterDomainError);
}

TEST_CASE("tiny gamma shapes stay finite in log space") {
  RngStream rng(12);
  for (int i = 0; i < 1000; ++i) {
    const double lg = sample_log_gamma(1e-8, rng);
    CHECK(!std::isnan(lg));
    CHECK(lg < std::numeric_limits<double>::infinity());
  }
}

TEST_CASE("beta draws") {
  RngStream rng(13);
  std::vector<double> draws(kDraws);
  for (auto& d : draws) d = sample_beta(20.0, 2.0, rng);
  CHECK(relative_error(slds::testing::mean(draws), 20.0 / 22.0) < 0.02);
  for (double d : draws) {
    CHECK(d > 0.0);
    CHECK(d < 1.0);
  }
  for (auto& d : draws) d = sample_beta(1.0, 1.0, rng);
  CHECK(ks_distance(draws, [](double x) { return x; }) < ks_critical_1pct(draws.size()));

  for (auto& d : draws) d = sample_beta(0.5, 3.0, rng);
  boost::math::beta_distribution<> ref(0.5, 3.0);
  CHECK(ks_distance(draws, [&](double x) { return boost::math::cdf(ref, x); }) <
        ks_critical_1pct(draws.size()));

  CHECK_THROWS_AS(sample_beta(0.0, 1.0, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_beta(1.0, 0.0, rng), ParameterDomainError);
}

TEST_CASE("dirichlet draws") {
  RngStream rng(14);
  SUBCASE("concentration limit") {
    const VectorXd d = sample_dirichlet(VectorXd::Constant(2, 1e6), rng);
    CHECK(std::abs(d[0] - 0.5) < 1e-2);
    CHECK(std::abs(d[1] - 0.5) < 1e-2);
  }
  SUBCASE("degenerate simplex") {
    const VectorXd d = sample_dirichlet(VectorXd::Constant(1, 0.3), rng);
    CHECK(d.size() == 1);
    CHECK(d[0] == 1.0);
  }
  SUBCASE("mean and simplex") {
    VectorXd conc(3);
    conc << 1.0, 2.0, 3.0;
    VectorXd acc = VectorXd::Zero(3);
    for (int i = 0; i < kDraws; ++i) {
      const VectorXd d = sample_dirichlet(conc, rng);
      REQUIRE(std::abs(d.sum() - 1.0) < 1e-12);
      REQUIRE(d.minCoeff() >= 0.0);
      acc += d;
    }
    acc /= kDraws;
    for (int k = 0; k < 3; ++k) CHECK(relative_error(acc[k], conc[k] / 6.0) < 0.02);
  }
  SUBCASE("tiny concentrations give exact zeros, not NaN") {
    const VectorXd d = sample_dirichlet(VectorXd::Constant(100, 1e-200), rng);
    CHECK(d.allFinite());
    CHECK(std::abs(d.sum() - 1.0) < 1e-12);
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(sample_dirichlet(VectorXd(), rng), ParameterDomainError);
    CHECK_THROWS_AS(sample_dirichlet(VectorXd::Zero(3), rng), ParameterDomainError);
  }
}

TEST_CASE("categorical draws") {
  RngStream rng(15);
  const std::vector<double> point{1.0, 0.0, 0.0};
  for (int i = 0; i < 1000; ++i) CHECK(sample_categorical(point, rng) == 0);

  const auto frequency_of_zero = [&](std::vector<double> w) {
    int zeros = 0;
    for (int i = 0; i < kDraws; ++i) zeros += sample_categorical(w, rng) == 0;
    return static_cast<double>(zeros) / kDraws;
  };
  CHECK(std::abs(frequency_of_zero({2.0, 2.0}) - 0.5) < 0.01);
  CHECK(std::abs(frequency_of_zero({1.0, 1.0}) - frequency_of_zero({7.0, 7.0})) < 0.01);

  const std::vector<double> zeros{0.0, 0.0};
  const std::vector<double> negative{1.0, -1.0};
  CHECK_THROWS_AS(sample_categorical(zeros, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_categorical(negative, rng), ParameterDomainError);

  constexpr double ninf = -std::numeric_limits<double>::infinity();
  const std::vector<double> logs{ninf, -1000.0, ninf};
  for (int i = 0; i < 100; ++i) CHECK(sample_categorical_log(logs, rng) == 1);
  const std::vector<double> all_ninf{ninf, ninf};
  CHECK_THROWS_AS(sample_categorical_log(all_ninf, rng), NumericalError);
}

TEST_CASE("multivariate normal draws") {
  RngStream rng(16);
  VectorXd mean(2);
  mean << 1.5, -2.0;
  const VectorXd near = sample_mvn(mean, 1e-18 * MatrixXd::Identity(2, 2), rng);
  CHECK((near - mean).norm() < 1e-8);

  std::vector<VectorXd> draws(kDraws);
  for (auto& d : draws) d = sample_mvn(VectorXd::Zero(2), MatrixXd::Identity(2, 2), rng);
  const MatrixXd cov = empirical_cov(draws, VectorXd::Zero(2));
  CHECK((cov - MatrixXd::Identity(2, 2)).norm() / std::sqrt(2.0) < 0.03);

  MatrixXd sigma(2, 2);
  sigma << 2.0, 0.6, 0.6, 1.0;
  for (auto& d : draws) d = sample_mvn(mean, sigma, rng);
  const VectorXd m = empirical_mean(draws);
  CHECK((m - mean).norm() < 0.02);
  CHECK((empirical_cov(draws, m) - sigma).norm() / sigma.norm() < 0.03);

  MatrixXd bad(2, 2);
  bad << 1.0, 2.0, 2.0, 1.0;
  try {
    sample_mvn(mean, bad, rng);
    FAIL("expected LinAlgError");
  } catch (const LinAlgError& e) {
    CHECK(std::string(e.what()).find("covariance") != std::string::npos);
  }
}

TEST_CASE("information-form normal draws") {
  RngStream rng(17);
  std::vector<VectorXd> draws(kDraws);
  for (auto& d : draws) d = sample_mvn_info(VectorXd::Zero(2), MatrixXd::Identity(2, 2), rng);
  CHECK(empirical_mean(draws).norm() < 0.02);
  CHECK((empirical_cov(draws, VectorXd::Zero(2)) - MatrixXd::Identity(2, 2)).norm() /
            std::sqrt(2.0) <
        0.03);

  MatrixXd lambda(2, 2);
  lambda << 4.0, 1.0, 1.0, 2.0;
  VectorXd theta(2);
  theta << 3.0, -1.0;
  const MatrixXd cov = lambda.inverse();
  const VectorXd mu = cov * theta;
  for (auto& d : draws) d = sample_mvn_info(theta, lambda, rng);
  const VectorXd m_info = empirical_mean(draws);
  const MatrixXd c_info = empirical_cov(draws, m_info);
  for (auto& d : draws) d = sample_mvn(mu, cov, rng);
  const VectorXd m_cov = empirical_mean(draws);
  CHECK((m_info - mu).norm() / mu.norm() < 0.03);
  CHECK((m_cov - mu).norm() / mu.norm() < 0.03);
  CHECK((c_info - cov).norm() / cov.norm() < 0.03);

  // (c theta, c lambda) keeps the mean.
  for (auto& d : draws) d = sample_mvn_info(5.0 * theta, 5.0 * lambda, rng);
  CHECK((empirical_mean(draws) - mu).norm() / mu.norm() < 0.03);

  CHECK_THROWS_AS(sample_mvn_info(theta, -lambda, rng), LinAlgError);
}

TEST_CASE("inverse-Wishart draws") {
  RngStream rng(18);
  std::vector<double> draws(kDraws);
  for (auto& d : draws) d = sample_inverse_wishart(5.0, MatrixXd::Identity(1, 1), rng)(0, 0);
  CHECK(relative_error(slds::testing::mean(draws), 1.0 / 3.0) < 0.03);

  // D = 1: IW(nu, s) is inverse-gamma(nu / 2, s / 2).
  const double scale = 0.7;
  for (auto& d : draws) d = sample_inverse_wishart(5.0, MatrixXd::Constant(1, 1, scale), rng)(0, 0);
  boost::math::inverse_gamma_distribution<> ig(2.5, scale / 2.0);
  CHECK(ks_distance(draws, [&](double x) { return boost::math::cdf(ig, x); }) <
        ks_critical_1pct(draws.size()));

  MatrixXd s(3, 3);
  s << 2.0, 0.3, 0.1, 0.3, 1.0, 0.2, 0.1, 0.2, 0.5;
  MatrixXd acc = MatrixXd::Zero(3, 3);
  constexpr int n_iw = 20000;
  for (int i = 0; i < n_iw; ++i) {
    const MatrixXd w = sample_inverse_wishart(10.0, s, rng);
    REQUIRE(is_spd(w));
    REQUIRE((w - w.transpose()).norm() == 0.0);
    acc += w;
  }
  acc /= n_iw;
  for (int k = 0; k < 3; ++k) CHECK(relative_error(acc(k, k), s(k, k) / 6.0) < 0.03);

  CHECK_THROWS_AS(sample_inverse_wishart(1.5, s, rng), ParameterDomainError);
  CHECK_THROWS_AS(sample_inverse_wishart(6.0, -s, rng), ParameterDomainError);
}

TEST_CASE("matrix-normal draws") {
  RngStream rng(19);
  MatrixXd mean(2, 3);
  mean << 1.0, -1.0, 0.5, 2.0, 0.0, -0.5;
  MatrixXd u(2, 2);
  u << 1.0, 0.4, 0.4, 0.5;
  MatrixXd v(3, 3);
  v << 2.0, 0.3, 0.0, 0.3, 1.0, -0.2, 0.0, -0.2, 0.7;

  std::vector<VectorXd> vecs(kDraws);
  for (auto& d : vecs) {
    const MatrixXd x = sample_matrix_normal(mean, u, v, rng);
    d = Eigen::Map<const VectorXd>(x.data(), x.size());
  }
  const VectorXd vec_mean = Eigen::Map<const VectorXd>(mean.data(), mean.size());
  const VectorXd m = empirical_mean(vecs);
  CHECK((m - vec_mean).norm() / vec_mean.norm() < 0.03);

  // vec(X) covariance is V (x) U.
  MatrixXd kron(6, 6);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) kron.block(2 * i, 2 * j, 2, 2) = v(i, j) * u;
  }
  CHECK((empirical_cov(vecs, m) - kron).norm() / kron.norm() < 0.05);

  // Identity scales: i.i.d. standard normal entries.
  std::vector<VectorXd> iid(kDraws);
  for (auto& d : iid) {
    const MatrixXd x =
        sample_matrix_normal(MatrixXd::Zero(2, 2), MatrixXd::Identity(2, 2),
                             MatrixXd::Identity(2, 2), rng);
    d = Eigen::Map<const VectorXd>(x.data(), 4);
  }
  CHECK((empirical_cov(iid, VectorXd::Zero(4)) - MatrixXd::Identity(4, 4)).norm() / 2.0 < 0.03);

  CHECK_THROWS_AS(sample_matrix_normal(mean, -u, v, rng), LinAlgError);
}

TEST_CASE("replaying a seed replays every draw") {
  const auto run = [](std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<double> out;
    out.push_back(sample_gamma(2.0, 3.0, rng));
    out.push_back(sample_beta(2.0, 3.0, rng));
    const VectorXd d = sample_dirichlet(VectorXd::Constant(4, 0.5), rng);
    out.insert(out.end(), d.data(), d.data() + d.size());
    const MatrixXd w = sample_inverse_wishart(4.0, MatrixXd::Identity(2, 2), rng);
    out.insert(out.end(), w.data(), w.data() + w.size());
    out.push_back(sample_mvn(VectorXd::Zero(2), MatrixXd::Identity(2, 2), rng)[1]);
    return out;
  };
  CHECK(run(99) == run(99));
  CHECK(run(99) != run(100));
}

// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails.

#include <boost/math/distributions/inverse_gamma.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "slds/cli.hpp"
#include "slds/data.hpp"
#include "slds/dynamics.hpp"
#include "slds/gibbs.hpp"
#include "slds/hdp.hpp"
#include "slds/io.hpp"
#include "test_support.hpp"

using namespace slds;
using slds::testing::ks_critical_1pct;
using slds::testing::ks_distance;
using slds::testing::relative_error;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

double log_normal(const VectorXd& x, const VectorXd& mean, const MatrixXd& cov) {
  const Eigen::LLT<MatrixXd> llt(cov);
  const VectorXd r = x - mean;
  const double log_det = 2.0 * MatrixXd(llt.matrixL()).diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + log_det +
                 r.dot(llt.solve(r)));
}

// ---------------------------------------------------------------- toy runs

struct ToyRun {
  double hamming = 0.0;
  std::size_t modes = 0;
  int switches = 0;
  double seconds = 0.0;
};

std::vector<ToyRun> toy_runs(bool sticky) {
  std::vector<ToyRun> runs;
  for (int s = 0; s < 10; ++s) {
    RngStream data_rng(1000 + static_cast<std::uint64_t>(s));
    const auto traj = generate_slds(toy_spec(400), data_rng);
    SamplerConfig cfg;  // L = 100, 105 sweeps, best of the last 5
    cfg.sticky = sticky;
    RngStream rng(static_cast<std::uint64_t>(s));
    const auto start = Clock::now();
    const auto result = run_chain(traj.y, cfg, rng);
    ToyRun r;
    r.seconds = seconds_since(start);
    const auto& z = result.best.state.z;
    r.hamming = hamming_error(z, traj.z_true);
    r.modes = distinct_labels(z).size();
    r.switches = count_switches(z);
    std::printf("  %s seed %d: hamming %.4f, modes %zu, switches %d, %.1f s\n",
                sticky ? "sticky    " : "non-sticky", s, r.hamming, r.modes, r.switches, r.seconds);
    std::fflush(stdout);
    runs.push_back(r);
  }
  return runs;
}

// --------------------------------------------------------- small oracles

// L = 2, D = 1 state with fixed parameters.
ModelState small_state(int T, std::uint64_t seed) {
  RngStream rng(seed);
  SamplerConfig cfg;
  cfg.L = 2;
  cfg.R = MatrixXd::Constant(1, 1, 0.3);
  cfg.mniw = MniwPrior::defaults(1);
  MatrixXd y(T, 1);
  for (int t = 0; t < T; ++t) y(t, 0) = 1.0 + 0.8 * rng.standard_normal();
  ModelState s = initialize(y, cfg, rng);
  s.dynamics[0] = {MatrixXd::Constant(1, 1, 0.95), MatrixXd::Constant(1, 1, 0.1)};
  s.dynamics[1] = {MatrixXd::Constant(1, 1, -0.6), MatrixXd::Constant(1, 1, 0.4)};
  s.transition.beta = VectorXd(2);
  s.transition.beta << 0.35, 0.65;
  s.transition.pi = MatrixXd(2, 2);
  s.transition.pi << 0.75, 0.25, 0.4, 0.6;
  for (int t = 0; t < T; ++t) s.z[static_cast<std::size_t>(t)] = t % 3 == 0 ? 1 : 0;
  s.x = y;
  return s;
}

MatrixXd noisy_copy(const MatrixXd& x, std::uint64_t seed) {
  RngStream rng(seed);
  MatrixXd y = x;
  for (Eigen::Index t = 0; t < y.rows(); ++t) y(t, 0) += 0.5 * rng.standard_normal();
  return y;
}

Outcome discrete_oracle() {
  const auto start = Clock::now();
  constexpr int T = 4;
  const ModelState s = small_state(T, 11);
  std::map<std::vector<int>, double> exact;
  double norm = 0.0;
  for (int mask = 0; mask < (1 << T); ++mask) {
    std::vector<int> z(T);
    for (int t = 0; t < T; ++t) z[static_cast<std::size_t>(t)] = (mask >> t) & 1;
    double lp = std::log(s.transition.beta[z[0]]);
    for (int t = 1; t < T; ++t) {
      const auto& d = s.dynamics[static_cast<std::size_t>(z[static_cast<std::size_t>(t)])];
      lp += std::log(s.transition.pi(z[static_cast<std::size_t>(t - 1)], z[static_cast<std::size_t>(t)])) +
            log_normal(s.x.row(t).transpose(), d.A * s.x.row(t - 1).transpose(), d.Sigma);
    }
    exact[z] = std::exp(lp);
    norm += exact[z];
  }
  std::map<std::vector<int>, double> counts;
  RngStream rng(12);
  constexpr int draws = 100000;
  for (int i = 0; i < draws; ++i) counts[block_sample_modes(s, rng)] += 1.0;
  double tv = 0.0;
  for (const auto& [z, p] : exact) tv += std::abs(p / norm - counts[z] / draws);
  tv *= 0.5;
  const double secs = seconds_since(start);
  return {tv < 0.02 && secs < 30.0,
          fmt("total variation %.4f over %d draws (need < 0.02), %.1f s (need < 30 s)", tv, draws, secs)};
}

Outcome continuous_oracle() {
  const auto start = Clock::now();
  constexpr int T = 5;
  const ModelState s = small_state(T, 21);
  const MatrixXd y = noisy_copy(s.x, 22);

  MatrixXd B = MatrixXd::Identity(T, T);
  VectorXd q(T), mu(T);
  mu[0] = s.init.mean[0];
  q[0] = s.init.cov(0, 0);
  for (int t = 1; t < T; ++t) {
    const auto& d = s.dynamics[static_cast<std::size_t>(s.z[static_cast<std::size_t>(t)])];
    mu[t] = d.A(0, 0) * mu[t - 1];
    q[t] = d.Sigma(0, 0);
    for (int j = 0; j < t; ++j) B(t, j) = d.A(0, 0) * B(t - 1, j);
  }
  const MatrixXd prior_cov = B * q.asDiagonal() * B.transpose();
  const MatrixXd obs_cov = prior_cov + MatrixXd::Identity(T, T) * s.obs.R(0, 0);
  const MatrixXd gain = prior_cov * obs_cov.inverse();
  const VectorXd post_mean = mu + gain * (y.col(0) - mu);
  const MatrixXd post_cov = prior_cov - gain * prior_cov;

  RngStream rng(23);
  constexpr int draws = 100000;
  VectorXd sum = VectorXd::Zero(T);
  MatrixXd outer = MatrixXd::Zero(T, T);
  for (int i = 0; i < draws; ++i) {
    const VectorXd x = block_sample_states(s, y, rng).col(0);
    sum += x;
    outer += x * x.transpose();
  }
  const VectorXd mean = sum / draws;
  const MatrixXd second = outer / draws;
  const MatrixXd exact_second = post_cov + post_mean * post_mean.transpose();
  double worst_mean = 0.0, worst_second = 0.0;
  for (int t = 0; t < T; ++t) {
    worst_mean = std::max(worst_mean, relative_error(mean[t], post_mean[t]));
    worst_second = std::max(worst_second, relative_error(second(t, t), exact_second(t, t)));
  }
  const double secs = seconds_since(start);
  return {worst_mean < 0.02 && worst_second < 0.02 && secs < 60.0,
          fmt("max relative error: first moments %.4f, second moments %.4f (need < 0.02), %.1f s "
              "(need < 60 s)",
              worst_mean, worst_second, secs)};
}

double kalman_evidence(const ModelState& s, const MatrixXd& y, const std::vector<int>& z) {
  VectorXd m = s.init.mean;
  MatrixXd P = s.init.cov;
  double total = 0.0;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    if (t > 0) {
      const auto& d = s.dynamics[static_cast<std::size_t>(z[static_cast<std::size_t>(t)])];
      m = d.A * m;
      P = d.A * P * d.A.transpose() + d.Sigma;
    }
    const VectorXd yt = y.row(t).transpose();
    const MatrixXd S = s.obs.C * P * s.obs.C.transpose() + s.obs.R;
    total += log_normal(yt, s.obs.C * m, S);
    const MatrixXd K = P * s.obs.C.transpose() * S.inverse();
    m += K * (yt - s.obs.C * m);
    P = (MatrixXd::Identity(P.rows(), P.cols()) - K * s.obs.C) * P;
  }
  return total;
}

Outcome sequential_oracle() {
  constexpr int T = 6;
  const ModelState s = small_state(T, 31);
  const MatrixXd y = noisy_copy(s.x, 32);
  double worst = 0.0;
  for (int t = 0; t < T; ++t) {
    VectorXd log_oracle(2);
    for (int k = 0; k < 2; ++k) {
      auto z = s.z;
      z[static_cast<std::size_t>(t)] = k;
      double lp = kalman_evidence(s, y, z);
      lp += t == 0 ? std::log(s.transition.beta[k])
                   : std::log(s.transition.pi(z[static_cast<std::size_t>(t - 1)], k));
      if (t + 1 < T) lp += std::log(s.transition.pi(k, z[static_cast<std::size_t>(t + 1)]));
      log_oracle[k] = lp;
    }
    VectorXd oracle = (log_oracle.array() - log_oracle.maxCoeff()).exp().matrix();
    oracle /= oracle.sum();
    const VectorXd w = sequential_mode_weights(s, y, t);
    for (int k = 0; k < 2; ++k) worst = std::max(worst, relative_error(w[k], oracle[k]));
  }
  return {worst < 1e-6, fmt("max relative deviation %.3g over all t (need < 1e-6)", worst)};
}

Outcome conjugacy_oracle() {
  RngStream rng(2);
  constexpr int T = 40;
  MatrixXd x(T, 1);
  double prev = 1.0;
  for (int t = 0; t < T; ++t) {
    prev = 0.8 * prev + std::sqrt(0.3) * rng.standard_normal();
    x(t, 0) = prev;
  }
  MniwPrior prior;
  prior.M = MatrixXd::Constant(1, 1, 0.2);
  prior.K = MatrixXd::Constant(1, 1, 0.5);
  prior.n0 = 3.0;
  prior.S0 = MatrixXd::Constant(1, 1, 0.4);
  const std::vector<int> z(T, 0);
  const auto stats = accumulate_statistics(x, z, 0, prior);

  double sxbar = 0.5, sxxbar = 0.2 * 0.5, sxx = 0.2 * 0.2 * 0.5;
  for (int t = 1; t < T; ++t) {
    sxbar += x(t - 1, 0) * x(t - 1, 0);
    sxxbar += x(t, 0) * x(t - 1, 0);
    sxx += x(t, 0) * x(t, 0);
  }
  const double nu = (T - 1) + prior.n0;
  const double scale = sxx - sxxbar * sxxbar / sxbar + 0.4;
  const double a_mean = sxxbar / sxbar;

  constexpr int n = 100000;
  std::vector<double> sigmas(n), as(n);
  for (int i = 0; i < n; ++i) {
    const MatrixXd sig = sample_sigma(stats, prior, rng);
    sigmas[i] = sig(0, 0);
    as[i] = sample_A(stats, sig, rng)(0, 0);
  }
  const boost::math::inverse_gamma_distribution<> ig(nu / 2.0, scale / 2.0);
  const double ks_sigma = ks_distance(sigmas, [&](double v) { return boost::math::cdf(ig, v); });
  const boost::math::students_t_distribution<> st(nu);
  const double t_scale = std::sqrt(scale / (nu * sxbar));
  const double ks_a =
      ks_distance(as, [&](double v) { return boost::math::cdf(st, (v - a_mean) / t_scale); });
  const double critical = ks_critical_1pct(n);

  // Posterior mean of A against least squares on 10^4 pairs.
  RngStream sim(3);
  MatrixXd A(2, 2);
  A << 0.6, 0.3, -0.2, 0.5;
  constexpr int N = 10000;
  MatrixXd xs(N + 1, 2);
  VectorXd cur = VectorXd::Ones(2);
  for (int t = 0; t <= N; ++t) {
    cur = A * cur + std::sqrt(0.5) * VectorXd{{sim.standard_normal(), sim.standard_normal()}};
    xs.row(t) = cur.transpose();
  }
  auto flat = MniwPrior::defaults(2);
  flat.K *= 1e-6;
  const auto big = accumulate_statistics(xs, std::vector<int>(N + 1, 0), 0, flat);
  const MatrixXd ols = xs.topRows(N).colPivHouseholderQr().solve(xs.bottomRows(N)).transpose();
  const double ols_err = (big.posterior_mean() - ols).norm() / ols.norm();

  return {ks_sigma < critical && ks_a < critical && ols_err < 0.01,
          fmt("KS Sigma %.4f, KS A %.4f (1%% critical %.4f, %d draws); posterior mean vs least "
              "squares %.2e (need < 0.01)",
              ks_sigma, ks_a, critical, n, ols_err)};
}

bool is_simplex(const VectorXd& v) { return v.minCoeff() >= 0.0 && std::abs(v.sum() - 1.0) < 1e-12; }

Outcome hdp_suite() {
  std::vector<std::string> failures;
  const auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };
  RngStream rng(17);

  // Simplex and stochasticity invariants, including kappa = 0.
  for (int rep = 0; rep < 200; ++rep) {
    const int L = 6;
    std::vector<int> z(60);
    for (auto& k : z) k = static_cast<int>(rng.uniform() * L);
    const bool sticky = rep % 2 == 0;
    const auto hp = HdpParams::from_concentration(2.0, 5.0, sticky ? 0.8 : 0.0, L);
    const auto tm = sample_transition_prior(hp, rng);
    bool ok = is_simplex(tm.beta);
    for (int j = 0; j < L; ++j) ok = ok && is_simplex(tm.pi.row(j).transpose());
    const auto stats = collect_statistics(z, tm.beta, hp, rng);
    ok = ok && (stats.m.array() <= stats.n.array()).all() && (stats.m_bar.array() <= stats.m.array()).all();
    if (!sticky) ok = ok && stats.w.isZero() && stats.m_bar == stats.m;
    const VectorXd beta = sample_global_beta(stats.m_bar, hp.gamma, L, rng);
    const MatrixXd pi = sample_transition_rows(beta, stats.n, hp.alpha, hp.kappa, rng);
    ok = ok && is_simplex(beta);
    for (int j = 0; j < L; ++j) ok = ok && is_simplex(pi.row(j).transpose());
    expect(ok, sticky ? "sticky invariants" : "non-sticky invariants (w = 0)");
    if (!ok) break;
  }

  constexpr int reps = 100000;
  {
    MatrixXi n(2, 2);
    n << 20, 5, 1, 0;
    VectorXd beta(2);
    beta << 0.3, 0.7;
    const double alpha = 2.0, kappa = 3.0;
    const auto expected = [](int customers, double c) {
      double e = 0.0;
      for (int i = 1; i <= customers; ++i) e += c / (c + i - 1);
      return e;
    };
    MatrixXd acc = MatrixXd::Zero(2, 2);
    for (int r = 0; r < reps; ++r) acc += sample_table_counts(n, beta, alpha, kappa, rng).cast<double>();
    acc /= reps;
    expect(relative_error(acc(0, 0), expected(20, alpha * beta[0] + kappa)) < 0.02 &&
               relative_error(acc(0, 1), expected(5, alpha * beta[1])) < 0.02,
           "restaurant expectation");
  }
  {
    const auto hp = HdpParams::from_concentration(4.0, 1.0, 0.0, 4);
    MatrixXi m_bar(4, 4);
    m_bar << 3, 0, 1, 0, 0, 2, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0;
    const VectorXd conc =
        (m_bar.colwise().sum().cast<double>().transpose().array() + hp.gamma / hp.L).matrix();
    VectorXd acc = VectorXd::Zero(4);
    for (int r = 0; r < reps; ++r) acc += sample_global_beta(m_bar, hp.gamma, hp.L, rng);
    acc /= reps;
    bool ok = true;
    for (int k = 0; k < 4; ++k) ok = ok && relative_error(acc[k], conc[k] / conc.sum()) < 0.02;
    expect(ok, "beta posterior mean");

    VectorXd b(3);
    b << 0.2, 0.3, 0.5;
    MatrixXi counts(3, 3);
    counts << 5, 3, 2, 1, 1, 8, 0, 4, 6;
    const double alpha = 2.0, kappa = 1.5;
    MatrixXd pacc = MatrixXd::Zero(3, 3);
    for (int r = 0; r < reps; ++r) pacc += sample_transition_rows(b, counts, alpha, kappa, rng);
    pacc /= reps;
    ok = true;
    for (int j = 0; j < 3; ++j) {
      const double total = counts.row(j).sum() + alpha + kappa;
      for (int k = 0; k < 3; ++k) {
        const double expected = (counts(j, k) + alpha * b[k] + (j == k ? kappa : 0.0)) / total;
        ok = ok && relative_error(pacc(j, k), expected) < 0.02;
      }
    }
    expect(ok, "pi posterior mean");
  }
  {
    const HyperPriors priors;
    const int L = 5;
    const TransitionStats empty{MatrixXi::Zero(L, L), MatrixXi::Zero(L, L), VectorXi::Zero(L),
                                MatrixXi::Zero(L, L)};
    const auto hp = HdpParams::from_concentration(2.0, 3.0, 0.5, L);
    std::vector<double> ak, rho, gamma;
    for (int r = 0; r < reps; ++r) {
      const auto next = sample_hyperparameters(empty, hp, priors, rng);
      ak.push_back(next.alpha_plus_kappa());
      rho.push_back(next.rho);
      gamma.push_back(next.gamma);
    }
    const auto var = [](const std::vector<double>& v) {
      const double m = slds::testing::mean(v);
      double s = 0.0;
      for (double x : v) s += (x - m) * (x - m);
      return s / static_cast<double>(v.size());
    };
    const double beta_var = 20.0 * 2.0 / (22.0 * 22.0 * 23.0);
    expect(relative_error(slds::testing::mean(ak), 10.0) < 0.03 && relative_error(var(ak), 10.0) < 0.03 &&
               relative_error(slds::testing::mean(gamma), 10.0) < 0.03 &&
               relative_error(var(gamma), 10.0) < 0.03 &&
               relative_error(slds::testing::mean(rho), 20.0 / 22.0) < 0.03 &&
               relative_error(var(rho), beta_var) < 0.03,
           "hyperparameter prior recovery");
  }

  std::string detail = failures.empty() ? "invariants, restaurant expectation, Dirichlet means and "
                                          "hyperparameter prior recovery within tolerance"
                                        : "failed:";
  for (const auto& f : failures) detail += " [" + f + "]";
  return {failures.empty(), detail};
}

Outcome determinism() {
  const auto dir = std::filesystem::temp_directory_path() / ("slds_acceptance_" + std::to_string(::getpid()));
  std::filesystem::create_directories(dir);
  const auto run = [&](std::vector<std::string> args) {
    args.insert(args.begin(), "slds");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  };
  const auto traj = (dir / "traj.csv").string();
  const auto labels = (dir / "z.csv").string();
  const auto first = (dir / "first.json").string();
  const auto second = (dir / "second.json").string();
  Outcome outcome;
  if (run({"synth", "--seed", "5", "--out", traj, "--labels", labels}) != 0 ||
      run({"segment", "--input", traj, "--seed", "9", "--out", first, "--no-timings"}) != 0 ||
      run({"segment", "--input", traj, "--seed", "9", "--out", second, "--no-timings"}) != 0) {
    outcome = {false, "a command failed"};
  } else {
    const auto a = read_text_file(first);
    const auto b = read_text_file(second);
    outcome = {a == b, fmt("two default-config runs produced %s documents (%zu bytes)",
                           a == b ? "byte-identical" : "different", a.size())};
  }
  std::filesystem::remove_all(dir);
  return outcome;
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  int failed = 0;
  const auto report = [&](int id, const char* name, const Outcome& o) {
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
    if (!o.pass) ++failed;
  };

  const auto sticky = toy_runs(true);
  const auto plain = toy_runs(false);

  int accurate = 0, parsimonious = 0, rapid = 0;
  double slowest = 0.0;
  for (const auto& r : sticky) {
    accurate += r.hamming <= 0.10;
    parsimonious += r.modes >= 3 && r.modes <= 5;
    slowest = std::max(slowest, r.seconds);
  }
  const int true_switches = count_switches(layout_labels(toy_spec(400).layout));
  for (const auto& r : plain) {
    rapid += r.switches >= 3 * true_switches;
    slowest = std::max(slowest, r.seconds);
  }
  report(1, "toy reproduction",
         {accurate >= 7 && slowest < 300.0,
          fmt("%d/10 seeds with hamming <= 0.10 (need >= 7); slowest chain %.1f s (need < 300 s)",
              accurate, slowest)});
  report(2, "mode parsimony",
         {parsimonious >= 8, fmt("%d/10 seeds use between 3 and 5 modes (need >= 8)", parsimonious)});
  report(3, "sticky ablation",
         {rapid >= 8, fmt("%d/10 non-sticky seeds with >= %d switches (need >= 8)", rapid,
                          3 * true_switches)});
  report(4, "discrete oracle", discrete_oracle());
  report(5, "continuous oracle", continuous_oracle());
  report(6, "sequential-mode oracle", sequential_oracle());
  report(7, "conjugacy oracle", conjugacy_oracle());
  report(8, "HDP unit suite", hdp_suite());
  report(9, "determinism", determinism());

  std::printf("%d of 9 criteria passed\n", 9 - failed);
  return failed == 0 ? 0 : 1;
}

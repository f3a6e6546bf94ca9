#include "slds/data.hpp"

#include <algorithm>
#include <charconv>
#include <limits>
#include <set>
#include <string>

#include "slds/error.hpp"
#include "slds/linalg.hpp"

namespace slds {

namespace {

bool is_zero(const MatrixXd& m) { return m.size() == 0 || m.isZero(0.0); }

void check_noise(const MatrixXd& m, Eigen::Index dim, const std::string& what) {
  if (m.rows() != dim || m.cols() != dim) throw ValidationError(what + " has the wrong shape");
  if (!is_zero(m) && !is_spd(m)) throw ValidationError(what + " is neither zero nor SPD");
}

VectorXd noise_draw(const MatrixXd& cov, RngStream& rng) {
  if (is_zero(cov)) return VectorXd::Zero(cov.rows());
  return sample_mvn(VectorXd::Zero(cov.rows()), cov, rng);
}

}  // namespace

int SldsSpec::length() const {
  int total = 0;
  for (const auto& seg : layout) total += seg.length;
  return total;
}

void SldsSpec::validate() const {
  if (dynamics.empty()) throw ValidationError("SLDS spec has no dynamics");
  if (layout.empty()) throw ValidationError("SLDS spec has an empty layout");
  const auto d = x0.size();
  if (d == 0) throw ValidationError("x0 is empty");
  for (std::size_t k = 0; k < dynamics.size(); ++k) {
    const auto& dyn = dynamics[k];
    if (dyn.A.rows() != d || dyn.A.cols() != d) {
      throw ValidationError("A of mode " + std::to_string(k + 1) + " does not match x0");
    }
    check_noise(dyn.Sigma, d, "Sigma of mode " + std::to_string(k + 1));
  }
  for (const auto& seg : layout) {
    if (seg.length <= 0) throw ValidationError("segment lengths must be positive");
    if (seg.mode < 1 || seg.mode > static_cast<int>(dynamics.size())) {
      throw ValidationError("layout mode " + std::to_string(seg.mode) + " has no dynamics");
    }
  }
  if (obs.C.cols() != d) throw ValidationError("C does not match the state dimension");
  check_noise(obs.R, obs.C.rows(), "R");
}

LabeledTrajectory generate_slds(const SldsSpec& spec, RngStream& rng) {
  spec.validate();
  const int T = spec.length();
  const auto d = spec.x0.size();
  LabeledTrajectory out;
  out.z_true = layout_labels(spec.layout);
  out.x_true.resize(T, d);
  out.y.resize(T, spec.obs.C.rows());
  VectorXd prev = spec.x0;
  for (int t = 0; t < T; ++t) {
    const auto& dyn = spec.dynamics[out.z_true[t] - 1];
    VectorXd cur = dyn.A * prev + noise_draw(dyn.Sigma, rng);
    out.x_true.row(t) = cur.transpose();
    out.y.row(t) = (spec.obs.C * cur + noise_draw(spec.obs.R, rng)).transpose();
    prev = std::move(cur);
  }
  return out;
}

SldsSpec toy_spec(int T, std::optional<std::vector<Segment>> layout, double obs_noise) {
  SldsSpec spec;
  MatrixXd a1(2, 2), a2(2, 2), a3(2, 2);
  a1 << 0.0, 1.0, 0.7, 0.36;
  a2 << 0.0, 1.0, 0.4, 0.56;
  a3 << 0.5, 0.5, 0.32, 0.67;
  const MatrixXd sigma = 1e-5 * MatrixXd::Identity(2, 2);
  spec.dynamics = {{a1, sigma}, {a2, sigma}, {a3, sigma}};
  spec.x0 = VectorXd::Ones(2);
  spec.obs = ObsModel::identity(2, obs_noise);

  if (layout) {
    spec.layout = std::move(*layout);
    if (spec.length() != T) {
      throw ValidationError("layout lengths sum to " + std::to_string(spec.length()) +
                            ", expected T=" + std::to_string(T));
    }
  } else {
    static constexpr int kLengths[] = {80, 60, 70, 60, 70, 60};
    static constexpr int kModes[] = {1, 2, 3, 1, 2, 3};
    constexpr int kDefaultT = 400;
    if (T < 6) throw ValidationError("toy layout needs T >= 6");
    int assigned = 0;
    for (int i = 0; i < 6; ++i) {
      int len = i == 5 ? T - assigned
                       : std::max(1, static_cast<int>(
                                         static_cast<long>(kLengths[i]) * T / kDefaultT));
      spec.layout.push_back({len, kModes[i]});
      assigned += len;
    }
    if (spec.layout.back().length <= 0) throw ValidationError("toy layout does not fit T");
  }
  spec.validate();
  return spec;
}

std::vector<Segment> parse_layout(std::string_view text) {
  std::vector<Segment> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto comma = text.find(',', pos);
    const auto item = text.substr(pos, comma == std::string_view::npos ? text.npos : comma - pos);
    const auto colon = item.find(':');
    if (colon == std::string_view::npos) {
      throw ValidationError("layout item '" + std::string(item) + "' is not len:mode");
    }
    Segment seg;
    const auto parse_int = [&](std::string_view s, int& v) {
      const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
      if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw ValidationError("layout item '" + std::string(item) + "' is not len:mode");
      }
    };
    parse_int(item.substr(0, colon), seg.length);
    parse_int(item.substr(colon + 1), seg.mode);
    if (seg.length <= 0 || seg.mode < 1) {
      throw ValidationError("layout item '" + std::string(item) +
                            "' needs a positive length and a mode >= 1");
    }
    out.push_back(seg);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<int> layout_labels(std::span<const Segment> layout) {
  std::vector<int> z;
  for (const auto& seg : layout) z.insert(z.end(), seg.length, seg.mode);
  return z;
}

std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights) {
  const auto rows = weights.rows();
  const auto cols = weights.cols();
  const auto n = std::max(rows, cols);
  if (n == 0) return {};
  // Square cost matrix (1-indexed) for the O(n^3) potentials method.
  const double hi = weights.size() > 0 ? weights.maxCoeff() : 0.0;
  Eigen::MatrixXd cost = Eigen::MatrixXd::Constant(n + 1, n + 1, hi);
  cost.row(0).setZero();
  cost.col(0).setZero();
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) cost(i + 1, j + 1) = hi - weights(i, j);
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<Eigen::Index> match(n + 1, 0), way(n + 1, 0);
  for (Eigen::Index i = 1; i <= n; ++i) {
    match[0] = i;
    Eigen::Index j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const Eigen::Index i0 = match[j0];
      double delta = inf;
      Eigen::Index j1 = 0;
      for (Eigen::Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0, j) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Eigen::Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      const Eigen::Index j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> out(rows, -1);
  for (Eigen::Index j = 1; j <= n; ++j) {
    const auto i = match[j];
    if (i >= 1 && i <= rows && j <= cols) out[i - 1] = static_cast<int>(j - 1);
  }
  return out;
}

std::vector<int> distinct_labels(std::span<const int> z) {
  std::set<int> s(z.begin(), z.end());
  return {s.begin(), s.end()};
}

LabelMatching match_labels(std::span<const int> z_pred, std::span<const int> z_true) {
  if (z_pred.size() != z_true.size()) {
    throw ValidationError("label sequences differ in length");
  }
  const auto pred_labels = distinct_labels(z_pred);
  const auto true_labels = distinct_labels(z_true);
  const auto index_of = [](const std::vector<int>& labels, int v) {
    return static_cast<Eigen::Index>(std::lower_bound(labels.begin(), labels.end(), v) -
                                     labels.begin());
  };
  Eigen::MatrixXd confusion =
      Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pred_labels.size()),
                            static_cast<Eigen::Index>(true_labels.size()));
  for (std::size_t t = 0; t < z_pred.size(); ++t) {
    confusion(index_of(pred_labels, z_pred[t]), index_of(true_labels, z_true[t])) += 1.0;
  }
  const auto assignment = max_weight_assignment(confusion);
  LabelMatching out;
  for (std::size_t i = 0; i < pred_labels.size(); ++i) {
    const int j = assignment[i];
    if (j >= 0 && confusion(static_cast<Eigen::Index>(i), j) > 0.0) {
      out.mapping[pred_labels[i]] = true_labels[j];
      out.overlap += static_cast<int>(confusion(static_cast<Eigen::Index>(i), j));
    } else {
      out.mapping[pred_labels[i]] = kUnmatched;
    }
  }
  return out;
}

double hamming_error(std::span<const int> z_pred, std::span<const int> z_true) {
  if (z_pred.size() != z_true.size()) throw ValidationError("label sequences differ in length");
  if (z_pred.empty()) throw ValidationError("label sequences are empty");
  const auto m = match_labels(z_pred, z_true);
  const auto T = static_cast<double>(z_pred.size());
  return (T - m.overlap) / T;
}

int count_switches(std::span<const int> z) {
  int n = 0;
  for (std::size_t t = 1; t < z.size(); ++t) n += z[t] != z[t - 1];
  return n;
}

std::vector<int> switch_points(std::span<const int> z) {
  std::vector<int> out;
  for (std::size_t t = 1; t < z.size(); ++t) {
    if (z[t] != z[t - 1]) out.push_back(static_cast<int>(t));
  }
  return out;
}

}  // namespace slds

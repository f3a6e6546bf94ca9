#pragma once

// Synthetic SLDS trajectories and segmentation metrics.

#include <map>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "slds/distributions.hpp"
#include "slds/dynamics.hpp"
#include "slds/messages.hpp"

namespace slds {

/// A run of `length` steps generated by mode `mode`. Mode labels are
/// 1-based: label m uses dynamics[m - 1].
struct Segment {
  int length = 0;
  int mode = 1;
};

/// Generative setup. Sigma and R may be zero matrices for noiseless
/// simulation.
struct SldsSpec {
  std::vector<DynParams> dynamics;
  std::vector<Segment> layout;
  VectorXd x0;
  ObsModel obs;

  int length() const;
  void validate() const;
};

struct LabeledTrajectory {
  MatrixXd y;           // T x D_y
  MatrixXd x_true;      // T x D
  std::vector<int> z_true;
};

LabeledTrajectory generate_slds(const SldsSpec& spec, RngStream& rng);

/// The three-mode toy system: A1, A2, A3 with Sigma = 1e-5 I, x0 = (1, 1),
/// C = I, R = 1e-4 I. Default layout is (80, 60, 70, 60, 70, 60) cycling
/// modes 1, 2, 3, rescaled proportionally when T != 400.
SldsSpec toy_spec(int T, std::optional<std::vector<Segment>> layout = std::nullopt,
                  double obs_noise = 1e-4);

/// Parses "len:mode,len:mode,...".
std::vector<Segment> parse_layout(std::string_view text);

/// Expands a layout into a label sequence.
std::vector<int> layout_labels(std::span<const Segment> layout);

inline constexpr int kUnmatched = -1;

struct LabelMatching {
  std::map<int, int> mapping;  // predicted label -> true label or kUnmatched
  int overlap = 0;
};

/// Optimal one-to-one assignment of predicted to true labels maximizing the
/// number of agreeing time steps (Hungarian algorithm on the confusion matrix).
LabelMatching match_labels(std::span<const int> z_pred, std::span<const int> z_true);

/// Maximum-weight assignment for a rectangular nonnegative weight matrix.
/// Returns for each row the assigned column or -1.
std::vector<int> max_weight_assignment(const Eigen::MatrixXd& weights);

double hamming_error(std::span<const int> z_pred, std::span<const int> z_true);

int count_switches(std::span<const int> z);

/// Sorted distinct labels.
std::vector<int> distinct_labels(std::span<const int> z);

/// Time indices t with z_t != z_{t-1}.
std::vector<int> switch_points(std::span<const int> z);

}  // namespace slds

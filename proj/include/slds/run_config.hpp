#pragma once

// Run configuration for the command-line front end.
//
// A configuration document is flat `key = value` text; `#` starts a comment.
// Nested settings use dotted keys:
//
//   iterations = 105
//   priors.a = 10
//   mniw.n0 = 4
//   R = 1e-4              # scalar times identity
//   mniw.S0 = 1e-5,0;0,1e-5   # rows separated by ';'
//
// Matrices accept a scalar (meaning scalar * identity) or explicit rows.
// `C` also accepts `identity`.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "slds/gibbs.hpp"

namespace slds {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// Parses `key = value` lines. Throws ValidationError naming the line on
/// malformed input or repeated keys.
KeyValues parse_key_values(std::string_view text, std::string_view source);

/// Accepted formats for matrix-valued keys.
struct MatrixSetting {
  std::optional<double> scalar;  // scalar * identity
  MatrixXd explicit_value;       // used when scalar is empty

  MatrixXd resolve(int dim) const;
};

struct RunConfig {
  int L = 100;
  int iterations = 105;
  int select_window = 5;
  int burn_in = 0;
  int thin = 5;
  std::uint64_t seed = 0;
  int chains = 1;
  HyperPriors priors;
  bool resample_hyperparameters = true;
  bool sticky = true;
  std::optional<MatrixSetting> R;
  std::optional<MatrixXd> C;  // empty means identity
  std::optional<VectorXd> x0_mean;
  std::optional<MatrixSetting> x0_cov;
  std::optional<MatrixSetting> mniw_M;
  std::optional<MatrixSetting> mniw_K;
  std::optional<double> mniw_n0;
  std::optional<MatrixSetting> mniw_S0;

  /// Sets one key. Throws ValidationError naming the key when it is unknown
  /// or its value does not parse.
  void set(std::string_view key, std::string_view value);
  void apply(const KeyValues& values);

  /// Checks ranges that do not depend on the data.
  void validate() const;

  /// Sampler settings for observations `y`, with every default filled in
  /// (R, C, MNIW prior, initial state prior).
  SamplerConfig sampler_config(const MatrixXd& y) const;
};

/// Reads a configuration file: key = value text, or a result document whose
/// `config_echo` is reused.
KeyValues load_config_file(const std::filesystem::path& path);

/// Every key of a resolved configuration in canonical text form. Applying
/// the output to a fresh RunConfig reproduces `resolved` exactly.
KeyValues echo_config(const SamplerConfig& resolved, std::uint64_t seed, int chains);

std::string format_matrix(const MatrixXd& m);
std::string format_vector(const VectorXd& v);

}  // namespace slds

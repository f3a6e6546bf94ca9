#pragma once

// Multi-chain execution and the JSON documents written by the front end.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "slds/gibbs.hpp"

namespace slds {

using Json = nlohmann::ordered_json;

struct ChainRun {
  ChainResult result;
  double seconds = 0.0;
};

struct MultiChainRun {
  std::vector<ChainRun> chains;  // chain i was seeded with seed + i
  int best_chain = 0;            // highest best.log_joint, lowest index on ties
};

/// Runs `num_chains` independent chains on separate threads. Exceptions are
/// rethrown after all threads finish, from the lowest-index failing chain.
MultiChainRun run_chains(const MatrixXd& y, const SamplerConfig& config, std::uint64_t seed,
                         int num_chains);

struct ReportOptions {
  std::optional<std::vector<int>> truth;
  bool include_timings = true;
  double read_seconds = 0.0;
  double sampling_seconds = 0.0;
};

/// The result document. Fields: z_best, switch_points, num_modes_used,
/// dynamics_best, best_log_joint, best_iteration, log_joint_trace (after
/// burn_in), hamming_vs_truth, seed, config_echo, chains, best_chain and,
/// optionally, timings.
Json result_document(const MultiChainRun& run, const SamplerConfig& resolved, std::uint64_t seed,
                     const ReportOptions& options);

/// Hamming error, label mapping, confusion matrix and switch counts.
Json evaluation_document(const std::vector<int>& predicted, const std::vector<int>& truth);

/// Long-format rows t,dimension,value,mode with one row per observation entry.
std::string plot_data_csv(const MatrixXd& y, const std::vector<int>& z);

/// Serializes with two-space indentation and a trailing newline.
std::string dump_document(const Json& doc);

}  // namespace slds

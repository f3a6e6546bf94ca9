#include "slds/report.hpp"

#include <chrono>
#include <exception>
#include <thread>

#include "slds/data.hpp"
#include "slds/error.hpp"
#include "slds/io.hpp"
#include "slds/run_config.hpp"

namespace slds {

namespace {

Json matrix_json(const MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

double best_hamming(const ChainResult& chain, const std::vector<int>& truth) {
  return hamming_error(chain.best.state.z, truth);
}

}  // namespace

MultiChainRun run_chains(const MatrixXd& y, const SamplerConfig& config, std::uint64_t seed,
                         int num_chains) {
  if (num_chains < 1) throw ValidationError("number of chains must be at least 1");
  MultiChainRun run;
  run.chains.resize(static_cast<std::size_t>(num_chains));
  std::vector<std::exception_ptr> errors(run.chains.size());

  const auto work = [&](std::size_t i) {
    try {
      const auto start = std::chrono::steady_clock::now();
      RngStream rng(seed + i);
      run.chains[i].result = run_chain(y, config, rng);
      run.chains[i].seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (num_chains == 1) {
    work(0);
  } else {
    std::vector<std::jthread> threads;
    threads.reserve(run.chains.size());
    for (std::size_t i = 0; i < run.chains.size(); ++i) threads.emplace_back(work, i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (std::size_t i = 1; i < run.chains.size(); ++i) {
    if (run.chains[i].result.best.log_joint >
        run.chains[static_cast<std::size_t>(run.best_chain)].result.best.log_joint) {
      run.best_chain = static_cast<int>(i);
    }
  }
  return run;
}

Json result_document(const MultiChainRun& run, const SamplerConfig& resolved, std::uint64_t seed,
                     const ReportOptions& options) {
  const auto& best_chain = run.chains.at(static_cast<std::size_t>(run.best_chain)).result;
  const auto& best = best_chain.best;
  const auto& z = best.state.z;
  if (options.truth && options.truth->size() != z.size()) {
    throw ValidationError("truth labels have length " + std::to_string(options.truth->size()) +
                          " but the trajectory has " + std::to_string(z.size()) + " steps");
  }

  Json doc;
  doc["z_best"] = z;
  doc["switch_points"] = switch_points(z);
  const auto used = distinct_labels(z);
  doc["num_modes_used"] = used.size();

  Json dynamics = Json::array();
  for (int k : used) {
    const auto& d = best.state.dynamics[static_cast<std::size_t>(k)];
    dynamics.push_back({{"mode", k}, {"A", matrix_json(d.A)}, {"Sigma", matrix_json(d.Sigma)}});
  }
  doc["dynamics_best"] = std::move(dynamics);
  doc["best_log_joint"] = best.log_joint;
  doc["best_iteration"] = best.iteration;

  const auto& trace = best_chain.log_joint_trace;
  const auto skip = std::min(trace.size(), static_cast<std::size_t>(std::max(resolved.burn_in, 0)));
  doc["log_joint_trace"] = std::vector<double>(trace.begin() + static_cast<std::ptrdiff_t>(skip), trace.end());
  doc["hamming_vs_truth"] = options.truth ? Json(best_hamming(best_chain, *options.truth)) : Json();
  doc["seed"] = seed;

  Json echo = Json::object();
  for (const auto& [k, v] : echo_config(resolved, seed, static_cast<int>(run.chains.size()))) {
    echo[k] = v;
  }
  doc["config_echo"] = std::move(echo);

  Json chains = Json::array();
  for (std::size_t i = 0; i < run.chains.size(); ++i) {
    const auto& c = run.chains[i].result;
    Json entry;
    entry["index"] = i;
    entry["seed"] = c.seed;
    entry["best_log_joint"] = c.best.log_joint;
    entry["best_iteration"] = c.best.iteration;
    entry["num_modes_used"] = distinct_labels(c.best.state.z).size();
    entry["switch_count"] = count_switches(c.best.state.z);
    entry["hamming_vs_truth"] = options.truth ? Json(best_hamming(c, *options.truth)) : Json();
    entry["global_best"] = static_cast<int>(i) == run.best_chain;
    chains.push_back(std::move(entry));
  }
  doc["chains"] = std::move(chains);
  doc["best_chain"] = run.best_chain;

  if (options.include_timings) {
    Json per_chain = Json::array();
    for (const auto& c : run.chains) per_chain.push_back(c.seconds);
    doc["timings"] = {{"read_input_seconds", options.read_seconds},
                      {"sampling_seconds", options.sampling_seconds},
                      {"chain_seconds", std::move(per_chain)}};
  }
  return doc;
}

Json evaluation_document(const std::vector<int>& predicted, const std::vector<int>& truth) {
  if (predicted.size() != truth.size()) {
    throw ValidationError("prediction has " + std::to_string(predicted.size()) +
                          " labels but truth has " + std::to_string(truth.size()));
  }
  const auto pred_labels = distinct_labels(predicted);
  const auto true_labels = distinct_labels(truth);
  const auto index_of = [](const std::vector<int>& labels, int v) {
    return static_cast<std::size_t>(std::lower_bound(labels.begin(), labels.end(), v) - labels.begin());
  };
  std::vector<std::vector<int>> counts(pred_labels.size(), std::vector<int>(true_labels.size(), 0));
  for (std::size_t t = 0; t < predicted.size(); ++t) {
    ++counts[index_of(pred_labels, predicted[t])][index_of(true_labels, truth[t])];
  }

  const auto matching = match_labels(predicted, truth);
  Json mapping = Json::array();
  for (const auto& [p, q] : matching.mapping) {
    mapping.push_back({{"predicted", p}, {"true", q == kUnmatched ? Json() : Json(q)}});
  }

  Json doc;
  doc["length"] = predicted.size();
  doc["hamming_error"] = hamming_error(predicted, truth);
  doc["matched_steps"] = matching.overlap;
  doc["mapping"] = std::move(mapping);
  doc["confusion"] = {{"predicted_labels", pred_labels},
                      {"true_labels", true_labels},
                      {"counts", counts}};
  doc["switches"] = {{"predicted", count_switches(predicted)}, {"true", count_switches(truth)}};
  doc["num_modes"] = {{"predicted", pred_labels.size()}, {"true", true_labels.size()}};
  return doc;
}

std::string plot_data_csv(const MatrixXd& y, const std::vector<int>& z) {
  if (static_cast<std::size_t>(y.rows()) != z.size()) {
    throw ValidationError("plot data needs one label per observation row");
  }
  std::string out = "t,dimension,value,mode\n";
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    for (Eigen::Index d = 0; d < y.cols(); ++d) {
      out += std::to_string(t) + ',' + std::to_string(d) + ',' + format_double(y(t, d)) + ',' +
             std::to_string(z[static_cast<std::size_t>(t)]) + '\n';
    }
  }
  return out;
}

std::string dump_document(const Json& doc) { return doc.dump(2) + '\n'; }

}  // namespace slds

#include "slds/cli.hpp"

#include <chrono>
#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "slds/data.hpp"
#include "slds/error.hpp"
#include "slds/io.hpp"
#include "slds/report.hpp"
#include "slds/run_config.hpp"

namespace slds {

namespace {

namespace fs = std::filesystem;

struct SynthArgs {
  int T = 400;
  std::uint64_t seed = 0;
  std::string out;
  std::string labels;
  std::string states;
  std::string layout;
  double obs_noise = 1e-4;
  std::string plot_data;
};

struct SegmentArgs {
  std::string input;
  std::string config;
  std::string out;
  std::string truth;
  std::string plot_data;
  std::vector<std::string> settings;
  bool no_timings = false;
  // (config key, value) pairs from flags that mirror config keys.
  std::vector<std::pair<std::string, std::string>> overrides;
};

struct EvalArgs {
  std::string pred;
  std::string truth;
  std::string out;
};

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void write_output(const std::string& path, const std::string& content, std::ostream& out) {
  if (path == "-") {
    out << content;
  } else {
    write_text_file(path, content);
  }
}

std::vector<int> read_prediction(const fs::path& path) {
  if (path.extension() != ".json") return read_labels(path);
  Json doc;
  try {
    doc = Json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.contains("z_best") || !doc["z_best"].is_array()) {
    throw ValidationError(path.string() + ": result document has no z_best array");
  }
  return doc["z_best"].get<std::vector<int>>();
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  std::optional<std::vector<Segment>> layout;
  if (!a.layout.empty()) layout = parse_layout(a.layout);
  const SldsSpec spec = toy_spec(a.T, layout, a.obs_noise);
  RngStream rng(a.seed);
  const auto traj = generate_slds(spec, rng);

  write_text_file(a.out, matrix_to_csv(traj.y));
  write_text_file(a.labels, labels_to_csv(traj.z_true));
  if (!a.states.empty()) write_text_file(a.states, matrix_to_csv(traj.x_true));
  if (!a.plot_data.empty()) write_text_file(a.plot_data, plot_data_csv(traj.y, traj.z_true));

  Json summary;
  summary["T"] = spec.length();
  summary["seed"] = a.seed;
  Json segments = Json::array();
  for (const auto& s : spec.layout) segments.push_back({{"length", s.length}, {"mode", s.mode}});
  summary["layout"] = std::move(segments);
  summary["x0"] = format_vector(spec.x0);
  summary["R"] = format_matrix(spec.obs.R);
  Json dyn = Json::array();
  for (std::size_t k = 0; k < spec.dynamics.size(); ++k) {
    dyn.push_back({{"mode", k + 1},
                   {"A", format_matrix(spec.dynamics[k].A)},
                   {"Sigma", format_matrix(spec.dynamics[k].Sigma)}});
  }
  summary["dynamics"] = std::move(dyn);
  summary["switches"] = count_switches(traj.z_true);
  out << dump_document(summary);
  return kExitSuccess;
}

int cmd_segment(const SegmentArgs& a, std::ostream& out) {
  RunConfig rc;
  if (!a.config.empty()) rc.apply(load_config_file(a.config));
  for (const auto& s : a.settings) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ValidationError("--set expects key=value, got '" + s + "'");
    rc.set(s.substr(0, eq), s.substr(eq + 1));
  }
  for (const auto& [k, v] : a.overrides) rc.set(k, v);
  rc.validate();

  const auto read_start = std::chrono::steady_clock::now();
  const MatrixXd y = read_csv(a.input).values;
  std::optional<std::vector<int>> truth;
  if (!a.truth.empty()) {
    truth = read_labels(a.truth);
    if (truth->size() != static_cast<std::size_t>(y.rows())) {
      throw ValidationError("truth labels have length " + std::to_string(truth->size()) +
                            " but the input has " + std::to_string(y.rows()) + " rows");
    }
  }
  const double read_seconds = seconds_since(read_start);

  const SamplerConfig cfg = rc.sampler_config(y);
  const auto sample_start = std::chrono::steady_clock::now();
  const auto run = run_chains(y, cfg, rc.seed, rc.chains);
  const double sampling_seconds = seconds_since(sample_start);

  ReportOptions options;
  options.truth = truth;
  options.include_timings = !a.no_timings;
  options.read_seconds = read_seconds;
  options.sampling_seconds = sampling_seconds;
  const Json doc = result_document(run, cfg, rc.seed, options);
  write_output(a.out, dump_document(doc), out);

  if (!a.plot_data.empty()) {
    const auto& best = run.chains[static_cast<std::size_t>(run.best_chain)].result.best;
    write_text_file(a.plot_data, plot_data_csv(y, best.state.z));
  }
  return kExitSuccess;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const auto predicted = read_prediction(a.pred);
  const auto truth = read_labels(a.truth);
  write_output(a.out, dump_document(evaluation_document(predicted, truth)), out);
  return kExitSuccess;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Bayesian segmentation of switching linear dynamical systems"};
  app.name("slds");
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate the three-mode toy trajectory");
  synth_cmd->add_option("-T,--T", synth.T, "Number of time steps")->capture_default_str();
  synth_cmd->add_option("--seed", synth.seed, "Random seed")->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Observations CSV")->required();
  synth_cmd->add_option("--labels", synth.labels, "True mode labels CSV")->required();
  synth_cmd->add_option("--states", synth.states, "True latent states CSV");
  synth_cmd->add_option("--layout", synth.layout, "Segments as len:mode,len:mode,...");
  synth_cmd->add_option("--obs-noise", synth.obs_noise, "Observation noise variance")
      ->capture_default_str();
  synth_cmd->add_option("--emit-plot-data", synth.plot_data, "Long-format plot CSV");

  SegmentArgs seg;
  auto* seg_cmd = app.add_subcommand("segment", "Run the Gibbs sampler on a trajectory");
  seg_cmd->add_option("--input", seg.input, "Observations CSV")->required();
  seg_cmd->add_option("--config", seg.config, "key = value config, or a previous result JSON");
  seg_cmd->add_option("--out", seg.out, "Result JSON ('-' for stdout)")->required();
  seg_cmd->add_option("--truth", seg.truth, "True labels CSV for hamming_vs_truth");
  seg_cmd->add_option("--emit-plot-data", seg.plot_data, "Long-format plot CSV");
  seg_cmd->add_option("--set", seg.settings, "Extra key=value setting (repeatable)");
  seg_cmd->add_flag("--no-timings", seg.no_timings, "Omit wall-clock timings from the result");
  const std::pair<const char*, const char*> mirrored[] = {
      {"seed", "--seed"},           {"chains", "--chains"},
      {"iterations", "--iterations"}, {"L", "--L"},
      {"select_window", "--select-window"}, {"burn_in", "--burn-in"},
      {"thin", "--thin"},           {"sticky", "--sticky"},
      {"resample_hyperparameters", "--resample-hyperparameters"},
  };
  std::vector<std::string> mirrored_values(std::size(mirrored));
  std::vector<CLI::Option*> mirrored_options;
  for (std::size_t i = 0; i < std::size(mirrored); ++i) {
    mirrored_options.push_back(seg_cmd->add_option(
        mirrored[i].second, mirrored_values[i],
        std::string("Overrides config key ") + mirrored[i].first));
  }

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare predicted and true labels");
  eval_cmd->add_option("--pred", ev.pred, "Predicted labels CSV or result JSON")->required();
  eval_cmd->add_option("--truth", ev.truth, "True labels CSV")->required();
  eval_cmd->add_option("--out", ev.out, "Metrics JSON ('-' for stdout)")->default_val("-");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitSuccess : kExitUsage;
  }

  try {
    if (*synth_cmd) return cmd_synth(synth, out);
    if (*seg_cmd) {
      for (std::size_t i = 0; i < mirrored_options.size(); ++i) {
        if (mirrored_options[i]->count() > 0) seg.overrides.emplace_back(mirrored[i].first, mirrored_values[i]);
      }
      return cmd_segment(seg, out);
    }
    return cmd_eval(ev, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const ParameterDomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const LinAlgError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << '\n';
    return kExitNumerical;
  }
}

}  // namespace slds

#include "slds/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <set>

#include <json.hpp>

#include "slds/error.hpp"
#include "slds/io.hpp"

namespace slds {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::string key_error(std::string_view key, const std::string& detail) {
  return "config key '" + std::string(key) + "': " + detail;
}

int parse_int_value(std::string_view key, std::string_view value) {
  const long long v = parse_integer(value, key_error(key, "value"));
  if (v < -2147483647LL || v > 2147483647LL) throw ValidationError(key_error(key, "out of range"));
  return static_cast<int>(v);
}

std::uint64_t parse_seed(std::string_view key, std::string_view value) {
  value = trim(value);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || ptr != value.data() + value.size()) {
    throw ValidationError(key_error(key, "'" + std::string(value) + "' is not a 64-bit unsigned integer"));
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  value = trim(value);
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ValidationError(key_error(key, "'" + std::string(value) + "' is not a boolean"));
}

double parse_real(std::string_view key, std::string_view value) {
  return parse_double(value, key_error(key, "value"));
}

MatrixXd parse_rows(std::string_view key, std::string_view value) {
  std::vector<std::vector<double>> rows;
  std::size_t start = 0;
  while (true) {
    const auto pos = value.find(';', start);
    const auto row_text = value.substr(start, pos == std::string_view::npos ? pos : pos - start);
    std::vector<double> row;
    std::size_t s = 0;
    while (true) {
      const auto comma = row_text.find(',', s);
      row.push_back(parse_real(key, row_text.substr(s, comma == std::string_view::npos ? comma : comma - s)));
      if (comma == std::string_view::npos) break;
      s = comma + 1;
    }
    if (!rows.empty() && row.size() != rows[0].size()) {
      throw ValidationError(key_error(key, "matrix rows have different lengths"));
    }
    rows.push_back(std::move(row));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return m;
}

MatrixSetting parse_matrix_setting(std::string_view key, std::string_view value) {
  MatrixSetting out;
  if (value.find_first_of(",;") == std::string_view::npos) {
    out.scalar = parse_real(key, value);
  } else {
    out.explicit_value = parse_rows(key, value);
  }
  return out;
}

VectorXd parse_vector(std::string_view key, std::string_view value) {
  if (value.find(';') != std::string_view::npos) {
    throw ValidationError(key_error(key, "expected a comma-separated vector"));
  }
  return parse_rows(key, value).row(0).transpose();
}

MatrixXd resolve_setting(const std::optional<MatrixSetting>& s, const MatrixXd& fallback,
                         std::string_view key) {
  if (!s) return fallback;
  const MatrixXd m = s->resolve(static_cast<int>(fallback.rows()));
  if (m.rows() != fallback.rows() || m.cols() != fallback.cols()) {
    throw ValidationError(key_error(key, "expected a " + std::to_string(fallback.rows()) + "x" +
                                             std::to_string(fallback.cols()) + " matrix"));
  }
  return m;
}

}  // namespace

MatrixXd MatrixSetting::resolve(int dim) const {
  if (scalar) return *scalar * MatrixXd::Identity(dim, dim);
  return explicit_value;
}

KeyValues parse_key_values(std::string_view text, std::string_view source) {
  KeyValues out;
  std::set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ValidationError(where + ": expected key = value");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ValidationError(where + ": empty key");
    if (value.empty()) throw ValidationError(where + ": empty value for key '" + key + "'");
    if (!seen.insert(key).second) throw ValidationError(where + ": repeated key '" + key + "'");
    out.emplace_back(key, value);
  }
  return out;
}

void RunConfig::set(std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "L") L = parse_int_value(key, value);
  else if (key == "iterations") iterations = parse_int_value(key, value);
  else if (key == "select_window") select_window = parse_int_value(key, value);
  else if (key == "burn_in") burn_in = parse_int_value(key, value);
  else if (key == "thin") thin = parse_int_value(key, value);
  else if (key == "seed") seed = parse_seed(key, value);
  else if (key == "chains") chains = parse_int_value(key, value);
  else if (key == "priors.a") priors.a = parse_real(key, value);
  else if (key == "priors.b") priors.b = parse_real(key, value);
  else if (key == "priors.c") priors.c = parse_real(key, value);
  else if (key == "priors.d") priors.d = parse_real(key, value);
  else if (key == "priors.e") priors.e = parse_real(key, value);
  else if (key == "priors.f") priors.f = parse_real(key, value);
  else if (key == "resample_hyperparameters") resample_hyperparameters = parse_bool(key, value);
  else if (key == "sticky") sticky = parse_bool(key, value);
  else if (key == "R") R = parse_matrix_setting(key, value);
  else if (key == "C") {
    if (value == "identity") C.reset();
    else C = parse_rows(key, value);
  }
  else if (key == "x0_mean") x0_mean = parse_vector(key, value);
  else if (key == "x0_cov") x0_cov = parse_matrix_setting(key, value);
  else if (key == "mniw.M") mniw_M = parse_matrix_setting(key, value);
  else if (key == "mniw.K") mniw_K = parse_matrix_setting(key, value);
  else if (key == "mniw.n0") mniw_n0 = parse_real(key, value);
  else if (key == "mniw.S0") mniw_S0 = parse_matrix_setting(key, value);
  else throw ValidationError("unknown config key '" + std::string(key) + "'");
}

void RunConfig::apply(const KeyValues& values) {
  for (const auto& [k, v] : values) set(k, v);
}

void RunConfig::validate() const {
  if (chains < 1) throw ValidationError(key_error("chains", "must be at least 1"));
  if (burn_in < 0) throw ValidationError(key_error("burn_in", "must be nonnegative"));
  if (thin < 0) throw ValidationError(key_error("thin", "must be nonnegative"));
  if (L < 1) throw ValidationError(key_error("L", "must be at least 1"));
  if (iterations < 0) throw ValidationError(key_error("iterations", "must be nonnegative"));
  if (select_window < 1 || select_window > iterations + 1) {
    throw ValidationError(key_error("select_window", "must lie in [1, iterations + 1]"));
  }
  const std::pair<const char*, double> prior_values[] = {
      {"priors.a", priors.a}, {"priors.b", priors.b}, {"priors.c", priors.c},
      {"priors.d", priors.d}, {"priors.e", priors.e}, {"priors.f", priors.f}};
  for (const auto& [name, v] : prior_values) {
    if (!(v > 0.0)) throw ValidationError(key_error(name, "must be positive"));
  }
}

SamplerConfig RunConfig::sampler_config(const MatrixXd& y) const {
  validate();
  const int obs_dim = static_cast<int>(y.cols());
  SamplerConfig cfg;
  cfg.L = L;
  cfg.iterations = iterations;
  cfg.select_window = select_window;
  cfg.burn_in = burn_in;
  cfg.thin = thin;
  cfg.priors = priors;
  cfg.resample_hyperparameters = resample_hyperparameters;
  cfg.sticky = sticky;

  cfg.C = C ? *C : MatrixXd::Identity(obs_dim, obs_dim);
  if (cfg.C.rows() != obs_dim) {
    throw ValidationError(key_error("C", "row count differs from the observation dimension " +
                                             std::to_string(obs_dim)));
  }
  const int dim = static_cast<int>(cfg.C.cols());
  cfg.R = resolve_setting(R, 1e-4 * MatrixXd::Identity(obs_dim, obs_dim), "R");

  MniwPrior prior = MniwPrior::defaults(dim);
  prior.M = resolve_setting(mniw_M, prior.M, "mniw.M");
  prior.K = resolve_setting(mniw_K, prior.K, "mniw.K");
  prior.S0 = resolve_setting(mniw_S0, prior.S0, "mniw.S0");
  if (mniw_n0) prior.n0 = *mniw_n0;
  cfg.mniw = prior;

  const ObsModel obs{cfg.C, cfg.R};
  obs.validate();
  InitialStatePrior init = InitialStatePrior::from_first_observation(y, obs);
  if (x0_mean) {
    if (x0_mean->size() != dim) {
      throw ValidationError(key_error("x0_mean", "expected " + std::to_string(dim) + " entries"));
    }
    init.mean = *x0_mean;
  }
  init.cov = resolve_setting(x0_cov, init.cov, "x0_cov");
  cfg.init = init;
  cfg.validate();
  return cfg;
}

KeyValues load_config_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos || text[first] != '{') return parse_key_values(text, path.string());

  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path.string() + ": invalid JSON: " + e.what());
  }
  if (!doc.contains("config_echo") || !doc["config_echo"].is_object()) {
    throw ValidationError(path.string() + ": JSON config must contain a config_echo object");
  }
  KeyValues out;
  for (const auto& [key, value] : doc["config_echo"].items()) {
    if (!value.is_string()) throw ValidationError(key_error(key, "echoed value must be a string"));
    out.emplace_back(key, value.get<std::string>());
  }
  return out;
}

std::string format_matrix(const MatrixXd& m) {
  std::string out;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    if (r > 0) out += ';';
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(m(r, c));
    }
  }
  return out;
}

std::string format_vector(const VectorXd& v) {
  std::string out;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format_double(v[i]);
  }
  return out;
}

KeyValues echo_config(const SamplerConfig& resolved, std::uint64_t seed, int chains) {
  if (!resolved.mniw || !resolved.init || resolved.C.size() == 0 || resolved.R.size() == 0) {
    throw ValidationError("echo_config needs a fully resolved configuration");
  }
  const auto& p = resolved.priors;
  const auto& m = *resolved.mniw;
  return {
      {"L", std::to_string(resolved.L)},
      {"iterations", std::to_string(resolved.iterations)},
      {"select_window", std::to_string(resolved.select_window)},
      {"burn_in", std::to_string(resolved.burn_in)},
      {"thin", std::to_string(resolved.thin)},
      {"seed", std::to_string(seed)},
      {"chains", std::to_string(chains)},
      {"priors.a", format_double(p.a)},
      {"priors.b", format_double(p.b)},
      {"priors.c", format_double(p.c)},
      {"priors.d", format_double(p.d)},
      {"priors.e", format_double(p.e)},
      {"priors.f", format_double(p.f)},
      {"resample_hyperparameters", resolved.resample_hyperparameters ? "true" : "false"},
      {"sticky", resolved.sticky ? "true" : "false"},
      {"R", format_matrix(resolved.R)},
      {"C", format_matrix(resolved.C)},
      {"x0_mean", format_vector(resolved.init->mean)},
      {"x0_cov", format_matrix(resolved.init->cov)},
      {"mniw.M", format_matrix(m.M)},
      {"mniw.K", format_matrix(m.K)},
      {"mniw.n0", format_double(m.n0)},
      {"mniw.S0", format_matrix(m.S0)},
  };
}

}  // namespace slds

#include "slds/io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "slds/error.hpp"

namespace slds {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? pos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

bool try_parse(std::string_view text, double& value) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return false;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

}  // namespace

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

double parse_double(std::string_view text, std::string_view what) {
  double value = 0.0;
  if (!try_parse(text, value)) {
    throw ValidationError(std::string(what) + ": '" + std::string(trim(text)) + "' is not a number");
  }
  return value;
}

long long parse_integer(std::string_view text, std::string_view what) {
  text = trim(text);
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ValidationError(std::string(what) + ": '" + std::string(text) + "' is not an integer");
  }
  return value;
}

CsvTable parse_csv(std::string_view text, std::string_view source) {
  CsvTable table;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty()) continue;

    const auto fields = split(line, ',');
    std::vector<double> row(fields.size());
    bool numeric = true;
    for (std::size_t c = 0; c < fields.size(); ++c) numeric = numeric && try_parse(fields[c], row[c]);

    const std::string where = std::string(source) + " line " + std::to_string(line_no);
    if (!numeric) {
      if (!rows.empty() || !table.header.empty()) {
        throw ValidationError(where + ": non-numeric field");
      }
      for (auto f : fields) table.header.emplace_back(f);
      continue;
    }
    const std::size_t width = table.header.empty() ? (rows.empty() ? row.size() : rows[0].size())
                                                    : table.header.size();
    if (row.size() != width) {
      throw ValidationError(where + ": expected " + std::to_string(width) + " columns, found " +
                            std::to_string(row.size()));
    }
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!std::isfinite(row[c])) {
        throw ValidationError(where + ": non-finite value in column " + std::to_string(c + 1));
      }
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw ValidationError(std::string(source) + ": no data rows");

  table.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows[0].size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t c = 0; c < rows[r].size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    }
  }
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
  return parse_csv(read_text_file(path), path.string());
}

std::vector<int> read_labels(const std::filesystem::path& path) {
  const auto table = read_csv(path);
  if (table.values.cols() != 1) {
    throw ValidationError(path.string() + ": label file must have exactly one column");
  }
  std::vector<int> labels(static_cast<std::size_t>(table.values.rows()));
  for (Eigen::Index t = 0; t < table.values.rows(); ++t) {
    const double v = table.values(t, 0);
    if (v != std::round(v) || std::abs(v) > 1e9) {
      throw ValidationError(path.string() + ": label on data row " + std::to_string(t + 1) +
                            " is not an integer");
    }
    labels[static_cast<std::size_t>(t)] = static_cast<int>(v);
  }
  return labels;
}

std::string matrix_to_csv(const Eigen::MatrixXd& values, const std::vector<std::string>& header) {
  std::string out;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c > 0) out += ',';
    out += header[c];
  }
  if (!header.empty()) out += '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) {
      if (c > 0) out += ',';
      out += format_double(values(r, c));
    }
    out += '\n';
  }
  return out;
}

std::string labels_to_csv(const std::vector<int>& labels) {
  std::string out;
  for (int z : labels) {
    out += std::to_string(z);
    out += '\n';
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace slds

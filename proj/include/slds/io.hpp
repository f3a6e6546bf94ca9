#pragma once

// Plain-text trajectory and label files.
//
// CSV files hold one time step per row, comma-separated decimal numbers, with
// an optional single header row. Values are written in shortest round-trip
// form, so reading a written file reproduces every double exactly.

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace slds {

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

/// Parses a complete decimal number (surrounding spaces allowed).
/// Throws ValidationError naming `what` on failure.
double parse_double(std::string_view text, std::string_view what);
long long parse_integer(std::string_view text, std::string_view what);

struct CsvTable {
  std::vector<std::string> header;  // empty when the file has no header row
  Eigen::MatrixXd values;
};

/// Parses CSV text. A first row containing any non-numeric field is treated
/// as a header. Rows must have equal width and all values must be finite.
CsvTable parse_csv(std::string_view text, std::string_view source);

CsvTable read_csv(const std::filesystem::path& path);

/// Labels from a single-column CSV of integers.
std::vector<int> read_labels(const std::filesystem::path& path);

std::string matrix_to_csv(const Eigen::MatrixXd& values, const std::vector<std::string>& header = {});
std::string labels_to_csv(const std::vector<int>& labels);

/// Reads a whole file; throws IoError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Writes (replacing) a whole file; throws IoError on failure.
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace slds

#pragma once

#include "subcpd/simulation.hpp"
#include "subcpd/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace subcpd {

/// Malformed CSV input; line and column are one-based file coordinates.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line, std::size_t column)
      : Error(what), line_(line), column_(column) {}

  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

struct CsvOptions {
  bool has_header = false;
  /// One-based column holding timestamps, dropped on load.
  std::optional<std::size_t> time_column;
  char delimiter = ',';
};

/// Reads a row-per-time-point table into a p x n matrix.
TimeSeriesMatrix parse_csv(std::string_view text, const CsvOptions& options = {});
TimeSeriesMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options = {});

/// Row-per-time-point CSV with round-trip precision.
std::string series_to_csv(const TimeSeriesMatrix& X);

struct Standardized {
  TimeSeriesMatrix data;
  /// Rows with zero sample deviation; centred but not scaled.
  std::vector<Index> constant_rows;
};

/// Centres every variable and scales it to unit sample standard deviation.
Standardized standardize(const TimeSeriesMatrix& X);

/// Writes through a temporary file in the same directory, then renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string read_file(const std::filesystem::path& path);

nlohmann::json ground_truth_to_json(const SyntheticSpec& spec, const GroundTruth& truth);

}  // namespace subcpd

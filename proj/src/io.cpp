#include "subcpd/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

namespace subcpd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) {
    return {};
  }
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  for (;;) {
    const auto pos = line.find(delimiter, start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

std::string format_double(double v) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, result.ptr);
}

}  // namespace

TimeSeriesMatrix parse_csv(std::string_view text, const CsvOptions& options) {
  std::vector<std::vector<double>> rows;
  std::size_t expected = 0;
  std::size_t line_number = 0;
  bool header_pending = options.has_header;

  while (!text.empty()) {
    const auto newline = text.find('\n');
    const std::string_view raw = text.substr(0, newline);
    text = newline == std::string_view::npos ? std::string_view{} : text.substr(newline + 1);
    ++line_number;
    if (trim(raw).empty()) {
      continue;
    }
    const std::vector<std::string_view> cells = split(raw, options.delimiter);
    if (header_pending) {
      header_pending = false;
      expected = cells.size();
      continue;
    }
    if (expected == 0) {
      expected = cells.size();
    } else if (cells.size() != expected) {
      throw ParseError("line " + std::to_string(line_number) + " has " + std::to_string(cells.size()) +
                           " columns, expected " + std::to_string(expected),
                       line_number, cells.size());
    }
    if (options.time_column && (*options.time_column < 1 || *options.time_column > cells.size())) {
      throw ParseError("time column " + std::to_string(*options.time_column) + " does not exist", line_number,
                       *options.time_column);
    }
    std::vector<double> values;
    values.reserve(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (options.time_column && c + 1 == *options.time_column) {
        continue;
      }
      const std::string_view cell = cells[c];
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
      if (cell.empty() || ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value)) {
        throw ParseError("non-numeric cell '" + std::string(cell) + "' at (" + std::to_string(line_number) + ", " +
                             std::to_string(c + 1) + ")",
                         line_number, c + 1);
      }
      values.push_back(value);
    }
    rows.push_back(std::move(values));
  }

  if (rows.empty() || rows.front().empty()) {
    throw ParseError("no numeric data in input", line_number, 0);
  }
  const Index n = static_cast<Index>(rows.size());
  const Index p = static_cast<Index>(rows.front().size());
  MatrixXd X(p, n);
  for (Index t = 0; t < n; ++t) {
    for (Index r = 0; r < p; ++r) {
      X(r, t) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(r)];
    }
  }
  return TimeSeriesMatrix(std::move(X));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error("cannot open '" + path.string() + "'");
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

TimeSeriesMatrix load_csv(const std::filesystem::path& path, const CsvOptions& options) {
  return parse_csv(read_file(path), options);
}

std::string series_to_csv(const TimeSeriesMatrix& X) {
  std::string out;
  const MatrixXd& values = X.values();
  for (Index t = 0; t < X.length(); ++t) {
    for (Index r = 0; r < X.dims(); ++r) {
      if (r > 0) {
        out += ',';
      }
      out += format_double(values(r, t));
    }
    out += '\n';
  }
  return out;
}

Standardized standardize(const TimeSeriesMatrix& X) {
  const Index n = X.length();
  if (n < 2) {
    throw DimensionError("standardisation needs at least two time points");
  }
  MatrixXd values = X.values();
  std::vector<Index> constant_rows;
  for (Index r = 0; r < values.rows(); ++r) {
    const double mean = values.row(r).mean();
    values.row(r).array() -= mean;
    const double sd = std::sqrt(values.row(r).squaredNorm() / static_cast<double>(n - 1));
    if (sd > 0.0) {
      values.row(r) /= sd;
    } else {
      values.row(r).setZero();
      constant_rows.push_back(r);
    }
  }
  return {TimeSeriesMatrix(std::move(values)), std::move(constant_rows)};
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot write '" + tmp.string() + "'");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw Error("failed writing '" + tmp.string() + "'");
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error("cannot move output into '" + path.string() + "'");
  }
}

nlohmann::json ground_truth_to_json(const SyntheticSpec& spec, const GroundTruth& truth) {
  return {{"n", spec.n},
          {"p", spec.p},
          {"d", spec.d},
          {"changepoints", truth.changepoints},
          {"delta", spec.delta},
          {"scenario", to_string(spec.noise.scenario)},
          {"sigma", truth.sigma},
          {"seed", spec.seed},
          {"labels", truth.labels}};
}

}  // namespace subcpd

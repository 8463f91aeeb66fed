#pragma once

#include "subcpd/detection.hpp"
#include "subcpd/io.hpp"
#include "subcpd/tuning.hpp"
#include "subcpd/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace subcpd {

inline constexpr const char* kVersion = "0.1.0";

/// A module error tagged with the pipeline stage that raised it.
class StageError : public Error {
 public:
  StageError(std::string stage, std::string kind, const std::string& message)
      : Error(stage + ": " + message), stage_(std::move(stage)), kind_(std::move(kind)) {}

  const std::string& stage() const { return stage_; }
  /// "config", "parse", "dimension", "numerical", "insufficient_splits", "io" or "error".
  const std::string& kind() const { return kind_; }

 private:
  std::string stage_;
  std::string kind_;
};

enum class OutputFormat { Json, Csv };

OutputFormat parse_format(const std::string& name);

struct RunConfig {
  std::filesystem::path input;
  CsvOptions csv;
  bool standardize = false;
  std::optional<int> d;
  std::optional<double> lambda;
  std::optional<double> mu;
  std::optional<int> known_k;
  int msl = 30;
  bool grid_mode = false;
  int refine_window = 10;
  int tau_max = 15;
  std::uint64_t seed = 0;
  double init_fraction = 0.2;
  std::optional<int> d_max;
  int max_iters = SolverOptions{}.max_iters;
  double rel_tol = SolverOptions{}.rel_tol;
  std::filesystem::path output;
  OutputFormat format = OutputFormat::Json;

  /// mu and known_k are mutually exclusive; neither means slope-heuristic mu.
  void validate() const;
  nlohmann::json echo() const;
};

struct SegmentSummary {
  Index start = 0;  // one-based, inclusive
  Index end = 0;    // one-based, inclusive
  int dim = 0;
  double fit = 0.0;
  double nuclear = 0.0;
  double regularized = 0.0;

  friend bool operator==(const SegmentSummary&, const SegmentSummary&) = default;
};

struct LossCurvePoint {
  int k = 0;
  double loss = 0.0;
  double penalized = 0.0;

  friend bool operator==(const LossCurvePoint&, const LossCurvePoint&) = default;
};

struct ResultDocument {
  Index p = 0;
  Index n = 0;
  /// One-based; each marks the last time point of the segment to its left.
  std::vector<Index> changepoints;
  double lambda = 0.0;
  double mu = 0.0;
  int d = 1;
  std::string d_source;
  std::string lambda_source;
  std::string mu_source;
  std::vector<SegmentSummary> segments;
  std::vector<LossCurvePoint> loss_curve;
  std::vector<ScanProfile> scan_profiles;
  std::vector<std::string> warnings;
  nlohmann::json config;
  std::uint64_t seed = 0;
  std::string version = kVersion;

  friend bool operator==(const ResultDocument&, const ResultDocument&) = default;
};

void to_json(nlohmann::json& j, const ResultDocument& doc);
void from_json(const nlohmann::json& j, ResultDocument& doc);

std::string result_to_json(const ResultDocument& doc);
ResultDocument result_from_json(const std::string& text);

/// One row per segment.
std::string segments_to_csv(const ResultDocument& doc);
std::string loss_curve_to_csv(const ResultDocument& doc);
/// Long format: level, segment bounds, candidate, statistic.
std::string scan_profiles_to_csv(const ResultDocument& doc);

/// Load, optionally standardise, resolve d, lambda and mu, then segment.
ResultDocument run_detect(const RunConfig& cfg);
/// The same pipeline on an in-memory series.
ResultDocument run_detect(const TimeSeriesMatrix& X, const RunConfig& cfg);

struct TuneReport {
  Index p = 0;
  Index n = 0;
  int d = 1;
  std::string d_source;
  std::optional<DimEstimate> dim_estimate;
  double sigma = 0.0;
  double lambda = 0.0;
  std::string lambda_source;
  double mu = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<LossCurvePoint> loss_curve;
  std::vector<std::string> warnings;
  nlohmann::json config;
};

/// Estimates lambda, mu and d without the final segmentation.
TuneReport run_tune(const RunConfig& cfg);
TuneReport run_tune(const TimeSeriesMatrix& X, const RunConfig& cfg);

std::string tune_to_json(const TuneReport& report);

}  // namespace subcpd

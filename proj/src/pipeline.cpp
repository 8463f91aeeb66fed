#include "subcpd/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

namespace subcpd {

namespace {

template <typename F>
auto in_stage(const char* stage, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const StageError&) {
    throw;
  } catch (const ConfigError& e) {
    throw StageError(stage, "config", e.what());
  } catch (const ParseError& e) {
    throw StageError(stage, "parse", e.what());
  } catch (const DimensionError& e) {
    throw StageError(stage, "dimension", e.what());
  } catch (const NumericalError& e) {
    throw StageError(stage, "numerical", e.what());
  } catch (const InsufficientSplitsError& e) {
    throw StageError(stage, "insufficient_splits", e.what());
  } catch (const std::exception& e) {
    throw StageError(stage, "error", e.what());
  }
}

std::string format_double(double v) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof(buffer), v);
  return std::string(buffer, result.ptr);
}

SolverOptions solver_options(const RunConfig& cfg) {
  SolverOptions solver;
  solver.max_iters = cfg.max_iters;
  solver.rel_tol = cfg.rel_tol;
  solver.seed = cfg.seed;
  return solver;
}

// The series after the optional standardisation step.
TimeSeriesMatrix prepare(const TimeSeriesMatrix& X, const RunConfig& cfg, std::vector<std::string>& warnings) {
  if (!cfg.standardize) {
    return X;
  }
  return in_stage("standardize", [&] {
    Standardized out = standardize(X);
    for (Index r : out.constant_rows) {
      warnings.push_back("variable " + std::to_string(r + 1) + " is constant; centred but not scaled");
    }
    return std::move(out.data);
  });
}

struct ResolvedDim {
  int d = 1;
  std::string source;
  std::optional<DimEstimate> estimate;
};

ResolvedDim resolve_dim(const TimeSeriesMatrix& X, const RunConfig& cfg, std::vector<std::string>& warnings) {
  return in_stage("dimension", [&] {
    ResolvedDim out;
    if (cfg.d) {
      if (*cfg.d < 1 || *cfg.d > X.dims()) {
        throw ConfigError("d = " + std::to_string(*cfg.d) + " must lie in [1, p = " + std::to_string(X.dims()) + "]");
      }
      out.d = *cfg.d;
      out.source = "given";
      return out;
    }
    if (X.dims() < 2) {
      out.d = 1;
      out.source = "univariate";
      return out;
    }
    const int d_max = cfg.d_max.value_or(default_max_dim(X.dims()));
    DimEstimate est = estimate_dim(X, cfg.init_fraction, d_max);
    out.d = est.d_hat;
    out.source = "estimated";
    if (est.low_confidence) {
      warnings.push_back("dimension estimate has low confidence (smallest eigenvalue ratio above 0.5)");
    }
    if (est.short_window) {
      warnings.push_back("initial window has fewer time points than variables");
    }
    out.estimate = std::move(est);
    return out;
  });
}

struct ResolvedLambda {
  double lambda = 0.0;
  double sigma = 0.0;
  std::string source;
};

ResolvedLambda resolve_lambda(const TimeSeriesMatrix& X, const RunConfig& cfg, std::vector<std::string>& warnings) {
  return in_stage("lambda", [&] {
    ResolvedLambda out;
    if (cfg.lambda) {
      if (!(*cfg.lambda >= 0.0) || !std::isfinite(*cfg.lambda)) {
        throw ConfigError("lambda must be a non-negative finite number");
      }
      out.lambda = *cfg.lambda;
      out.source = "given";
      return out;
    }
    const NoiseScale scale = estimate_lambda(X);
    out.sigma = scale.sigma;
    out.lambda = scale.degenerate ? 0.0 : scale.lambda;
    out.source = "estimated";
    if (scale.degenerate) {
      warnings.push_back("noise scale estimate is zero; lambda set to 0");
    }
    return out;
  });
}

std::vector<LossCurvePoint> curve_points(const std::vector<double>& loss, double mu, Index n) {
  const std::vector<double> penalized = penalized_curve(loss, mu, n);
  std::vector<LossCurvePoint> out;
  for (std::size_t k = 0; k < loss.size(); ++k) {
    out.push_back({static_cast<int>(k), loss[k], penalized[k]});
  }
  return out;
}

// Slope-heuristic mu, except when no split lowers the fit loss at all: then
// no mu >= 0 can accept a change and the curve has nothing to regress.
SlopeFit calibrate_mu(const Detector& detector, int tau_max, std::vector<std::string>& warnings) {
  const FixedKResult greedy = detector.detect_fixed_k(tau_max);
  if (greedy.exhausted && greedy.segmentation.changepoints.empty()) {
    warnings.push_back("no admissible split lowers the fit loss; mu set to 0");
    SlopeFit fit;
    fit.loss_curve = greedy.loss_curve;
    return fit;
  }
  return slope_heuristic_mu(detector, tau_max);
}

nlohmann::json profile_json(const ScanProfile& profile) {
  return {{"start", profile.segment.begin + 1},
          {"end", profile.segment.end},
          {"level", profile.level},
          {"candidates", profile.candidates},
          {"statistics", profile.statistics}};
}

ScanProfile profile_from_json(const nlohmann::json& j) {
  ScanProfile profile;
  profile.segment = {j.at("start").get<Index>() - 1, j.at("end").get<Index>()};
  profile.level = j.at("level").get<int>();
  profile.candidates = j.at("candidates").get<std::vector<Index>>();
  profile.statistics = j.at("statistics").get<std::vector<double>>();
  return profile;
}

}  // namespace

OutputFormat parse_format(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "json") {
    return OutputFormat::Json;
  }
  if (lower == "csv") {
    return OutputFormat::Csv;
  }
  throw ConfigError("unknown output format '" + name + "' (expected json or csv)");
}

void RunConfig::validate() const {
  if (mu && known_k) {
    throw ConfigError("mu and known_k are mutually exclusive");
  }
  if (mu && (!(*mu >= 0.0) || !std::isfinite(*mu))) {
    throw ConfigError("mu must be a non-negative finite number");
  }
  if (known_k && *known_k < 1) {
    throw ConfigError("known_k must be >= 1");
  }
  if (msl < 1) {
    throw ConfigError("msl must be >= 1");
  }
  if (!mu && !known_k && tau_max < 5) {
    throw ConfigError("tau_max must be >= 5 for the slope heuristic");
  }
  if (!d && (!(init_fraction > 0.0) || init_fraction > 1.0)) {
    throw ConfigError("init_fraction must lie in (0, 1]");
  }
  solver_options(*this).validate();
}

nlohmann::json RunConfig::echo() const {
  nlohmann::json j;
  j["input"] = input.generic_string();
  j["has_header"] = csv.has_header;
  j["time_column"] = csv.time_column ? nlohmann::json(*csv.time_column) : nlohmann::json(nullptr);
  j["standardize"] = standardize;
  j["d"] = d ? nlohmann::json(*d) : nlohmann::json("auto");
  j["lambda"] = lambda ? nlohmann::json(*lambda) : nlohmann::json("auto");
  j["mu"] = mu ? nlohmann::json(*mu) : (known_k ? nlohmann::json(nullptr) : nlohmann::json("auto"));
  j["known_k"] = known_k ? nlohmann::json(*known_k) : nlohmann::json(nullptr);
  j["msl"] = msl;
  j["grid"] = grid_mode;
  j["refine_window"] = refine_window;
  j["tau_max"] = tau_max;
  j["seed"] = seed;
  j["init_fraction"] = init_fraction;
  j["d_max"] = d_max ? nlohmann::json(*d_max) : nlohmann::json(nullptr);
  j["max_iters"] = max_iters;
  j["rel_tol"] = rel_tol;
  return j;
}

void to_json(nlohmann::json& j, const ResultDocument& doc) {
  nlohmann::json segments = nlohmann::json::array();
  for (const SegmentSummary& s : doc.segments) {
    segments.push_back({{"start", s.start},
                        {"end", s.end},
                        {"dim", s.dim},
                        {"fit", s.fit},
                        {"nuclear", s.nuclear},
                        {"regularized", s.regularized}});
  }
  nlohmann::json curve = nlohmann::json::array();
  for (const LossCurvePoint& pt : doc.loss_curve) {
    curve.push_back({{"k", pt.k}, {"loss", pt.loss}, {"penalized", pt.penalized}});
  }
  nlohmann::json profiles = nlohmann::json::array();
  for (const ScanProfile& profile : doc.scan_profiles) {
    profiles.push_back(profile_json(profile));
  }
  j = {{"changepoints", doc.changepoints},
       {"lambda", doc.lambda},
       {"mu", doc.mu},
       {"d", doc.d},
       {"p", doc.p},
       {"n", doc.n},
       {"sources", {{"d", doc.d_source}, {"lambda", doc.lambda_source}, {"mu", doc.mu_source}}},
       {"segments", std::move(segments)},
       {"loss_curve", std::move(curve)},
       {"scan_profiles", std::move(profiles)},
       {"warnings", doc.warnings},
       {"config", doc.config},
       {"seed", doc.seed},
       {"version", doc.version}};
}

void from_json(const nlohmann::json& j, ResultDocument& doc) {
  doc = ResultDocument{};
  doc.changepoints = j.at("changepoints").get<std::vector<Index>>();
  doc.lambda = j.at("lambda").get<double>();
  doc.mu = j.at("mu").get<double>();
  doc.d = j.at("d").get<int>();
  doc.p = j.at("p").get<Index>();
  doc.n = j.at("n").get<Index>();
  const nlohmann::json& sources = j.at("sources");
  doc.d_source = sources.at("d").get<std::string>();
  doc.lambda_source = sources.at("lambda").get<std::string>();
  doc.mu_source = sources.at("mu").get<std::string>();
  for (const nlohmann::json& s : j.at("segments")) {
    doc.segments.push_back({s.at("start").get<Index>(), s.at("end").get<Index>(), s.at("dim").get<int>(),
                            s.at("fit").get<double>(), s.at("nuclear").get<double>(),
                            s.at("regularized").get<double>()});
  }
  for (const nlohmann::json& pt : j.at("loss_curve")) {
    doc.loss_curve.push_back({pt.at("k").get<int>(), pt.at("loss").get<double>(), pt.at("penalized").get<double>()});
  }
  for (const nlohmann::json& profile : j.at("scan_profiles")) {
    doc.scan_profiles.push_back(profile_from_json(profile));
  }
  doc.warnings = j.at("warnings").get<std::vector<std::string>>();
  doc.config = j.at("config");
  doc.seed = j.at("seed").get<std::uint64_t>();
  doc.version = j.at("version").get<std::string>();
}

std::string result_to_json(const ResultDocument& doc) { return nlohmann::json(doc).dump(2) + "\n"; }

ResultDocument result_from_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text).get<ResultDocument>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed result document: ") + e.what());
  }
}

std::string segments_to_csv(const ResultDocument& doc) {
  std::string out = "segment,start,end,dim,fit,nuclear,regularized\n";
  for (std::size_t i = 0; i < doc.segments.size(); ++i) {
    const SegmentSummary& s = doc.segments[i];
    out += std::to_string(i + 1) + ',' + std::to_string(s.start) + ',' + std::to_string(s.end) + ',' +
           std::to_string(s.dim) + ',' + format_double(s.fit) + ',' + format_double(s.nuclear) + ',' +
           format_double(s.regularized) + '\n';
  }
  return out;
}

std::string loss_curve_to_csv(const ResultDocument& doc) {
  std::string out = "k,loss,penalized\n";
  for (const LossCurvePoint& pt : doc.loss_curve) {
    out += std::to_string(pt.k) + ',' + format_double(pt.loss) + ',' + format_double(pt.penalized) + '\n';
  }
  return out;
}

std::string scan_profiles_to_csv(const ResultDocument& doc) {
  std::string out = "level,start,end,candidate,statistic\n";
  for (const ScanProfile& profile : doc.scan_profiles) {
    for (std::size_t i = 0; i < profile.candidates.size(); ++i) {
      out += std::to_string(profile.level) + ',' + std::to_string(profile.segment.begin + 1) + ',' +
             std::to_string(profile.segment.end) + ',' + std::to_string(profile.candidates[i]) + ',' +
             format_double(profile.statistics[i]) + '\n';
    }
  }
  return out;
}

ResultDocument run_detect(const RunConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  const TimeSeriesMatrix X = in_stage("load", [&] { return load_csv(cfg.input, cfg.csv); });
  return run_detect(X, cfg);
}

ResultDocument run_detect(const TimeSeriesMatrix& input, const RunConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  ResultDocument doc;
  doc.config = cfg.echo();
  doc.seed = cfg.seed;

  const TimeSeriesMatrix X = prepare(input, cfg, doc.warnings);
  doc.p = X.dims();
  doc.n = X.length();

  const ResolvedDim dim = resolve_dim(X, cfg, doc.warnings);
  doc.d = dim.d;
  doc.d_source = dim.source;

  const ResolvedLambda lam = resolve_lambda(X, cfg, doc.warnings);
  doc.lambda = lam.lambda;
  doc.lambda_source = lam.source;

  const Detector detector = in_stage("detect", [&] {
    DetectionConfig dc;
    dc.d = doc.d;
    dc.lambda = doc.lambda;
    dc.msl = cfg.msl;
    dc.grid_mode = cfg.grid_mode;
    dc.refine_window = cfg.refine_window;
    dc.solver = solver_options(cfg);
    return Detector(X, dc);
  });

  SegmentationResult seg;
  if (cfg.known_k) {
    doc.mu = 0.0;
    doc.mu_source = "known_k";
    const FixedKResult fixed = in_stage("detect", [&] { return detector.detect_fixed_k(*cfg.known_k); });
    if (fixed.exhausted) {
      doc.warnings.push_back("admissible splits ran out after " +
                             std::to_string(fixed.segmentation.changepoints.size()) + " of " +
                             std::to_string(*cfg.known_k) + " changes");
    }
    doc.loss_curve = curve_points(fixed.loss_curve, 0.0, doc.n);
    seg = fixed.segmentation;
  } else {
    if (cfg.mu) {
      doc.mu = *cfg.mu;
      doc.mu_source = "given";
    } else {
      const SlopeFit fit = in_stage("mu", [&] { return calibrate_mu(detector, cfg.tau_max, doc.warnings); });
      doc.mu = fit.mu_hat;
      doc.mu_source = "slope_heuristic";
      doc.loss_curve = curve_points(fit.loss_curve, doc.mu, doc.n);
    }
    seg = in_stage("detect", [&] { return detector.detect(doc.mu); });
  }

  doc.changepoints = seg.changepoints;
  doc.scan_profiles = seg.scan_profiles;
  Index begin = 0;
  for (std::size_t i = 0; i < seg.segment_losses.size(); ++i) {
    const Index end = i < seg.changepoints.size() ? seg.changepoints[i] : doc.n;
    const SegmentLoss& loss = seg.segment_losses[i];
    doc.segments.push_back({begin + 1, end, doc.d, loss.fit, loss.nuclear, loss.regularized_total});
    begin = end;
  }
  return doc;
}

TuneReport run_tune(const RunConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  const TimeSeriesMatrix X = in_stage("load", [&] { return load_csv(cfg.input, cfg.csv); });
  return run_tune(X, cfg);
}

TuneReport run_tune(const TimeSeriesMatrix& input, const RunConfig& cfg) {
  in_stage("config", [&] { cfg.validate(); });
  TuneReport report;
  report.config = cfg.echo();
  const TimeSeriesMatrix X = prepare(input, cfg, report.warnings);
  report.p = X.dims();
  report.n = X.length();

  ResolvedDim dim = resolve_dim(X, cfg, report.warnings);
  report.d = dim.d;
  report.d_source = dim.source;
  report.dim_estimate = std::move(dim.estimate);

  const ResolvedLambda lam = resolve_lambda(X, cfg, report.warnings);
  report.lambda = lam.lambda;
  report.sigma = lam.sigma;
  report.lambda_source = lam.source;

  if (cfg.mu) {
    report.mu = *cfg.mu;
    return report;
  }
  const SlopeFit fit = in_stage("mu", [&] {
    DetectionConfig dc;
    dc.d = report.d;
    dc.lambda = report.lambda;
    dc.msl = cfg.msl;
    dc.grid_mode = cfg.grid_mode;
    dc.refine_window = cfg.refine_window;
    dc.solver = solver_options(cfg);
    return calibrate_mu(Detector(X, dc), cfg.tau_max, report.warnings);
  });
  report.mu = fit.mu_hat;
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.loss_curve = curve_points(fit.loss_curve, fit.mu_hat, report.n);
  return report;
}

std::string tune_to_json(const TuneReport& report) {
  nlohmann::json curve = nlohmann::json::array();
  for (const LossCurvePoint& pt : report.loss_curve) {
    curve.push_back({{"k", pt.k}, {"loss", pt.loss}, {"penalized", pt.penalized}});
  }
  nlohmann::json j = {{"p", report.p},
                      {"n", report.n},
                      {"d", report.d},
                      {"lambda", report.lambda},
                      {"sigma", report.sigma},
                      {"mu", report.mu},
                      {"slope", report.slope},
                      {"intercept", report.intercept},
                      {"sources", {{"d", report.d_source}, {"lambda", report.lambda_source}}},
                      {"loss_curve", std::move(curve)},
                      {"warnings", report.warnings},
                      {"config", report.config},
                      {"version", kVersion}};
  if (report.dim_estimate) {
    const DimEstimate& est = *report.dim_estimate;
    j["dim_estimate"] = {{"eigenvalues", std::vector<double>(est.eigenvalues.begin(), est.eigenvalues.end())},
                         {"ratios", est.ratios},
                         {"low_confidence", est.low_confidence},
                         {"rank_deficient", est.rank_deficient},
                         {"short_window", est.short_window}};
  }
  return j.dump(2) + "\n";
}

}  // namespace subcpd

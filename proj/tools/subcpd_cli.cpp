// subcpd command-line front end: detect, tune, simulate, benchmark.

#include "subcpd/evaluation.hpp"
#include "subcpd/io.hpp"
#include "subcpd/pipeline.hpp"
#include "subcpd/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using namespace subcpd;

constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;

struct DetectFlags {
  std::string input;
  std::string output = "-";
  std::string format = "json";
  bool standardize = false;
  bool header = false;
  std::optional<std::size_t> time_column;
  std::string delimiter = ",";
  std::string dim = "auto";
  std::string lambda = "auto";
  std::string mu = "auto";
  std::optional<int> known_k;
  int msl = 30;
  bool grid = false;
  int refine_window = 10;
  int tau_max = 15;
  std::uint64_t seed = 0;
  double init_fraction = 0.2;
  std::optional<int> max_dim;
  int max_iters = SolverOptions{}.max_iters;
  double rel_tol = SolverOptions{}.rel_tol;
};

void add_detect_flags(CLI::App* cmd, DetectFlags& f) {
  cmd->add_option("--input", f.input, "CSV file, one row per time point")->required();
  cmd->add_option("--output", f.output, "Output path, '-' for stdout");
  cmd->add_option("--format", f.format, "json or csv");
  cmd->add_flag("--standardize", f.standardize, "Scale every variable to mean 0, sd 1");
  cmd->add_flag("--header", f.header, "First non-empty line is a header");
  cmd->add_option("--time-column", f.time_column, "One-based column of timestamps to drop");
  cmd->add_option("--delimiter", f.delimiter, "Field separator");
  cmd->add_option("--dim", f.dim, "Subspace dimension D or 'auto'");
  cmd->add_option("--lambda", f.lambda, "Nuclear-norm weight X or 'auto'");
  cmd->add_option("--mu", f.mu, "Penalty scale X or 'auto'");
  cmd->add_option("--known-k", f.known_k, "Report exactly K change-points");
  cmd->add_option("--msl", f.msl, "Minimum segment length");
  cmd->add_flag("--grid", f.grid, "Grid search with local refinement");
  cmd->add_option("--refine-window", f.refine_window, "Half-width of the refinement window");
  cmd->add_option("--tau-max", f.tau_max, "Largest change count for the slope heuristic");
  cmd->add_option("--seed", f.seed, "Solver initialisation seed");
  cmd->add_option("--init-fraction", f.init_fraction, "Leading fraction used to estimate the dimension");
  cmd->add_option("--max-dim", f.max_dim, "Upper bound for the dimension estimate");
  cmd->add_option("--max-iters", f.max_iters, "Solver iteration cap");
  cmd->add_option("--rel-tol", f.rel_tol, "Solver relative tolerance");
}

double parse_number(const std::string& flag, const std::string& text) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) {
      return v;
    }
  } catch (const std::exception&) {
  }
  throw ConfigError(flag + " expects a number or 'auto', got '" + text + "'");
}

std::optional<double> auto_or_number(const std::string& flag, const std::string& text) {
  if (text == "auto") {
    return std::nullopt;
  }
  return parse_number(flag, text);
}

RunConfig to_run_config(const DetectFlags& f) {
  RunConfig cfg;
  cfg.input = f.input;
  cfg.csv.has_header = f.header;
  cfg.csv.time_column = f.time_column;
  if (f.delimiter.size() != 1) {
    throw ConfigError("--delimiter must be a single character");
  }
  cfg.csv.delimiter = f.delimiter[0];
  cfg.standardize = f.standardize;
  if (const auto d = auto_or_number("--dim", f.dim)) {
    if (*d != std::floor(*d)) {
      throw ConfigError("--dim expects an integer or 'auto'");
    }
    cfg.d = static_cast<int>(*d);
  }
  cfg.lambda = auto_or_number("--lambda", f.lambda);
  cfg.mu = auto_or_number("--mu", f.mu);
  cfg.known_k = f.known_k;
  cfg.msl = f.msl;
  cfg.grid_mode = f.grid;
  cfg.refine_window = f.refine_window;
  cfg.tau_max = f.tau_max;
  cfg.seed = f.seed;
  cfg.init_fraction = f.init_fraction;
  cfg.d_max = f.max_dim;
  cfg.max_iters = f.max_iters;
  cfg.rel_tol = f.rel_tol;
  cfg.output = f.output;
  cfg.format = parse_format(f.format);
  cfg.validate();
  return cfg;
}

void emit(const std::string& path, const std::string& content) {
  if (path == "-") {
    std::cout << content;
    std::cout.flush();
  } else {
    write_file_atomic(path, content);
  }
}

// Sibling file next to the main output, e.g. out.csv -> out.loss_curve.csv.
std::string sibling(const std::string& path, const std::string& suffix) {
  std::filesystem::path p(path);
  std::filesystem::path stem = p.parent_path() / p.stem();
  return stem.string() + "." + suffix;
}

int cmd_detect(const DetectFlags& f) {
  const RunConfig cfg = to_run_config(f);
  const ResultDocument doc = run_detect(cfg);
  for (const std::string& w : doc.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  if (cfg.format == OutputFormat::Json) {
    emit(f.output, result_to_json(doc));
  } else {
    emit(f.output, segments_to_csv(doc));
    if (f.output != "-") {
      write_file_atomic(sibling(f.output, "scan_profiles.csv"), scan_profiles_to_csv(doc));
      if (!doc.loss_curve.empty()) {
        write_file_atomic(sibling(f.output, "loss_curve.csv"), loss_curve_to_csv(doc));
      }
    }
  }
  return 0;
}

int cmd_tune(const DetectFlags& f) {
  const RunConfig cfg = to_run_config(f);
  const TuneReport report = run_tune(cfg);
  for (const std::string& w : report.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  emit(f.output, tune_to_json(report));
  return 0;
}

struct SimulateFlags {
  Index p = 20;
  int d = 2;
  Index n = 500;
  std::vector<Index> changepoints{100, 200, 300, 400};
  std::optional<double> delta;
  std::string scenario = "A";
  std::uint64_t seed = 0;
  std::string output;
  std::string truth;
};

int cmd_simulate(const SimulateFlags& f) {
  SyntheticSpec spec = SyntheticSpec::standard(f.p, f.d, parse_scenario(f.scenario), f.seed);
  spec.n = f.n;
  spec.changepoints = f.changepoints;
  if (f.delta) {
    spec.delta = *f.delta;
  }
  spec.validate();
  const SyntheticData data = generate(spec);
  const std::string truth_path = f.truth.empty() ? sibling(f.output, "truth.json") : f.truth;
  write_file_atomic(f.output, series_to_csv(data.X));
  write_file_atomic(truth_path, ground_truth_to_json(spec, data.truth).dump(2) + "\n");
  return 0;
}

struct BenchmarkFlags {
  std::vector<std::string> cells{"20x2"};
  std::vector<std::string> scenarios{"A"};
  int replications = 100;
  std::uint64_t seed = 0;
  std::string output;
  Index n = 500;
  std::vector<Index> changepoints{100, 200, 300, 400};
  int msl = 30;
  int tau_max = 15;
  bool exhaustive = false;
  unsigned threads = 0;
};

BenchmarkCell parse_cell(const std::string& text, NoiseScenario scenario) {
  const auto x = text.find('x');
  try {
    if (x != std::string::npos) {
      std::size_t used_p = 0;
      std::size_t used_d = 0;
      const std::string p_text = text.substr(0, x);
      const std::string d_text = text.substr(x + 1);
      const long long p = std::stoll(p_text, &used_p);
      const int d = std::stoi(d_text, &used_d);
      if (used_p == p_text.size() && used_d == d_text.size() && p > 0 && d > 0) {
        return {static_cast<Index>(p), d, scenario};
      }
    }
  } catch (const std::exception&) {
  }
  throw ConfigError("--cell expects PxD, e.g. 20x2; got '" + text + "'");
}

int cmd_benchmark(const BenchmarkFlags& f) {
  // Everything is validated before the first replication runs.
  std::vector<NoiseScenario> scenarios;
  for (const std::string& s : f.scenarios) {
    scenarios.push_back(parse_scenario(s));
  }
  if (f.replications < 1) {
    throw ConfigError("--replications must be >= 1");
  }
  std::vector<BenchmarkCell> cells;
  for (const std::string& c : f.cells) {
    for (NoiseScenario scenario : scenarios) {
      cells.push_back(parse_cell(c, scenario));
    }
  }
  BenchmarkOptions options;
  options.n = f.n;
  options.changepoints = f.changepoints;
  options.msl = f.msl;
  options.tau_max = f.tau_max;
  options.grid_mode = !f.exhaustive;
  options.threads = f.threads;
  for (const BenchmarkCell& cell : cells) {
    SyntheticSpec spec = SyntheticSpec::standard(cell.p, cell.d, cell.scenario, 0);
    spec.n = options.n;
    spec.changepoints = options.changepoints;
    spec.delta = options.delta_fraction * std::sqrt(static_cast<double>(cell.d));
    spec.validate();
    DetectionConfig dc;
    dc.d = cell.d;
    dc.msl = options.msl;
    dc.validate();
  }
  if (options.tau_max < 5) {
    throw ConfigError("--tau-max must be >= 5");
  }

  const BenchmarkReport report = run_benchmark(cells, f.replications, f.seed, options);
  write_file_atomic(f.output + ".csv", report_to_csv(report));
  write_file_atomic(f.output + ".json", report_to_json(report));
  for (const BenchmarkRow& row : report.rows) {
    std::cerr << "p=" << row.cell.p << " d=" << row.cell.d << " scenario=" << to_string(row.cell.scenario)
              << " TNC=" << row.tnc_count << "/" << row.replications << " VM=" << row.mean_vm
              << " failures=" << row.failures << '\n';
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace change-point detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", subcpd::kVersion);

  DetectFlags detect_flags;
  CLI::App* detect = app.add_subcommand("detect", "Detect subspace change-points in a CSV series");
  add_detect_flags(detect, detect_flags);

  DetectFlags tune_flags;
  CLI::App* tune = app.add_subcommand("tune", "Print the estimated lambda, mu and d without detecting");
  add_detect_flags(tune, tune_flags);

  SimulateFlags sim;
  CLI::App* simulate = app.add_subcommand("simulate", "Write a synthetic series and its ground truth");
  simulate->add_option("--p", sim.p, "Number of variables");
  simulate->add_option("--d", sim.d, "Subspace dimension");
  simulate->add_option("--n", sim.n, "Series length");
  simulate->add_option("--changepoints", sim.changepoints, "One-based change-points")->delimiter(',');
  simulate->add_option("--delta", sim.delta, "Distance between consecutive subspaces (default sqrt(d)/2)");
  simulate->add_option("--scenario", sim.scenario, "Noise scenario A, B or C");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--output", sim.output, "CSV path for the series")->required();
  simulate->add_option("--truth", sim.truth, "JSON path for the ground truth (default <output>.truth.json)");

  BenchmarkFlags bench;
  CLI::App* benchmark = app.add_subcommand("benchmark", "Replicated synthetic accuracy study");
  benchmark->add_option("--cell", bench.cells, "PxD cells, e.g. 20x2")->delimiter(',');
  benchmark->add_option("--scenario", bench.scenarios, "Noise scenarios A, B, C")->delimiter(',');
  benchmark->add_option("--replications", bench.replications, "Replications per cell");
  benchmark->add_option("--seed", bench.seed, "Base seed");
  benchmark->add_option("--output", bench.output, "Report prefix; writes <prefix>.csv and <prefix>.json")->required();
  benchmark->add_option("--n", bench.n, "Series length");
  benchmark->add_option("--changepoints", bench.changepoints, "One-based change-points")->delimiter(',');
  benchmark->add_option("--msl", bench.msl, "Minimum segment length");
  benchmark->add_option("--tau-max", bench.tau_max, "Largest change count for the slope heuristic");
  benchmark->add_flag("--exhaustive", bench.exhaustive, "Scan every admissible split instead of the grid");
  benchmark->add_option("--threads", bench.threads, "Worker threads (0 = hardware concurrency)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (detect->parsed()) {
      return cmd_detect(detect_flags);
    }
    if (tune->parsed()) {
      return cmd_tune(tune_flags);
    }
    if (simulate->parsed()) {
      return cmd_simulate(sim);
    }
    return cmd_benchmark(bench);
  } catch (const subcpd::StageError& e) {
    std::cerr << "error [" << e.stage() << "]: " << e.what() << '\n';
    return e.kind() == "config" ? kExitConfig : kExitFailure;
  } catch (const subcpd::ConfigError& e) {
    std::cerr << "error [config]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

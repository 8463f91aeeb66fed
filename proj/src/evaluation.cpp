#include "subcpd/evaluation.hpp"

#include "subcpd/detection.hpp"
#include "subcpd/random.hpp"
#include "subcpd/tuning.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

namespace subcpd {

std::vector<int> labels_from_changepoints(std::span<const Index> changepoints, Index n) {
  if (n < 0) {
    throw ConfigError("series length must be non-negative");
  }
  Index previous = 0;
  for (Index tau : changepoints) {
    if (tau <= previous || tau >= n) {
      throw ConfigError("change-points must be strictly increasing and lie in (0, n)");
    }
    previous = tau;
  }
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::size_t next = 0;
  int label = 0;
  for (Index t = 0; t < n; ++t) {
    if (next < changepoints.size() && t == changepoints[next]) {
      ++label;
      ++next;
    }
    labels[static_cast<std::size_t>(t)] = label;
  }
  return labels;
}

VMeasure v_measure_scores(std::span<const int> truth, std::span<const int> predicted) {
  if (truth.size() != predicted.size()) {
    throw DimensionError("label vectors differ in length");
  }
  VMeasure out;
  if (truth.empty()) {
    return out;
  }
  const double total = static_cast<double>(truth.size());
  std::map<int, double> class_count;
  std::map<int, double> cluster_count;
  std::map<std::pair<int, int>, double> joint;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    class_count[truth[i]] += 1.0;
    cluster_count[predicted[i]] += 1.0;
    joint[{truth[i], predicted[i]}] += 1.0;
  }
  const auto entropy = [total](const std::map<int, double>& counts) {
    double h = 0.0;
    for (const auto& [label, count] : counts) {
      h -= (count / total) * std::log(count / total);
    }
    return h;
  };
  const double h_class = entropy(class_count);
  const double h_cluster = entropy(cluster_count);
  double h_class_given_cluster = 0.0;
  double h_cluster_given_class = 0.0;
  for (const auto& [key, count] : joint) {
    h_class_given_cluster -= (count / total) * std::log(count / cluster_count[key.second]);
    h_cluster_given_class -= (count / total) * std::log(count / class_count[key.first]);
  }
  out.homogeneity = h_class == 0.0 ? 1.0 : std::clamp(1.0 - h_class_given_cluster / h_class, 0.0, 1.0);
  out.completeness = h_cluster == 0.0 ? 1.0 : std::clamp(1.0 - h_cluster_given_class / h_cluster, 0.0, 1.0);
  const double sum = out.homogeneity + out.completeness;
  out.v = sum == 0.0 ? 0.0 : 2.0 * out.homogeneity * out.completeness / sum;
  return out;
}

std::uint64_t replication_seed(std::uint64_t base_seed, const BenchmarkCell& cell, int replication) {
  return derive_seed(base_seed, {static_cast<std::uint64_t>(cell.p), static_cast<std::uint64_t>(cell.d),
                                 static_cast<std::uint64_t>(cell.scenario), static_cast<std::uint64_t>(replication)});
}

ReplicationRecord run_replication(const BenchmarkCell& cell, const BenchmarkOptions& options, std::uint64_t seed) {
  ReplicationRecord record;
  record.seed = seed;
  try {
    SyntheticSpec spec = SyntheticSpec::standard(cell.p, cell.d, cell.scenario, seed);
    spec.n = options.n;
    spec.changepoints = options.changepoints;
    spec.delta = options.delta_fraction * std::sqrt(static_cast<double>(cell.d));
    const SyntheticData data = generate(spec);

    const NoiseScale noise = estimate_lambda(data.X);
    DetectionConfig cfg;
    cfg.d = cell.d;
    cfg.lambda = noise.degenerate ? 0.0 : noise.lambda;
    cfg.msl = options.msl;
    cfg.grid_mode = options.grid_mode;
    cfg.refine_window = options.refine_window;
    cfg.solver = options.solver;
    const Detector detector(data.X, cfg);
    const SlopeFit slope = slope_heuristic_mu(detector, options.tau_max);
    const SegmentationResult found = detector.detect(slope.mu_hat);

    record.lambda = cfg.lambda;
    record.mu = slope.mu_hat;
    record.detected = found.changepoints;
    const std::vector<int> predicted = labels_from_changepoints(found.changepoints, spec.n);
    record.v_measure = v_measure(data.truth.labels, predicted);
    record.true_count = found.changepoints.size() == spec.changepoints.size();
    if (record.true_count && !spec.changepoints.empty()) {
      double error = 0.0;
      for (std::size_t i = 0; i < spec.changepoints.size(); ++i) {
        error += std::abs(static_cast<double>(found.changepoints[i] - spec.changepoints[i]));
      }
      record.localization = error / static_cast<double>(spec.changepoints.size());
    }
  } catch (const std::exception& e) {
    record.error = e.what();
    record.true_count = false;
    record.v_measure = 0.0;
  }
  return record;
}

BenchmarkReport run_benchmark(std::span<const BenchmarkCell> cells, int replications, std::uint64_t base_seed,
                              const BenchmarkOptions& options) {
  if (replications < 1) {
    throw ConfigError("replications must be >= 1");
  }
  BenchmarkReport report;
  report.base_seed = base_seed;
  report.options = options;

  struct Job {
    std::size_t cell;
    int replication;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (int r = 0; r < replications; ++r) {
      jobs.push_back({c, r});
    }
  }
  std::vector<ReplicationRecord> results(jobs.size());
  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t j = next++; j < jobs.size(); j = next++) {
      const BenchmarkCell& cell = cells[jobs[j].cell];
      results[j] = run_replication(cell, options, replication_seed(base_seed, cell, jobs[j].replication));
      results[j].index = jobs[j].replication;
    }
  };
  unsigned threads = options.threads != 0 ? options.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) {
      pool.emplace_back(worker);
    }
  }

  for (std::size_t c = 0; c < cells.size(); ++c) {
    BenchmarkRow row;
    row.cell = cells[c];
    row.replications = replications;
    double vm_sum = 0.0;
    double loc_sum = 0.0;
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      if (jobs[j].cell != c) {
        continue;
      }
      ReplicationRecord& record = results[j];
      vm_sum += record.v_measure;
      if (!record.error.empty()) {
        ++row.failures;
      }
      if (record.true_count) {
        ++row.tnc_count;
        loc_sum += record.localization;
      }
      row.records.push_back(std::move(record));
    }
    row.mean_vm = vm_sum / static_cast<double>(replications);
    row.localization =
        row.tnc_count > 0 ? loc_sum / static_cast<double>(row.tnc_count) : std::numeric_limits<double>::quiet_NaN();
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string format_real(double value) {
  if (std::isnan(value)) {
    return "";
  }
  std::ostringstream out;
  out.precision(17);
  out << value;
  return out.str();
}

}  // namespace

std::string report_to_csv(const BenchmarkReport& report) {
  std::vector<NoiseScenario> scenarios;
  std::vector<std::pair<Index, int>> shapes;
  for (const BenchmarkRow& row : report.rows) {
    if (std::find(scenarios.begin(), scenarios.end(), row.cell.scenario) == scenarios.end()) {
      scenarios.push_back(row.cell.scenario);
    }
    const std::pair<Index, int> shape{row.cell.p, row.cell.d};
    if (std::find(shapes.begin(), shapes.end(), shape) == shapes.end()) {
      shapes.push_back(shape);
    }
  }
  std::sort(scenarios.begin(), scenarios.end());

  std::ostringstream out;
  out << "p,d";
  for (NoiseScenario s : scenarios) {
    out << ',' << to_string(s) << "_TNC," << to_string(s) << "_VM";
  }
  out << ",replications\n";
  for (const auto& [p, d] : shapes) {
    out << p << ',' << d;
    int reps = 0;
    for (NoiseScenario s : scenarios) {
      const auto it = std::find_if(report.rows.begin(), report.rows.end(), [&](const BenchmarkRow& row) {
        return row.cell.p == p && row.cell.d == d && row.cell.scenario == s;
      });
      if (it == report.rows.end()) {
        out << ",,";
      } else {
        out << ',' << it->tnc_count << ',' << format_real(it->mean_vm);
        reps = it->replications;
      }
    }
    out << ',' << reps << '\n';
  }
  return out.str();
}

std::string report_to_json(const BenchmarkReport& report) {
  using nlohmann::json;
  const BenchmarkOptions& o = report.options;
  json doc;
  doc["base_seed"] = report.base_seed;
  doc["options"] = {{"n", o.n},
                    {"changepoints", o.changepoints},
                    {"delta_fraction", o.delta_fraction},
                    {"msl", o.msl},
                    {"grid_mode", o.grid_mode},
                    {"refine_window", o.refine_window},
                    {"tau_max", o.tau_max},
                    {"solver", {{"max_iters", o.solver.max_iters}, {"rel_tol", o.solver.rel_tol}, {"seed", o.solver.seed}}}};
  json rows = json::array();
  for (const BenchmarkRow& row : report.rows) {
    json records = json::array();
    for (const ReplicationRecord& r : row.records) {
      json rec = {{"replication", r.index},   {"seed", r.seed},           {"detected", r.detected},
                  {"lambda", r.lambda},       {"mu", r.mu},               {"v_measure", r.v_measure},
                  {"true_count", r.true_count}};
      if (r.true_count) {
        rec["localization"] = r.localization;
      }
      if (!r.error.empty()) {
        rec["error"] = r.error;
      }
      records.push_back(std::move(rec));
    }
    json entry = {{"p", row.cell.p},
                  {"d", row.cell.d},
                  {"scenario", to_string(row.cell.scenario)},
                  {"replications", row.replications},
                  {"tnc_count", row.tnc_count},
                  {"mean_vm", row.mean_vm},
                  {"failures", row.failures},
                  {"records", std::move(records)}};
    entry["localization"] = std::isnan(row.localization) ? json(nullptr) : json(row.localization);
    rows.push_back(std::move(entry));
  }
  doc["rows"] = std::move(rows);
  return doc.dump(2) + "\n";
}

}  // namespace subcpd

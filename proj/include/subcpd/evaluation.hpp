#pragma once

#include "subcpd/factorization.hpp"
#include "subcpd/simulation.hpp"
#include "subcpd/types.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace subcpd {

/// Segment label per time point: label i covers the one-based times
/// (tau_i, tau_{i+1}] with tau_0 = 0 and tau_{K+1} = n.
std::vector<int> labels_from_changepoints(std::span<const Index> changepoints, Index n);

struct VMeasure {
  double homogeneity = 1.0;
  double completeness = 1.0;
  double v = 1.0;
};

/// Homogeneity, completeness and their harmonic mean (natural-log entropies).
/// A single-class truth has homogeneity 1, a single-class prediction has completeness 1.
VMeasure v_measure_scores(std::span<const int> truth, std::span<const int> predicted);

inline double v_measure(std::span<const int> truth, std::span<const int> predicted) {
  return v_measure_scores(truth, predicted).v;
}

struct BenchmarkCell {
  Index p = 20;
  int d = 2;
  NoiseScenario scenario = NoiseScenario::A;
};

struct BenchmarkOptions {
  Index n = 500;
  std::vector<Index> changepoints{100, 200, 300, 400};
  /// delta = delta_fraction * sqrt(d).
  double delta_fraction = 0.5;
  int msl = 30;
  bool grid_mode = true;
  int refine_window = 10;
  int tau_max = 15;
  SolverOptions solver;
  /// Worker threads; 0 picks the hardware concurrency.
  unsigned threads = 0;
};

struct ReplicationRecord {
  int index = 0;
  std::uint64_t seed = 0;
  std::vector<Index> detected;
  double lambda = 0.0;
  double mu = 0.0;
  double v_measure = 0.0;
  bool true_count = false;
  /// Mean absolute location error; only meaningful when true_count holds.
  double localization = 0.0;
  std::string error;
};

struct BenchmarkRow {
  BenchmarkCell cell;
  int replications = 0;
  int tnc_count = 0;
  double mean_vm = 0.0;
  /// Mean localization error over replications with the true count (NaN if none).
  double localization = 0.0;
  int failures = 0;
  std::vector<ReplicationRecord> records;
};

struct BenchmarkReport {
  std::uint64_t base_seed = 0;
  BenchmarkOptions options;
  std::vector<BenchmarkRow> rows;
};

/// One synthetic replication through the automatic pipeline: estimated lambda,
/// slope-heuristic mu, binary segmentation, scored against the truth.
ReplicationRecord run_replication(const BenchmarkCell& cell, const BenchmarkOptions& options, std::uint64_t seed);

std::uint64_t replication_seed(std::uint64_t base_seed, const BenchmarkCell& cell, int replication);

/// Replications run in parallel; results are reduced in replication order.
BenchmarkReport run_benchmark(std::span<const BenchmarkCell> cells, int replications, std::uint64_t base_seed,
                              const BenchmarkOptions& options = {});

/// Rows p x d, columns scenario x {TNC, VM}.
std::string report_to_csv(const BenchmarkReport& report);
std::string report_to_json(const BenchmarkReport& report);

}  // namespace subcpd

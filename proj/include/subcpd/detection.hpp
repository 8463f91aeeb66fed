#pragma once

#include "subcpd/factorization.hpp"
#include "subcpd/types.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <vector>

namespace subcpd {

/// Split candidate outside the admissible range of its segment.
class OutOfRangeError : public Error {
 public:
  using Error::Error;
};

struct DetectionConfig {
  int d = 1;
  double lambda = 0.0;
  /// Penalty scale: a split must lower the fit loss by more than mu * log(n).
  double mu = 0.0;
  /// Minimum segment length on either side of a change.
  int msl = 30;
  /// Scan ceil(log(len)) evenly spaced candidates, then refine locally.
  bool grid_mode = false;
  int refine_window = 10;
  SolverOptions solver;

  void validate() const;
};

struct ScanProfile {
  Segment segment;
  int level = 0;
  std::vector<Index> candidates;
  std::vector<double> statistics;

  friend bool operator==(const ScanProfile&, const ScanProfile&) = default;
};

struct SplitCandidate {
  Index tau = 0;
  double statistic = 0.0;
};

struct SegmentationResult {
  std::vector<Index> changepoints;
  std::vector<MatrixXd> segment_bases;
  std::vector<SegmentLoss> segment_losses;
  double total_penalized_loss = 0.0;
  std::vector<Index> detection_order;
  std::vector<ScanProfile> scan_profiles;
};

struct FixedKResult {
  SegmentationResult segmentation;
  /// Total unpenalised fit loss after 0, 1, ..., K' greedy splits.
  std::vector<double> loss_curve;
  /// True when admissible splits ran out before the requested count.
  bool exhausted = false;
};

/// True iff fit_left + fit_right + mu * log(n_total) < fit_full.
bool accept_change(double fit_left, double fit_right, double fit_full, Index n_total, double mu);

/// Binary-segmentation change-point detector over one series.
///
/// Segment factorisations are memoised by column range; the cache is
/// mutex-guarded, so one detector may be shared across threads.
class Detector {
 public:
  Detector(TimeSeriesMatrix data, DetectionConfig cfg);

  const TimeSeriesMatrix& data() const { return data_; }
  const DetectionConfig& config() const { return cfg_; }
  Index length() const { return data_.length(); }

  SegmentLoss segment_loss(Segment seg) const;

  /// T(k): regularised loss of [begin, k) plus that of [k, end).
  double scan_statistic(Segment seg, Index k) const;

  /// Minimiser of T over the admissible range; ties go to the smallest k.
  /// Empty when the segment is shorter than 2 * msl.
  std::optional<SplitCandidate> best_split(Segment seg, ScanProfile* profile = nullptr) const;

  /// Minimiser of T over [coarse - window, coarse + window], clipped to the admissible range.
  Index refine(Index coarse, int window, Segment seg, ScanProfile* profile = nullptr) const;

  SegmentationResult detect() const { return detect(cfg_.mu); }
  SegmentationResult detect(double mu) const;

  /// Greedy binary segmentation without a penalty: at each step the split with
  /// the largest fit-loss reduction among all current segments is taken.
  FixedKResult detect_fixed_k(int max_changes) const;

  /// Segment summaries (bases, losses, penalised total) for a given change set.
  SegmentationResult summarize(std::vector<Index> changepoints, double mu) const;

 private:
  struct CachedFit {
    SegmentLoss loss;
    MatrixXd basis;
  };

  const CachedFit& cached_fit(Segment seg) const;
  void check_segment(Segment seg) const;
  double tie_tolerance(Segment seg) const;
  Index admissible_low(Segment seg) const { return seg.begin + cfg_.msl; }
  Index admissible_high(Segment seg) const { return seg.end - cfg_.msl; }

  TimeSeriesMatrix data_;
  DetectionConfig cfg_;
  mutable std::mutex mutex_;
  mutable std::map<Segment, CachedFit> cache_;
};

inline SegmentationResult detect(const TimeSeriesMatrix& X, const DetectionConfig& cfg) {
  return Detector(X, cfg).detect();
}

inline FixedKResult detect_fixed_k(const TimeSeriesMatrix& X, const DetectionConfig& cfg, int max_changes) {
  return Detector(X, cfg).detect_fixed_k(max_changes);
}

}  // namespace subcpd

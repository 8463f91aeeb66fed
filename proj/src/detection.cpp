#include "subcpd/detection.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <utility>

namespace subcpd {

void DetectionConfig::validate() const {
  if (d < 1) {
    throw ConfigError("subspace dimension d must be >= 1");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a non-negative finite number");
  }
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw ConfigError("mu must be a non-negative finite number");
  }
  if (msl < d) {
    throw ConfigError("minimum segment length (" + std::to_string(msl) + ") must be >= d (" + std::to_string(d) +
                      ")");
  }
  if (grid_mode && refine_window < 1) {
    throw ConfigError("refine window must be >= 1 in grid mode");
  }
  solver.validate();
}

bool accept_change(double fit_left, double fit_right, double fit_full, Index n_total, double mu) {
  const double penalty = mu * std::log(static_cast<double>(n_total));
  return fit_left + fit_right + penalty < fit_full;
}

Detector::Detector(TimeSeriesMatrix data, DetectionConfig cfg) : data_(std::move(data)), cfg_(std::move(cfg)) {
  cfg_.validate();
  if (cfg_.d > data_.dims()) {
    throw DimensionError("subspace dimension d = " + std::to_string(cfg_.d) + " exceeds the number of variables p = " +
                         std::to_string(data_.dims()));
  }
}

void Detector::check_segment(Segment seg) const {
  if (seg.begin < 0 || seg.end > data_.length() || seg.size() < 1) {
    throw OutOfRangeError("segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) +
                          ") is not a non-empty range of the series");
  }
}

const Detector::CachedFit& Detector::cached_fit(Segment seg) const {
  check_segment(seg);
  {
    std::lock_guard lock(mutex_);
    if (auto it = cache_.find(seg); it != cache_.end()) {
      return it->second;
    }
  }
  const FactorizationResult fitted = factorize(data_.columns(seg), cfg_.d, cfg_.lambda, cfg_.solver);
  CachedFit entry{{fitted.fit_loss, fitted.nuclear_norm, fitted.objective}, orthonormalize(fitted.Z)};
  std::lock_guard lock(mutex_);
  return cache_.try_emplace(seg, std::move(entry)).first->second;
}

SegmentLoss Detector::segment_loss(Segment seg) const { return cached_fit(seg).loss; }

double Detector::scan_statistic(Segment seg, Index k) const {
  check_segment(seg);
  if (k < admissible_low(seg) || k > admissible_high(seg)) {
    throw OutOfRangeError("split " + std::to_string(k) + " outside admissible range [" +
                          std::to_string(admissible_low(seg)) + ", " + std::to_string(admissible_high(seg)) +
                          "] of segment [" + std::to_string(seg.begin) + ", " + std::to_string(seg.end) + ")");
  }
  return cached_fit({seg.begin, k}).loss.regularized_total + cached_fit({k, seg.end}).loss.regularized_total;
}

namespace {

struct Evaluations {
  std::map<Index, double> values;

  void add(Index k, double t) { values.emplace(k, t); }

  void write(ScanProfile* profile) const {
    if (profile == nullptr) {
      return;
    }
    profile->candidates.clear();
    profile->statistics.clear();
    for (const auto& [k, t] : values) {
      profile->candidates.push_back(k);
      profile->statistics.push_back(t);
    }
  }
};

// Values closer than this (times the segment energy) count as ties. Noiseless
// data with orthogonal pieces gives an exactly flat T between two changes, and
// rounding alone would otherwise pick a point inside the plateau.
constexpr double kTieTolerance = 1e-10;

// Smallest k wins ties because candidates are visited in increasing order.
template <typename Eval>
SplitCandidate argmin_over(Index low, Index high, double tie, Eval&& eval) {
  SplitCandidate best{low, eval(low)};
  for (Index k = low + 1; k <= high; ++k) {
    const double t = eval(k);
    if (t < best.statistic - tie) {
      best = {k, t};
    }
  }
  return best;
}

}  // namespace

double Detector::tie_tolerance(Segment seg) const {
  return kTieTolerance * data_.values().middleCols(seg.begin, seg.size()).squaredNorm();
}

Index Detector::refine(Index coarse, int window, Segment seg, ScanProfile* profile) const {
  check_segment(seg);
  const Index low = admissible_low(seg);
  const Index high = admissible_high(seg);
  if (coarse < low || coarse > high) {
    throw OutOfRangeError("coarse split " + std::to_string(coarse) + " is not admissible");
  }
  if (window < 1) {
    throw ConfigError("refine window must be >= 1");
  }
  Evaluations seen;
  const auto eval = [&](Index k) {
    const double t = scan_statistic(seg, k);
    seen.add(k, t);
    return t;
  };
  const Index tau =
      argmin_over(std::max(low, coarse - window), std::min(high, coarse + window), tie_tolerance(seg), eval).tau;
  seen.write(profile);
  return tau;
}

std::optional<SplitCandidate> Detector::best_split(Segment seg, ScanProfile* profile) const {
  check_segment(seg);
  if (profile != nullptr) {
    profile->segment = seg;
  }
  const Index low = admissible_low(seg);
  const Index high = admissible_high(seg);
  if (low > high) {
    Evaluations{}.write(profile);
    return std::nullopt;
  }

  Evaluations seen;
  const auto eval = [&](Index k) {
    const double t = scan_statistic(seg, k);
    seen.add(k, t);
    return t;
  };

  const Index span = high - low + 1;
  const Index grid_size = std::max<Index>(3, static_cast<Index>(std::ceil(std::log(static_cast<double>(seg.size())))));
  if (!cfg_.grid_mode || span <= grid_size) {
    const SplitCandidate best = argmin_over(low, high, tie_tolerance(seg), eval);
    seen.write(profile);
    return best;
  }

  std::vector<SplitCandidate> grid;
  for (Index i = 0; i < grid_size; ++i) {
    const Index k = low + static_cast<Index>(std::llround(static_cast<double>(i * (high - low)) /
                                                          static_cast<double>(grid_size - 1)));
    if (grid.empty() || grid.back().tau != k) {
      grid.push_back({k, eval(k)});
    }
  }

  const double tie = tie_tolerance(seg);
  SplitCandidate coarse = grid.front();
  for (const SplitCandidate& c : grid) {
    if (c.statistic < coarse.statistic - tie) {
      coarse = c;
    }
  }

  // T is close to flat between true changes, so a short window can stall on
  // noise. The neighbourhood reaches the adjacent grid points, and is moved
  // along while its argmin sits on the window edge.
  const Index spacing = (high - low + grid_size - 2) / (grid_size - 1);
  const int window = static_cast<int>(std::max<Index>(cfg_.refine_window, spacing));
  Index current = coarse.tau;
  for (;;) {
    ScanProfile local;
    const Index next = refine(current, window, seg, &local);
    for (std::size_t j = 0; j < local.candidates.size(); ++j) {
      seen.add(local.candidates[j], local.statistics[j]);
    }
    const bool on_edge = (next == current - window) || (next == current + window);
    const bool moved = next != current;
    current = next;
    if (!moved || !on_edge) {
      break;
    }
  }
  seen.write(profile);
  return SplitCandidate{current, seen.values.at(current)};
}

SegmentationResult Detector::summarize(std::vector<Index> changepoints, double mu) const {
  std::sort(changepoints.begin(), changepoints.end());
  SegmentationResult result;
  Index begin = 0;
  double total_fit = 0.0;
  const auto add_segment = [&](Segment seg) {
    const CachedFit& fit = cached_fit(seg);
    result.segment_bases.push_back(fit.basis);
    result.segment_losses.push_back(fit.loss);
    total_fit += fit.loss.fit;
  };
  for (Index tau : changepoints) {
    add_segment({begin, tau});
    begin = tau;
  }
  add_segment({begin, data_.length()});
  result.total_penalized_loss =
      total_fit + mu * static_cast<double>(changepoints.size()) * std::log(static_cast<double>(data_.length()));
  result.changepoints = std::move(changepoints);
  return result;
}

SegmentationResult Detector::detect(double mu) const {
  if (!(mu >= 0.0) || !std::isfinite(mu)) {
    throw ConfigError("mu must be a non-negative finite number");
  }
  const Index n = data_.length();
  std::vector<Index> found;
  std::vector<ScanProfile> profiles;

  std::function<void(Segment, int)> recurse = [&](Segment seg, int level) {
    ScanProfile profile;
    profile.level = level;
    const auto split = best_split(seg, &profile);
    if (!split) {
      return;
    }
    profiles.push_back(std::move(profile));
    const double left = cached_fit({seg.begin, split->tau}).loss.fit;
    const double right = cached_fit({split->tau, seg.end}).loss.fit;
    const double full = cached_fit(seg).loss.fit;
    if (!accept_change(left, right, full, n, mu)) {
      return;
    }
    found.push_back(split->tau);
    recurse({seg.begin, split->tau}, level + 1);
    recurse({split->tau, seg.end}, level + 1);
  };
  recurse({0, n}, 0);

  SegmentationResult result = summarize(found, mu);
  result.detection_order = std::move(found);
  result.scan_profiles = std::move(profiles);
  return result;
}

FixedKResult Detector::detect_fixed_k(int max_changes) const {
  if (max_changes < 1) {
    throw ConfigError("the number of changes K must be >= 1");
  }
  struct Node {
    Segment seg;
    int level = 0;
    bool scanned = false;
    std::optional<SplitCandidate> split;
    double gain = 0.0;
  };

  FixedKResult out;
  std::vector<Node> nodes{Node{Segment{0, data_.length()}, 0, false, std::nullopt, 0.0}};
  std::vector<Index> found;
  std::vector<ScanProfile> profiles;

  const auto total_fit = [&] {
    double total = 0.0;
    for (const Node& node : nodes) {
      total += cached_fit(node.seg).loss.fit;
    }
    return total;
  };
  out.loss_curve.push_back(total_fit());

  while (static_cast<int>(found.size()) < max_changes) {
    for (Node& node : nodes) {
      if (node.scanned) {
        continue;
      }
      node.scanned = true;
      ScanProfile profile;
      profile.level = node.level;
      node.split = best_split(node.seg, &profile);
      if (node.split) {
        profiles.push_back(std::move(profile));
        node.gain = cached_fit(node.seg).loss.fit - cached_fit({node.seg.begin, node.split->tau}).loss.fit -
                    cached_fit({node.split->tau, node.seg.end}).loss.fit;
      }
    }
    // Nodes are kept ordered by position, so strict > keeps the leftmost on ties.
    auto chosen = nodes.end();
    for (auto it = nodes.begin(); it != nodes.end(); ++it) {
      if (it->split && it->gain >= 0.0 && (chosen == nodes.end() || it->gain > chosen->gain)) {
        chosen = it;
      }
    }
    if (chosen == nodes.end()) {
      out.exhausted = true;
      break;
    }
    const Index tau = chosen->split->tau;
    const Node left{{chosen->seg.begin, tau}, chosen->level + 1, false, std::nullopt, 0.0};
    const Node right{{tau, chosen->seg.end}, chosen->level + 1, false, std::nullopt, 0.0};
    chosen = nodes.erase(chosen);
    nodes.insert(chosen, {left, right});
    found.push_back(tau);
    out.loss_curve.push_back(total_fit());
  }

  out.segmentation = summarize(found, 0.0);
  out.segmentation.detection_order = std::move(found);
  out.segmentation.scan_profiles = std::move(profiles);
  return out;
}

}  // namespace subcpd

#include "subcpd/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace subcpd {

namespace {

// Median of a scratch buffer (reordered in place).
double median_of(std::vector<double>& values) {
  const std::size_t mid = values.size() / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  const double upper = values[mid];
  if (values.size() % 2 == 1) {
    return upper;
  }
  const double lower = *std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lower + upper);
}

}  // namespace

NoiseScale estimate_lambda(const TimeSeriesMatrix& X) {
  const Index p = X.dims();
  const Index n = X.length();
  if (n < 2) {
    throw DimensionError("noise estimation needs at least two time points");
  }
  const MatrixXd& values = X.values();
  std::vector<double> diffs;
  diffs.reserve(static_cast<std::size_t>(p * (n - 1)));
  for (Index t = 1; t < n; ++t) {
    for (Index r = 0; r < p; ++r) {
      diffs.push_back(values(r, t) - values(r, t - 1));
    }
  }
  const double center = median_of(diffs);
  for (double& v : diffs) {
    v = std::abs(v - center);
  }
  const double mad = median_of(diffs);

  NoiseScale out;
  out.sigma = 1.4826 * mad / std::sqrt(2.0);
  out.lambda = out.sigma / 2.0;
  out.degenerate = (mad == 0.0);
  return out;
}

SlopeFit regress_loss_curve(std::span<const LossPoint> points) {
  if (points.size() < 2) {
    throw ConfigError("slope regression needs at least two points");
  }
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const LossPoint& pt : points) {
    mean_x += pt.regressor;
    mean_y += pt.loss;
  }
  mean_x /= static_cast<double>(points.size());
  mean_y /= static_cast<double>(points.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (const LossPoint& pt : points) {
    sxx += (pt.regressor - mean_x) * (pt.regressor - mean_x);
    sxy += (pt.regressor - mean_x) * (pt.loss - mean_y);
  }
  if (!(sxx > 0.0)) {
    throw ConfigError("slope regression needs at least two distinct regressor values");
  }
  SlopeFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = mean_y - fit.slope * mean_x;
  fit.mu_hat = std::max(0.0, -2.0 * fit.slope);
  fit.points.assign(points.begin(), points.end());
  return fit;
}

double slope_regressor(int changes, Index n) {
  const double tau = static_cast<double>(changes);
  return tau * std::log(static_cast<double>(n) / tau);
}

SlopeFit slope_heuristic_mu(const Detector& detector, int tau_max) {
  if (tau_max < 5) {
    throw ConfigError("tau_max must be >= 5 for the slope heuristic");
  }
  const FixedKResult fixed = detector.detect_fixed_k(tau_max);
  const int reached = static_cast<int>(fixed.loss_curve.size()) - 1;
  const int low = static_cast<int>(std::ceil(0.6 * tau_max));
  const int high = std::min(tau_max, reached);
  if (high - low + 1 < 2) {
    throw InsufficientSplitsError("greedy segmentation stopped after " + std::to_string(reached) +
                                  " changes; the slope window starts at " + std::to_string(low));
  }
  std::vector<LossPoint> points;
  for (int tau = low; tau <= high; ++tau) {
    points.push_back({tau, slope_regressor(tau, detector.length()), fixed.loss_curve[static_cast<std::size_t>(tau)]});
  }
  SlopeFit fit = regress_loss_curve(points);
  fit.loss_curve = fixed.loss_curve;
  return fit;
}

SlopeFit slope_heuristic_mu(const TimeSeriesMatrix& X, int tau_max, const DetectionConfig& cfg) {
  return slope_heuristic_mu(Detector(X, cfg), tau_max);
}

std::vector<double> penalized_curve(std::span<const double> loss_curve, double mu, Index n) {
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> out;
  out.reserve(loss_curve.size());
  for (std::size_t tau = 0; tau < loss_curve.size(); ++tau) {
    out.push_back(loss_curve[tau] + mu * static_cast<double>(tau) * log_n);
  }
  return out;
}

int default_max_dim(Index p) {
  return static_cast<int>(std::max<Index>(1, std::min(p - 1, p / 2)));
}

DimEstimate dim_from_eigenvalues(const VectorXd& eigenvalues, int d_max) {
  const Index p = eigenvalues.size();
  if (d_max < 1 || d_max >= p) {
    throw ConfigError("d_max must lie in [1, p - 1]");
  }
  DimEstimate out;
  out.eigenvalues = eigenvalues;
  const double scale = std::max(eigenvalues(0), 0.0);
  // Eigenvalues at round-off level count as zero.
  const double floor = scale * static_cast<double>(p) * std::numeric_limits<double>::epsilon();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 1; i <= d_max; ++i) {
    const double denom = eigenvalues(i - 1);
    if (!(denom > floor)) {
      out.rank_deficient = true;
      break;
    }
    const double numer = eigenvalues(i) > floor ? eigenvalues(i) : 0.0;
    const double ratio = numer / denom;
    out.ratios.push_back(ratio);
    if (ratio < best) {
      best = ratio;
      out.d_hat = i;
    }
  }
  if (out.ratios.empty()) {
    throw NumericalError("covariance has no positive eigenvalue in the search range");
  }
  out.low_confidence = best > kLowConfidenceRatio;
  return out;
}

DimEstimate estimate_dim(const TimeSeriesMatrix& X, double init_fraction, int d_max) {
  if (!(init_fraction > 0.0) || init_fraction > 1.0) {
    throw ConfigError("init_fraction must lie in (0, 1]");
  }
  const Index p = X.dims();
  const Index n = X.length();
  const Index m = std::min(n, static_cast<Index>(std::ceil(init_fraction * static_cast<double>(n))));
  if (m < 2) {
    throw DimensionError("the initial portion needs at least two time points");
  }
  const auto head = X.values().leftCols(m);
  const MatrixXd centered = head.colwise() - head.rowwise().mean();
  const MatrixXd covariance = centered * centered.transpose() / static_cast<double>(m - 1);
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(covariance, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) {
    throw NumericalError("eigen-decomposition of the sample covariance failed");
  }
  const VectorXd descending = eig.eigenvalues().reverse();
  DimEstimate out = dim_from_eigenvalues(descending, d_max);
  out.short_window = m < p;
  return out;
}

}  // namespace subcpd

#pragma once

#include "subcpd/detection.hpp"
#include "subcpd/types.hpp"

#include <span>
#include <vector>

namespace subcpd {

struct NoiseScale {
  double sigma = 0.0;
  double lambda = 0.0;
  /// The median absolute deviation was zero; lambda is 0 and should be treated as a fallback.
  bool degenerate = false;
};

/// lambda = sigma_hat / 2, where sigma_hat is the MAD of the first differences
/// of all rows pooled together, scaled by 1.4826 / sqrt(2).
NoiseScale estimate_lambda(const TimeSeriesMatrix& X);

struct LossPoint {
  int changes = 0;
  double regressor = 0.0;
  double loss = 0.0;
};

struct SlopeFit {
  double mu_hat = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<LossPoint> points;
  /// Unpenalised loss after 0, 1, ... greedy changes.
  std::vector<double> loss_curve;
};

/// Ordinary least squares of loss on regressor; mu_hat = max(0, -2 * slope).
SlopeFit regress_loss_curve(std::span<const LossPoint> points);

/// tau * log(n / tau): the log(n / tau) term accumulated over tau changes.
double slope_regressor(int changes, Index n);

/// Slope-heuristic penalty calibration.
///
/// Runs unpenalised greedy segmentation up to tau_max changes and regresses
/// the loss L(tau) on slope_regressor(tau, n) for tau in
/// [ceil(0.6 * tau_max), tau_max], giving mu = max(0, -2 * slope). The upper
/// end is clipped to the number of changes actually reached when admissible
/// splits run out; fewer than two points in the window raises
/// InsufficientSplitsError.
SlopeFit slope_heuristic_mu(const Detector& detector, int tau_max);
SlopeFit slope_heuristic_mu(const TimeSeriesMatrix& X, int tau_max, const DetectionConfig& cfg);

/// Loss curve with the penalty mu * tau * log(n) added.
std::vector<double> penalized_curve(std::span<const double> loss_curve, double mu, Index n);

struct DimEstimate {
  int d_hat = 1;
  VectorXd eigenvalues;       // descending
  std::vector<double> ratios;  // ratios[i - 1] = eigenvalue(i + 1) / eigenvalue(i)
  bool low_confidence = false;  // smallest ratio above 0.5
  bool rank_deficient = false;  // search stopped at a non-positive eigenvalue
  bool short_window = false;    // fewer initial columns than variables
};

constexpr double kLowConfidenceRatio = 0.5;

int default_max_dim(Index p);

/// Eigenvalue-ratio estimate of the subspace dimension from the sample
/// covariance of the first ceil(init_fraction * n) columns.
DimEstimate estimate_dim(const TimeSeriesMatrix& X, double init_fraction, int d_max);

/// Ratio search on already computed eigenvalues (sorted descending).
DimEstimate dim_from_eigenvalues(const VectorXd& eigenvalues, int d_max);

}  // namespace subcpd

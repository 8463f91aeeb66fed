#pragma once

#include "subcpd/types.hpp"

#include <cstdint>
#include <vector>

namespace subcpd {

struct SolverOptions {
  int max_iters = 200;
  double rel_tol = 1e-6;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FactorizationResult {
  MatrixXd Z;  // p x d
  MatrixXd S;  // d x k
  double fit_loss = 0.0;
  double nuclear_norm = 0.0;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Objective after each iteration; non-increasing up to rounding.
  std::vector<double> objective_history;
};

struct SegmentLoss {
  double fit = 0.0;
  double nuclear = 0.0;
  double regularized_total = 0.0;
};

/// Minimises ||X - Z S||_F^2 + lambda ||Z S||_* over Z (p x d) and S (d x k)
/// by block coordinate descent.
///
/// The nuclear norm is handled through its variational form
/// ||Z S||_* = min (||Z||_F^2 + ||S||_F^2) / 2, so each block update is a
/// closed-form ridge solve. After every sweep the factors are rebalanced to
/// Z = Q U sqrt(Sigma), S = sqrt(Sigma) V^T, which makes the variational
/// bound tight; the recorded objective is therefore the exact regularised
/// loss and decreases monotonically.
///
/// Throws DimensionError if d is outside [1, min(p, k)], NumericalError if the
/// objective stops being finite.
FactorizationResult factorize(const Eigen::Ref<const MatrixXd>& X, int d, double lambda,
                              const SolverOptions& opts);

inline FactorizationResult factorize(const TimeSeriesMatrix& X, int d, double lambda,
                                     const SolverOptions& opts) {
  return factorize(X.values(), d, lambda, opts);
}

/// Sum of singular values of Z * S. When d < min(p, k) the p x k product is
/// never formed: Z is reduced to its triangular factor first.
double nuclear_norm_product(const Eigen::Ref<const MatrixXd>& Z, const Eigen::Ref<const MatrixXd>& S);

SegmentLoss segment_loss(const Eigen::Ref<const MatrixXd>& X, int d, double lambda,
                         const SolverOptions& opts);

/// Orthonormal basis for the column space of Z (thin QR). Zero columns are
/// completed with arbitrary orthonormal directions.
MatrixXd orthonormalize(const Eigen::Ref<const MatrixXd>& Z);

}  // namespace subcpd

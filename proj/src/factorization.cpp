#include "subcpd/factorization.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace subcpd {

void SolverOptions::validate() const {
  if (max_iters < 1) {
    throw ConfigError("solver max_iters must be >= 1");
  }
  if (!(rel_tol > 0.0) || !std::isfinite(rel_tol)) {
    throw ConfigError("solver rel_tol must be a positive finite number");
  }
}

namespace {

MatrixXd standard_normal(Index rows, Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  // Column-major fill keeps the draw order independent of Eigen internals.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

// argmin_Z ||X - Z S||^2 + (lambda/2) ||Z||^2
MatrixXd solve_left_factor(const Eigen::Ref<const MatrixXd>& X, const MatrixXd& S, double lambda) {
  if (lambda == 0.0) {
    // Minimum-norm least squares; S may be rank deficient.
    return S.transpose().completeOrthogonalDecomposition().solve(X.transpose()).transpose();
  }
  MatrixXd gram = S * S.transpose();
  gram.diagonal().array() += 0.5 * lambda;
  const MatrixXd rhs = S * X.transpose();  // d x p
  return gram.llt().solve(rhs).transpose();
}

// argmin_S ||X - Z S||^2 + (lambda/2) ||S||^2
MatrixXd solve_right_factor(const Eigen::Ref<const MatrixXd>& X, const MatrixXd& Z, double lambda) {
  if (lambda == 0.0) {
    return Z.completeOrthogonalDecomposition().solve(X);
  }
  MatrixXd gram = Z.transpose() * Z;
  gram.diagonal().array() += 0.5 * lambda;
  return gram.llt().solve(Z.transpose() * X);
}

struct Balanced {
  MatrixXd Z;
  MatrixXd S;
  double nuclear = 0.0;
};

// Re-splits Z S as (Q U sqrt(Sigma)) (sqrt(Sigma) V^T). The product is unchanged
// and (||Z||^2 + ||S||^2) / 2 becomes equal to ||Z S||_*.
Balanced rebalance(const MatrixXd& Z, const MatrixXd& S) {
  const Index p = Z.rows();
  const Index d = Z.cols();
  Eigen::HouseholderQR<MatrixXd> qr(Z);
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(p, d);
  const MatrixXd R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
  Eigen::JacobiSVD<MatrixXd> svd(R * S, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const VectorXd root = svd.singularValues().cwiseSqrt();
  Balanced out;
  out.Z = Q * svd.matrixU() * root.asDiagonal();
  out.S = root.asDiagonal() * svd.matrixV().transpose();
  out.nuclear = svd.singularValues().sum();
  return out;
}

}  // namespace

FactorizationResult factorize(const Eigen::Ref<const MatrixXd>& X, int d, double lambda,
                              const SolverOptions& opts) {
  opts.validate();
  const Index p = X.rows();
  const Index k = X.cols();
  if (d < 1 || d > std::min(p, k)) {
    throw DimensionError("factorization rank " + std::to_string(d) + " must lie in [1, min(p, k)] = [1, " +
                         std::to_string(std::min(p, k)) + "]");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw ConfigError("lambda must be a non-negative finite number");
  }
  if (!X.allFinite()) {
    throw NumericalError("segment contains non-finite entries");
  }

  FactorizationResult result;
  MatrixXd S = standard_normal(d, k, opts.seed);
  MatrixXd Z;
  double previous = std::numeric_limits<double>::infinity();

  for (int iter = 1; iter <= opts.max_iters; ++iter) {
    Z = solve_left_factor(X, S, lambda);
    S = solve_right_factor(X, Z, lambda);
    Balanced balanced = rebalance(Z, S);
    Z = std::move(balanced.Z);
    S = std::move(balanced.S);

    const double fit = (X - Z * S).squaredNorm();
    const double objective = fit + lambda * balanced.nuclear;
    if (!std::isfinite(objective)) {
      throw NumericalError("factorization objective became non-finite at iteration " + std::to_string(iter));
    }
    result.fit_loss = fit;
    result.nuclear_norm = balanced.nuclear;
    result.objective = objective;
    result.iterations = iter;
    result.objective_history.push_back(objective);

    if (objective == 0.0 || (previous - objective) < opts.rel_tol * previous) {
      result.converged = true;
      break;
    }
    previous = objective;
  }

  result.Z = std::move(Z);
  result.S = std::move(S);
  return result;
}

double nuclear_norm_product(const Eigen::Ref<const MatrixXd>& Z, const Eigen::Ref<const MatrixXd>& S) {
  if (Z.cols() != S.rows()) {
    throw DimensionError("inner dimensions disagree: Z has " + std::to_string(Z.cols()) + " columns, S has " +
                         std::to_string(S.rows()) + " rows");
  }
  const Index p = Z.rows();
  const Index d = Z.cols();
  const Index k = S.cols();
  if (d == 0 || p == 0 || k == 0) {
    return 0.0;
  }
  if (d < std::min(p, k)) {
    Eigen::HouseholderQR<MatrixXd> qr(Z);
    const MatrixXd R = qr.matrixQR().topRows(d).triangularView<Eigen::Upper>();
    return Eigen::JacobiSVD<MatrixXd>(R * S).singularValues().sum();
  }
  return Eigen::JacobiSVD<MatrixXd>(Z * S).singularValues().sum();
}

SegmentLoss segment_loss(const Eigen::Ref<const MatrixXd>& X, int d, double lambda,
                         const SolverOptions& opts) {
  const FactorizationResult fitted = factorize(X, d, lambda, opts);
  return {fitted.fit_loss, fitted.nuclear_norm, fitted.objective};
}

MatrixXd orthonormalize(const Eigen::Ref<const MatrixXd>& Z) {
  Eigen::HouseholderQR<MatrixXd> qr(Z);
  return qr.householderQ() * MatrixXd::Identity(Z.rows(), Z.cols());
}

}  // namespace subcpd

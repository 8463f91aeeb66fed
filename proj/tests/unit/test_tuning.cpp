#include "oracles.hpp"
#include "subcpd/simulation.hpp"
#include "subcpd/tuning.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace subcpd;

namespace {

std::vector<LossPoint> planted(double a, double s, Index n, int low, int high) {
  std::vector<LossPoint> pts;
  for (int tau = low; tau <= high; ++tau) {
    const double x = std::log(static_cast<double>(n) / tau);
    pts.push_back({tau, x, a + s * x});
  }
  return pts;
}

}  // namespace

TEST_SUITE("tuning") {

TEST_CASE("constant rows give a degenerate noise scale") {
  MatrixXd X(3, 10);
  X.row(0).setConstant(1.0);
  X.row(1).setConstant(-2.0);
  X.row(2).setConstant(5.0);
  const NoiseScale s = estimate_lambda(TimeSeriesMatrix(X));
  CHECK(s.degenerate);
  CHECK(s.sigma == 0.0);
  CHECK(s.lambda == 0.0);
  CHECK_THROWS_AS(estimate_lambda(TimeSeriesMatrix(MatrixXd::Ones(3, 1))), DimensionError);
}

TEST_CASE("noise scale is consistent for iid normal data") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(seed);
    const NoiseScale s = estimate_lambda(TimeSeriesMatrix(oracle::gaussian(20, 500, rng, 0.1)));
    CHECK(s.sigma >= 0.085);
    CHECK(s.sigma <= 0.115);
    CHECK(s.lambda == s.sigma / 2.0);
    CHECK_FALSE(s.degenerate);
  }
}

TEST_CASE("noise scale is positively homogeneous") {
  std::mt19937_64 rng(1);
  const MatrixXd X = oracle::gaussian(7, 60, rng);
  const double base = estimate_lambda(TimeSeriesMatrix(X)).lambda;
  CHECK(estimate_lambda(TimeSeriesMatrix(2.0 * X)).lambda == 2.0 * base);
  for (double c : {0.01, 3.7, 250.0}) {
    CHECK(std::abs(estimate_lambda(TimeSeriesMatrix(c * X)).lambda - c * base) <= 1e-12 * c * base);
  }
}

TEST_CASE("regression recovers planted affine losses") {
  const Index n = 500;
  {
    const auto pts = planted(7.0, 3.0, n, 9, 15);
    const SlopeFit fit = regress_loss_curve(pts);
    CHECK(std::abs(fit.slope - 3.0) < 1e-9);
    CHECK(std::abs(fit.intercept - 7.0) < 1e-9);
    // A rising curve would need a negative penalty, which is floored.
    CHECK(fit.mu_hat == 0.0);
  }
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(-50.0, 50.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = unif(rng);
    const double s = -std::abs(unif(rng)) / 10.0;
    const SlopeFit fit = regress_loss_curve(planted(a, s, n, 9, 15));
    CHECK(std::abs(fit.mu_hat - (-2.0 * s)) < 1e-9);
    for (const LossPoint& pt : fit.points) {
      CHECK(std::abs(fit.intercept + fit.slope * pt.regressor - pt.loss) < 1e-9);
    }
  }
  const SlopeFit flat = regress_loss_curve(planted(4.0, 0.0, n, 9, 15));
  CHECK(std::abs(flat.slope) < 1e-12);
  CHECK(flat.mu_hat == 0.0);
}

TEST_CASE("regression input checks") {
  const std::vector<LossPoint> one{{1, 1.0, 2.0}};
  CHECK_THROWS_AS(regress_loss_curve(one), ConfigError);
  const std::vector<LossPoint> same_x{{1, 1.0, 2.0}, {2, 1.0, 3.0}};
  CHECK_THROWS_AS(regress_loss_curve(same_x), ConfigError);
}

TEST_CASE("slope regressor and penalised curve arithmetic") {
  CHECK(slope_regressor(5, 500) == doctest::Approx(5.0 * std::log(100.0)));
  const std::vector<double> curve{10.0, 6.0, 5.0};
  const auto pen = penalized_curve(curve, 0.5, 100);
  CHECK(pen[0] == 10.0);
  CHECK(pen[1] == doctest::Approx(6.0 + 0.5 * std::log(100.0)));
  CHECK(pen[2] == doctest::Approx(5.0 + 1.0 * std::log(100.0)));
}

TEST_CASE("slope heuristic preconditions") {
  std::mt19937_64 rng(5);
  const TimeSeriesMatrix X(oracle::gaussian(4, 100, rng));
  DetectionConfig cfg;
  cfg.d = 1;
  cfg.msl = 30;
  CHECK_THROWS_AS(slope_heuristic_mu(X, 4, cfg), ConfigError);
  CHECK_THROWS_AS(slope_heuristic_mu(X, 10, cfg), InsufficientSplitsError);
}

TEST_CASE("slope heuristic on scenario A data") {
  const SyntheticData data = generate(SyntheticSpec::standard(20, 2, NoiseScenario::A, 21));
  DetectionConfig cfg;
  cfg.d = 2;
  cfg.lambda = estimate_lambda(data.X).lambda;
  cfg.grid_mode = true;
  const Detector det(data.X, cfg);
  const SlopeFit fit = slope_heuristic_mu(det, 15);
  CHECK(fit.mu_hat > 0.0);
  CHECK(fit.mu_hat == -2.0 * fit.slope);
  CHECK(fit.points.front().changes == 9);
  CHECK(fit.points.size() >= 2);
  for (std::size_t i = 1; i < fit.loss_curve.size(); ++i) {
    CHECK(fit.loss_curve[i] <= fit.loss_curve[i - 1]);
  }
  const auto pen = penalized_curve(fit.loss_curve, fit.mu_hat, 500);
  CHECK(std::min_element(pen.begin(), pen.end()) - pen.begin() == 4);
  CHECK(det.detect(fit.mu_hat).changepoints.size() == 4);
}

TEST_CASE("eigenvalue ratios on a constructed spectrum") {
  VectorXd eig(5);
  eig << 10.0, 9.0, 0.1, 0.05, 0.01;
  const DimEstimate est = dim_from_eigenvalues(eig, 4);
  REQUIRE(est.ratios.size() == 4);
  CHECK(est.ratios[0] == doctest::Approx(0.9));
  CHECK(est.ratios[1] == doctest::Approx(0.1 / 9.0));
  CHECK(est.ratios[2] == doctest::Approx(0.5));
  CHECK(est.ratios[3] == doctest::Approx(0.2));
  CHECK(est.d_hat == 2);
  CHECK_FALSE(est.low_confidence);
  CHECK_FALSE(est.rank_deficient);
}

TEST_CASE("estimate_dim sees the covariance of the initial window") {
  // Rows of W are orthonormal and orthogonal to the all-ones vector, so the
  // sample covariance of sqrt(m - 1) * diag(sqrt(eig)) * W is exactly diag(eig).
  const Index m = 40;
  std::mt19937_64 rng(2);
  MatrixXd G(6, m);
  G.row(0).setOnes();
  G.bottomRows(5) = oracle::gaussian(5, m, rng);
  Eigen::HouseholderQR<MatrixXd> qr(G.transpose());
  const MatrixXd Q = qr.householderQ() * MatrixXd::Identity(m, 6);
  const MatrixXd W = Q.rightCols(5).transpose();
  VectorXd eig(5);
  eig << 10.0, 9.0, 0.1, 0.05, 0.01;
  const MatrixXd R = oracle::random_orthogonal(5, rng);
  MatrixXd head = std::sqrt(static_cast<double>(m - 1)) * R * eig.cwiseSqrt().asDiagonal() * W;
  MatrixXd X(5, 4 * m);
  X.leftCols(m) = head;
  X.rightCols(3 * m) = oracle::gaussian(5, 3 * m, rng, 100.0);
  const DimEstimate est = estimate_dim(TimeSeriesMatrix(X), 0.25, 4);
  CHECK(est.d_hat == 2);
  for (Index i = 0; i < 5; ++i) {
    CHECK(std::abs(est.eigenvalues(i) - eig(i)) < 1e-10 * eig(0));
  }
}

TEST_CASE("estimate_dim on a 62-variable five-dimensional series") {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SyntheticSpec spec;
    spec.p = 62;
    spec.d = 5;
    spec.n = 700;
    spec.changepoints = {};
    spec.noise.variance = 0.005 * 0.005;
    spec.seed = seed;
    const SyntheticData data = generate(spec);
    const DimEstimate est = estimate_dim(data.X, 0.2, default_max_dim(62));
    CHECK(est.d_hat == 5);
    CHECK_FALSE(est.low_confidence);
  }
}

TEST_CASE("isotropic noise is flagged low-confidence") {
  std::mt19937_64 rng(6);
  const DimEstimate est = estimate_dim(TimeSeriesMatrix(oracle::gaussian(10, 2000, rng)), 1.0, 5);
  CHECK(est.low_confidence);
  CHECK(est.d_hat >= 1);
  CHECK(est.d_hat <= 5);
}

TEST_CASE("estimate_dim is rotation invariant") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 10; ++trial) {
    const SyntheticData data = generate(SyntheticSpec::standard(12, 3, NoiseScenario::A, 100 + trial));
    const MatrixXd Q = oracle::random_orthogonal(12, rng);
    const DimEstimate a = estimate_dim(data.X, 0.2, 6);
    const DimEstimate b = estimate_dim(TimeSeriesMatrix(Q * data.X.values()), 0.2, 6);
    CHECK(a.d_hat == b.d_hat);
    CHECK((a.eigenvalues - b.eigenvalues).norm() < 1e-10 * a.eigenvalues(0));
  }
}

TEST_CASE("rank deficiency and argument checks") {
  VectorXd eig(4);
  eig << 4.0, 0.0, 0.0, 0.0;
  const DimEstimate est = dim_from_eigenvalues(eig, 3);
  CHECK(est.rank_deficient);
  CHECK(est.d_hat == 1);
  CHECK(est.ratios.size() == 1);

  CHECK_THROWS_AS(dim_from_eigenvalues(eig, 4), ConfigError);
  CHECK_THROWS_AS(dim_from_eigenvalues(eig, 0), ConfigError);
  CHECK_THROWS_AS(dim_from_eigenvalues(VectorXd::Zero(4), 2), NumericalError);
  const TimeSeriesMatrix X(MatrixXd::Random(4, 50));
  CHECK_THROWS_AS(estimate_dim(X, 0.0, 2), ConfigError);
  CHECK_THROWS_AS(estimate_dim(X, 1.5, 2), ConfigError);
  CHECK_THROWS_AS(estimate_dim(X, 0.01, 2), DimensionError);
  CHECK(estimate_dim(X, 0.06, 2).short_window);
  CHECK_FALSE(estimate_dim(X, 0.5, 2).short_window);

  CHECK(default_max_dim(20) == 10);
  CHECK(default_max_dim(62) == 31);
  CHECK(default_max_dim(3) == 1);
  CHECK(default_max_dim(2) == 1);
}

}  // TEST_SUITE

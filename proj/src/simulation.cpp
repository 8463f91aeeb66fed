#include "subcpd/simulation.hpp"

#include "subcpd/factorization.hpp"
#include "subcpd/random.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <random>

namespace subcpd {

namespace {

constexpr double kScenarioAVariance = 0.005;
constexpr double kScenarioCVariance = 0.05;
constexpr double kScenarioBCoefficient = 0.7;

enum Stream : std::uint64_t { kBasisStream = 1, kRotationStream, kSignalStream, kNoiseStream };

MatrixXd normal_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd out(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      out(i, j) = normal(rng);
    }
  }
  return out;
}

}  // namespace

std::string to_string(NoiseScenario scenario) {
  switch (scenario) {
    case NoiseScenario::A:
      return "A";
    case NoiseScenario::B:
      return "B";
    case NoiseScenario::C:
      return "C";
  }
  return "?";
}

NoiseScenario parse_scenario(std::string_view name) {
  if (name.size() == 1) {
    switch (std::toupper(static_cast<unsigned char>(name[0]))) {
      case 'A':
        return NoiseScenario::A;
      case 'B':
        return NoiseScenario::B;
      case 'C':
        return NoiseScenario::C;
      default:
        break;
    }
  }
  throw ConfigError("unknown noise scenario '" + std::string(name) + "' (expected A, B or C)");
}

NoiseModel NoiseModel::for_scenario(NoiseScenario scenario) {
  switch (scenario) {
    case NoiseScenario::A:
      return {scenario, kScenarioAVariance, 0.0};
    case NoiseScenario::B:
      return {scenario, kScenarioAVariance, kScenarioBCoefficient};
    case NoiseScenario::C:
      return {scenario, kScenarioCVariance, 0.0};
  }
  throw ConfigError("unknown noise scenario");
}

SyntheticSpec SyntheticSpec::standard(Index p, int d, NoiseScenario scenario, std::uint64_t seed) {
  SyntheticSpec spec;
  spec.p = p;
  spec.d = d;
  spec.delta = std::sqrt(static_cast<double>(d)) / 2.0;
  spec.noise = NoiseModel::for_scenario(scenario);
  spec.seed = seed;
  return spec;
}

void SyntheticSpec::validate() const {
  if (d < 1 || p < 1 || n < 1) {
    throw ConfigError("p, d and n must be positive");
  }
  if (d >= p) {
    throw ConfigError("subspace dimension d must be smaller than p");
  }
  if (!std::is_sorted(changepoints.begin(), changepoints.end()) ||
      std::adjacent_find(changepoints.begin(), changepoints.end()) != changepoints.end()) {
    throw ConfigError("change-points must be strictly increasing");
  }
  for (Index tau : changepoints) {
    if (tau <= 0 || tau >= n) {
      throw ConfigError("change-point " + std::to_string(tau) + " outside (0, n)");
    }
  }
  if (!(delta >= 0.0) || delta > std::sqrt(static_cast<double>(d)) * (1.0 + 1e-12)) {
    throw ConfigError("delta must lie in [0, sqrt(d)]");
  }
  if (!changepoints.empty() && delta > 0.0 && p < 2 * d) {
    throw ConfigError("rotating a basis requires p >= 2d");
  }
  if (!(noise.variance >= 0.0) || !std::isfinite(noise.variance)) {
    throw ConfigError("noise variance must be a non-negative finite number");
  }
  if (noise.scenario == NoiseScenario::B && !(std::abs(noise.ar_coefficient) < 1.0)) {
    throw ConfigError("AR(1) coefficient must lie in (-1, 1)");
  }
}

MatrixXd random_basis(Index p, int d, std::uint64_t seed) {
  if (d < 1 || d > p) {
    throw DimensionError("random basis needs 1 <= d <= p");
  }
  std::mt19937_64 rng(seed);
  return orthonormalize(normal_matrix(p, d, rng));
}

MatrixXd rotate_basis(const MatrixXd& Z, double delta, std::uint64_t seed, DistanceConvention convention) {
  const Index p = Z.rows();
  const double d = static_cast<double>(Z.cols());
  if (!(delta >= 0.0) || delta > std::sqrt(d) * (1.0 + 1e-12)) {
    throw ConfigError("delta must lie in [0, sqrt(d)]");
  }
  if (delta == 0.0) {
    return Z;
  }
  if (p < 2 * Z.cols()) {
    throw DimensionError("rotating a basis requires p >= 2d");
  }

  double cos_theta = 0.0;
  if (convention == DistanceConvention::kSquared) {
    // ||Z^T Z'||_F^2 = d cos^2(theta)
    cos_theta = std::sqrt(std::max(0.0, 1.0 - delta * delta / d));
  } else {
    // ||Z^T Z'||_F = sqrt(d) cos(theta)
    cos_theta = (d - delta * delta) / std::sqrt(d);
    if (cos_theta < 0.0 || cos_theta > 1.0) {
      throw ConfigError("delta is infeasible under the unsquared distance convention");
    }
  }
  const double sin_theta = std::sqrt(std::max(0.0, 1.0 - cos_theta * cos_theta));

  std::mt19937_64 rng(seed);
  MatrixXd G = normal_matrix(p, Z.cols(), rng);
  for (int pass = 0; pass < 2; ++pass) {
    G -= Z * (Z.transpose() * G);
  }
  const MatrixXd W = orthonormalize(G);
  return cos_theta * Z + sin_theta * W;
}

double squared_subspace_distance(const MatrixXd& A, const MatrixXd& B) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    throw DimensionError("bases must have the same shape");
  }
  return static_cast<double>(A.cols()) - (A.transpose() * B).squaredNorm();
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  const Index p = spec.p;
  const Index n = spec.n;

  GroundTruth truth;
  truth.changepoints = spec.changepoints;
  truth.sigma = std::sqrt(spec.noise.variance);
  truth.bases.push_back(random_basis(p, spec.d, derive_seed(spec.seed, {kBasisStream})));
  for (std::size_t i = 0; i < spec.changepoints.size(); ++i) {
    truth.bases.push_back(
        rotate_basis(truth.bases.back(), spec.delta, derive_seed(spec.seed, {kRotationStream, i}), spec.convention));
  }

  truth.labels.assign(static_cast<std::size_t>(n), 0);
  {
    int label = 0;
    std::size_t next = 0;
    for (Index t = 0; t < n; ++t) {
      if (next < spec.changepoints.size() && t == spec.changepoints[next]) {
        ++label;
        ++next;
      }
      truth.labels[static_cast<std::size_t>(t)] = label;
    }
  }

  std::mt19937_64 signal_rng(derive_seed(spec.seed, {kSignalStream}));
  const MatrixXd signal = normal_matrix(spec.d, n, signal_rng);
  MatrixXd X(p, n);
  for (Index t = 0; t < n; ++t) {
    X.col(t) = truth.bases[static_cast<std::size_t>(truth.labels[static_cast<std::size_t>(t)])] * signal.col(t);
  }

  std::mt19937_64 noise_rng(derive_seed(spec.seed, {kNoiseStream}));
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sigma = truth.sigma;
  if (spec.noise.scenario == NoiseScenario::B) {
    const double phi = spec.noise.ar_coefficient;
    const double innovation_sd = sigma * std::sqrt(1.0 - phi * phi);
    for (Index r = 0; r < p; ++r) {
      double previous = sigma * normal(noise_rng);  // stationary start
      X(r, 0) += previous;
      for (Index t = 1; t < n; ++t) {
        previous = phi * previous + innovation_sd * normal(noise_rng);
        X(r, t) += previous;
      }
    }
  } else {
    for (Index t = 0; t < n; ++t) {
      for (Index r = 0; r < p; ++r) {
        X(r, t) += sigma * normal(noise_rng);
      }
    }
  }

  return {TimeSeriesMatrix(std::move(X)), std::move(truth)};
}

}  // namespace subcpd

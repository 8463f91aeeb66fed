#pragma once

#include "subcpd/types.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace subcpd {

enum class NoiseScenario {
  A,  // iid normal, variance 0.005
  B,  // per-coordinate AR(1), coefficient 0.7, stationary variance 0.005
  C,  // iid normal, variance 0.05
};

std::string to_string(NoiseScenario scenario);
/// Accepts "A", "B", "C" (case-insensitive); throws ConfigError otherwise.
NoiseScenario parse_scenario(std::string_view name);

struct NoiseModel {
  NoiseScenario scenario = NoiseScenario::A;
  /// Marginal variance of every noise entry.
  double variance = 0.005;
  /// AR(1) coefficient; only used by scenario B.
  double ar_coefficient = 0.0;

  static NoiseModel for_scenario(NoiseScenario scenario);
};

/// How the distance between consecutive bases is read.
enum class DistanceConvention {
  kSquared,    // d - ||Z_i^T Z_{i+1}||_F^2 = delta^2
  kUnsquared,  // d - ||Z_i^T Z_{i+1}||_F   = delta^2
};

struct SyntheticSpec {
  Index p = 20;
  int d = 2;
  Index n = 500;
  std::vector<Index> changepoints{100, 200, 300, 400};
  double delta = 0.0;
  NoiseModel noise;
  std::uint64_t seed = 0;
  DistanceConvention convention = DistanceConvention::kSquared;

  /// n = 500, changes at 100/200/300/400, delta = sqrt(d) / 2.
  static SyntheticSpec standard(Index p, int d, NoiseScenario scenario, std::uint64_t seed);

  void validate() const;
};

struct GroundTruth {
  std::vector<Index> changepoints;
  std::vector<int> labels;
  std::vector<MatrixXd> bases;
  double sigma = 0.0;
};

struct SyntheticData {
  TimeSeriesMatrix X;
  GroundTruth truth;
};

/// Orthonormalised p x d matrix of iid standard normals.
MatrixXd random_basis(Index p, int d, std::uint64_t seed);

/// Rotates every column of Z by a common angle toward a random orthonormal set
/// in the orthogonal complement of span(Z), so that the chordal distance to Z
/// equals delta. Requires p >= 2d unless delta == 0.
MatrixXd rotate_basis(const MatrixXd& Z, double delta, std::uint64_t seed,
                      DistanceConvention convention = DistanceConvention::kSquared);

/// d - ||A^T B||_F^2 for two p x d orthonormal bases.
double squared_subspace_distance(const MatrixXd& A, const MatrixXd& B);

SyntheticData generate(const SyntheticSpec& spec);

}  // namespace subcpd

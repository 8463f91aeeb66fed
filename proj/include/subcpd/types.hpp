#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace subcpd {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes that do not fit together (rank larger than the segment, mismatched products, ...).
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A computation produced a non-finite value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Invalid user-supplied configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Binary segmentation ran out of admissible splits before the requested count.
class InsufficientSplitsError : public Error {
 public:
  using Error::Error;
};

/// Half-open, zero-based column range [begin, end) of a series.
///
/// A change-point tau splits a segment into [begin, tau) and [tau, end), so
/// tau is also the one-based index of the last time point on the left.
struct Segment {
  Index begin = 0;
  Index end = 0;

  Index size() const { return end - begin; }
  friend bool operator==(const Segment&, const Segment&) = default;
  friend auto operator<=>(const Segment&, const Segment&) = default;
};

/// p x n data matrix: one row per variable, one column per time point.
class TimeSeriesMatrix {
 public:
  /// Throws DimensionError on an empty matrix and NumericalError on non-finite entries.
  explicit TimeSeriesMatrix(MatrixXd values);

  Index dims() const { return values_.rows(); }
  Index length() const { return values_.cols(); }
  const MatrixXd& values() const { return values_; }

  auto columns(Segment seg) const { return values_.middleCols(seg.begin, seg.size()); }

 private:
  MatrixXd values_;
};

}  // namespace subcpd

#include "subcpd/types.hpp"

#include <utility>

namespace subcpd {

TimeSeriesMatrix::TimeSeriesMatrix(MatrixXd values) : values_(std::move(values)) {
  if (values_.rows() < 1 || values_.cols() < 1) {
    throw DimensionError("time series must have at least one variable and one time point");
  }
  if (!values_.allFinite()) {
    throw NumericalError("time series contains non-finite entries");
  }
}

}  // namespace subcpd

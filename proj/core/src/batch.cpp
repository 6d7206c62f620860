#include "streamglm/batch.hpp"

#include <cmath>

#include "streamglm/errors.hpp"

namespace streamglm {

Index Batch::n_observed() const {
  Index count = 0;
  for (Index i = 0; i < observed.size(); ++i) count += observed[i] ? 1 : 0;
  return count;
}

Eigen::VectorXd Batch::residuals(const Eigen::VectorXd& mu) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n());
  for (Index i = 0; i < n(); ++i) {
    if (observed[i]) r[i] = y[i] - mu[i];
  }
  return r;
}

void Batch::validate() const {
  const Index rows = x.rows();
  if (rows == 0) throw InvalidInputError("batch is empty");
  if (observed.size() != rows || y.size() != rows) {
    throw InvalidInputError("batch fields have inconsistent row counts");
  }
  if (z.cols() > 0 && z.rows() != rows) {
    throw InvalidInputError("z block row count does not match x");
  }
  for (Index i = 0; i < rows; ++i) {
    if (observed[i] != 0 && observed[i] != 1) {
      throw InvalidInputError("delta must be 0 or 1");
    }
    if (observed[i] && !std::isfinite(y[i])) {
      throw InvalidInputError("observed response must be finite");
    }
  }
}

}  // namespace streamglm

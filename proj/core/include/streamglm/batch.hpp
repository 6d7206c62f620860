#ifndef STREAMGLM_BATCH_HPP
#define STREAMGLM_BATCH_HPP

#include <Eigen/Core>
#include <cstdint>

namespace streamglm {

using Eigen::Index;

/// One chunk of the stream, stored column-wise.
///
/// `y` holds NaN where `observed` is 0; those entries are masked out before any
/// arithmetic touches them. `z` is empty (0 columns) for homogeneous streams.
struct Batch {
  Eigen::ArrayX<std::uint8_t> observed;  // delta indicator, one per row
  Eigen::VectorXd y;                     // response; NaN where observed == 0
  Eigen::MatrixXd x;                     // n x p covariates, fully observed
  Eigen::MatrixXd z;                     // n x q batch-specific covariates (may have 0 cols)

  Index n() const { return x.rows(); }
  Index p() const { return x.cols(); }
  Index q() const { return z.cols(); }
  bool has_z() const { return z.cols() > 0; }
  Index n_observed() const;

  /// delta_i==1 ? y_i - mu_i : 0. Never reads y where the response is missing.
  Eigen::VectorXd residuals(const Eigen::VectorXd& mu) const;

  /// Basic shape/content validation; throws InvalidInputError on violation.
  void validate() const;
};

}  // namespace streamglm

#endif

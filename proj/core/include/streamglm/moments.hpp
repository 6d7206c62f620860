#ifndef STREAMGLM_MOMENTS_HPP
#define STREAMGLM_MOMENTS_HPP

#include <Eigen/Core>
#include <cstdint>

namespace streamglm {

/// Running moment sums backing the plug-in covariance in accumulated mode.
/// S is the per-observation weighted score, V the propensity score; bread is
/// the empirical information term. All sums are raw (unnormalized).
struct ScoreMoments {
  std::int64_t n{0};
  Eigen::VectorXd sum_s, sum_v;
  Eigen::MatrixXd sum_ss, sum_sv, sum_vv, sum_bread;

  void init(Eigen::Index p) {
    n = 0;
    sum_s = Eigen::VectorXd::Zero(p);
    sum_v = Eigen::VectorXd::Zero(p);
    sum_ss = Eigen::MatrixXd::Zero(p, p);
    sum_sv = Eigen::MatrixXd::Zero(p, p);
    sum_vv = Eigen::MatrixXd::Zero(p, p);
    sum_bread = Eigen::MatrixXd::Zero(p, p);
  }
};

}  // namespace streamglm

#endif

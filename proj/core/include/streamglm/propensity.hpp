#ifndef STREAMGLM_PROPENSITY_HPP
#define STREAMGLM_PROPENSITY_HPP

#include <Eigen/Core>
#include <cstdint>
#include <limits>

#include "streamglm/batch.hpp"

namespace streamglm {

/// Floor applied to pi wherever 1/pi is consumed as a weight. Never applied
/// inside the alpha estimating function.
constexpr double kPropensityFloor = 1e-6;

/// Logistic missingness model pi(x; alpha) and its renewable estimator.
///
/// The state is a constant-memory summary: the current estimate and the
/// accumulated negative-Hessian mass over past batches (raw sums, so unequal
/// batch sizes pool the same way the offline fit does). Two non-updatable
/// modes exist for oracle-weight runs: a frozen alpha vector, and a known
/// constant probability (covers complete data, where the logistic MLE for
/// alpha does not exist). In both, the score is identically zero and update
/// only advances counters.
struct PropensityState {
  enum class Mode { estimated, frozen_alpha, known_constant };

  Eigen::VectorXd alpha_hat;
  Eigen::MatrixXd h_tilde;  // sum over past batches of n_j * H(d_j; alpha_j)
  std::int64_t n_total{0};
  std::int64_t batch_count{0};
  Mode mode{Mode::estimated};
  double known_pi{std::numeric_limits<double>::quiet_NaN()};

  static PropensityState initial(Index p);
  static PropensityState frozen(Eigen::VectorXd alpha);
  static PropensityState known(Index p, double pi0);

  bool updatable() const { return mode == Mode::estimated; }
  Index dim() const { return alpha_hat.size(); }

  /// Per-row observation probabilities at this state's parameters (unclipped).
  Eigen::VectorXd propensities(const Batch& batch) const;
  /// Per-row IPW weights delta_i / max(pi_i, floor).
  Eigen::VectorXd weights(const Batch& batch) const;
};

/// pi(x; alpha) = logistic(x' alpha). Throws on dimension mismatch.
double propensity(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& alpha);

/// Weight-side value: clip(pi, floor, 1).
double clipped_propensity(double pi);

/// Mean estimating function (1/n_j) sum_i x_i (delta_i - pi_i); the logistic
/// form in which grad_alpha pi = pi (1-pi) x cancels the denominator.
Eigen::VectorXd v_batch(const Batch& batch, const Eigen::VectorXd& alpha);

/// Mean negative Jacobian (1/n_j) sum_i x_i pi_i (1-pi_i) x_i'; symmetric PSD.
Eigen::MatrixXd h_batch(const Batch& batch, const Eigen::VectorXd& alpha);

/// Absorbs one batch: solves the renewable alpha equation
///   H_tilde_{k-1} (alpha - alpha_{k-1}) - n_k V(d_k; alpha) = 0
/// then advances H_tilde with n_k * H(d_k; alpha_k) evaluated at the new
/// estimate. The first batch reduces to the batch logistic MLE. Throws
/// NumericFailure / NonConvergence per the solver policy.
PropensityState update_alpha(const PropensityState& state, const Batch& batch);

}  // namespace streamglm

#endif

#ifndef STREAMGLM_INFERENCE_HPP
#define STREAMGLM_INFERENCE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <utility>

#include "streamglm/updater.hpp"

namespace streamglm {

enum class VarianceSource { current_batch, accumulated };

VarianceSource variance_source_from_name(const std::string& name);
const char* variance_source_name(VarianceSource source);

/// Plug-in estimate of the asymptotic covariance of sqrt(N_k) (beta_k - beta0).
struct CovarianceEstimate {
  Eigen::MatrixXd sigma_hat;
  std::int64_t n_effective{0};
  VarianceSource source{VarianceSource::current_batch};
};

/// Folds one batch, evaluated at (beta, alpha) current when it is absorbed,
/// into the running moment sums. V terms are identically zero when the
/// propensity is frozen or known.
void accumulate_score_moments(ScoreMoments& moments, const Family& family, const Batch& batch,
                              const Eigen::VectorXd& beta, const PropensityState& prop);

/// Sandwich with empirical averages at (beta_k, alpha_k):
///   bread = E_hat[x (v g_mu^2)^-1 x']^-1
///   meat  = Var_hat{ S_i - J_i },  J_i = E_hat[S V'] E_hat[V V']^-1 V_i
/// The default uses the current batch; accumulated mode uses the moment sums
/// the state maintained across all ingested batches.
CovarianceEstimate sigma_hat(const UipwState& state, const Batch& batch,
                             VarianceSource source = VarianceSource::current_batch);

/// Covariance from explicit moment sums (shared by the UIPW and EUIPW paths).
CovarianceEstimate sigma_from_moments(const ScoreMoments& moments, VarianceSource source);

/// Wald statistic N_k (b - b0)' Sigma^-1 (b - b0) with its chi-squared(p) p-value.
std::pair<double, double> wald_test(const Eigen::VectorXd& beta_hat,
                                    const CovarianceEstimate& sigma, std::int64_t n_k,
                                    const Eigen::VectorXd& beta_null);

/// Confidence ellipsoid {b : (b - center)' shape^-1 (b - center) <= radius2}
/// with shape = Sigma / N_k, plus per-coordinate two-sided bands at the same level.
struct ConfidenceRegion {
  Eigen::VectorXd center;
  Eigen::MatrixXd shape;
  double radius2{0.0};
  Eigen::VectorXd band_lo, band_hi;
  double level{0.0};
};

ConfidenceRegion confidence_region(const Eigen::VectorXd& beta_hat,
                                   const CovarianceEstimate& sigma, std::int64_t n_k,
                                   double level);

}  // namespace streamglm

#endif

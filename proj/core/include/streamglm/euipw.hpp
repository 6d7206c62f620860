#ifndef STREAMGLM_EUIPW_HPP
#define STREAMGLM_EUIPW_HPP

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "streamglm/batch.hpp"
#include "streamglm/family.hpp"
#include "streamglm/inference.hpp"
#include "streamglm/linalg.hpp"
#include "streamglm/moments.hpp"
#include "streamglm/propensity.hpp"

namespace streamglm {

/// Constant-memory summary for the efficient-score estimator on heterogeneous
/// streams. Mirrors UipwState with the efficient score U in place of S: the
/// G aggregates are stored in the same shift-free decomposition. Past batch
/// nuisance estimates are never retained beyond gamma_last (diagnostic only).
struct HeteroState {
  Family family{Family::bernoulli_logit()};
  PropensityState prop;
  Eigen::VectorXd beta_hat;    // p
  Eigen::VectorXd alpha_prev;  // p
  Eigen::VectorXd gamma_last;  // q

  Eigen::MatrixXd sum_g_alpha;
  Eigen::MatrixXd sum_g_beta;
  Tensor3 sum_g_ab;
  Eigen::MatrixXd sum_gab_beta;
  Eigen::MatrixXd sum_gab_alpha;

  ScoreMoments moments;  // on the efficient score, for plug-in bands
  std::int64_t n_total{0};
  std::int64_t batch_count{0};
  std::uint64_t ingest_digest{1469598103934665603ULL};

  static HeteroState initial(Family family, Index p, Index q);
  static HeteroState with_propensity(Family family, PropensityState prop, Index q);

  Index dim() const { return beta_hat.size(); }
  Index nuisance_dim() const { return gamma_last.size(); }
  Eigen::MatrixXd g1_tilde(const Eigen::VectorXd& beta_prev) const;
  Eigen::MatrixXd g2_tilde(const Eigen::VectorXd& alpha_new) const;
};

/// Nuisance score (1/n_j) sum_i w_i (y_i - mu_i) z_i with mu_i = mean(x'beta + z'gamma).
Eigen::VectorXd t_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma);
Eigen::VectorXd t_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const PropensityState& prop, const Eigen::VectorXd& gamma);

/// Joint Newton solve of the stacked system S(beta | d, alpha, gamma) = 0,
/// T(gamma | d, beta, alpha) = 0. Returns (beta_local, gamma); the beta part
/// is a per-batch diagnostic and is not fed back into the stream.
std::pair<Eigen::VectorXd, Eigen::VectorXd> solve_batch_nuisance(const Family& family,
                                                                 const Batch& batch,
                                                                 const PropensityState& prop);

/// Efficient score U = S - Ibg Igg^-1 T with the information submatrices
/// estimated by per-observation empirical outer-product averages on the
/// current batch. Near-singular Igg is ridged by 1e-8 * trace/q; the flag
/// reports when that guard fired.
struct EfficientScore {
  Eigen::VectorXd u;
  bool ridged{false};
};
EfficientScore efficient_score(const Family& family, const Batch& batch,
                               const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& gamma);
EfficientScore efficient_score(const Family& family, const Batch& batch,
                               const Eigen::VectorXd& beta, const PropensityState& prop,
                               const Eigen::VectorXd& gamma);

/// Two-step absorption: update_alpha, per-batch nuisance solve, then the
/// efficient-score updating equation solved with the same frozen-matrix inner
/// iteration as the homogeneous case. Derivatives of U are central finite
/// differences with step 1e-6 * (1 + |parameter|).
HeteroState ingest_hetero(const HeteroState& state, const Batch& batch);

/// Plug-in covariance for the beta part, built on the efficient score.
CovarianceEstimate sigma_hat(const HeteroState& state, const Batch& batch,
                             VarianceSource source = VarianceSource::current_batch);

}  // namespace streamglm

#endif

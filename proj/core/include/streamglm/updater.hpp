#ifndef STREAMGLM_UPDATER_HPP
#define STREAMGLM_UPDATER_HPP

#include <Eigen/Core>
#include <cstdint>
#include <utility>

#include "streamglm/batch.hpp"
#include "streamglm/family.hpp"
#include "streamglm/linalg.hpp"
#include "streamglm/moments.hpp"
#include "streamglm/propensity.hpp"

namespace streamglm {

/// Batch score and its first/mixed derivatives, all in per-batch mean form.
/// Layout of the mixed tensor: r_alphabeta[a, b, c] = d^2 S_a / (d alpha_c d beta_b),
/// so contracting over b gives a matrix acting on delta-alpha and contracting
/// over c gives a matrix acting on delta-beta.
struct DerivativeBundle {
  Eigen::VectorXd s;
  Eigen::MatrixXd r_beta;
  Eigen::MatrixXd r_alpha;
  Tensor3 r_alphabeta;
};

/// Constant-memory summary for the updatable IPW estimator.
///
/// The accumulated aggregates depend on estimates that are unknown at
/// absorption time (the previous beta and the incoming alpha), so the state
/// stores the shift-free pieces separately and reconstructs the aggregates
/// exactly at any later batch:
///   sum_j L1_j = sum_r_alpha + (sum_r_ab . beta_{k-1}) - sum_rab_beta
///   sum_j L2_j = sum_r_beta  + (sum_r_ab . alpha_k)    - sum_rab_alpha
/// All sums are raw (batch-size weighted). Size depends on p only.
struct UipwState {
  Family family{Family::gaussian_identity()};
  PropensityState prop;
  Eigen::VectorXd beta_hat;
  Eigen::VectorXd alpha_prev;

  Eigen::MatrixXd sum_r_alpha;
  Eigen::MatrixXd sum_r_beta;
  Tensor3 sum_r_ab;
  Eigen::MatrixXd sum_rab_beta;   // sum_j n_j (R_ab_j . beta_j), contraction over b
  Eigen::MatrixXd sum_rab_alpha;  // sum_j n_j (R_ab_j . alpha_j), contraction over c

  ScoreMoments moments;  // accumulated-mode plug-in covariance sums
  std::int64_t n_total{0};
  std::int64_t batch_count{0};
  std::uint64_t ingest_digest{1469598103934665603ULL};  // FNV-1a over (k, n_k)

  static UipwState initial(Family family, Index p);
  /// Oracle-weight / complete-data variants: a frozen or known-constant propensity.
  static UipwState with_propensity(Family family, PropensityState prop);

  Index dim() const { return beta_hat.size(); }
  Eigen::MatrixXd l1_tilde(const Eigen::VectorXd& beta_prev) const;
  Eigen::MatrixXd l2_tilde(const Eigen::VectorXd& alpha_new) const;
};

/// IPW-weighted batch score (1/n_j) sum_i w_i (y_i - mu_i) x_i with
/// w_i = delta_i / clip(pi_i) and mu_i = mean(x_i' beta).
Eigen::VectorXd s_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha);
Eigen::VectorXd s_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const PropensityState& prop);

/// Analytic score derivatives under the logistic propensity. In frozen or
/// known-propensity modes the alpha-direction blocks are identically zero.
DerivativeBundle derivative_bundle(const Family& family, const Batch& batch,
                                   const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha);
DerivativeBundle derivative_bundle(const Family& family, const Batch& batch,
                                   const Eigen::VectorXd& beta, const PropensityState& prop);

/// L1 = R_alpha + R_ab . beta_shift (over b); L2 = R_beta + R_ab . alpha_shift (over c).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> l_aggregates(const DerivativeBundle& bundle,
                                                         const Eigen::VectorXd& beta_shift,
                                                         const Eigen::VectorXd& alpha_shift);

/// Step 2: solves the updatable estimating equation
///   L1_tilde (alpha_k - alpha_{k-1}) + L2_tilde (beta - beta_{k-1}) + n_k S(beta | d_k, alpha_k) = 0
/// with the Newton matrix {L2_tilde + n_k R_beta(beta_{k-1} | d_k, alpha_k)} held fixed
/// across inner iterations, then advances all accumulators with the bundle at
/// (beta_k, alpha_k). The first batch is the plain batch IPW solve.
UipwState update_beta(const UipwState& state, const Batch& batch,
                      const Eigen::VectorXd& alpha_new);

/// One full two-step absorption: update_alpha, then update_beta with the fresh
/// alpha. The raw batch is never retained.
UipwState ingest(const UipwState& state, const Batch& batch);

/// FNV-1a fold of one ingest event into the running stream digest.
std::uint64_t fold_digest(std::uint64_t digest, std::int64_t batch_index, std::int64_t n_rows);

}  // namespace streamglm

#endif

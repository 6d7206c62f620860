#ifndef STREAMGLM_SIMGEN_HPP
#define STREAMGLM_SIMGEN_HPP

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

#include "streamglm/batch.hpp"
#include "streamglm/report.hpp"
#include "streamglm/rng.hpp"

namespace streamglm {

/// Generating parameters for each design.
Eigen::VectorXd design_beta0(Design design);
Eigen::VectorXd design_alpha0(Design design);
Index design_p(Design design);
Index design_q(Design design);
Family design_family(Design design);

/// Linear model y = x' beta0 + eps with x1,x2 ~ U(0,1), x3,x4 ~ N(0,1),
/// eps ~ N(0,1); responses blanked by the logistic missingness model at
/// alpha0. `force_observe` keeps every response (test fixtures).
Batch gen_linear_batch(Index n, Rng& rng, bool force_observe = false);

/// Bernoulli responses with success probability logistic(x' beta0); same
/// covariate laws and missingness model.
Batch gen_logistic_batch(Index n, Rng& rng, bool force_observe = false);

/// Heterogeneous design: x in R^2 with independent U(0,1) coordinates,
/// z_t ~ N(x_t - 0.3, 1), logit P(y=1) = x'beta + z'gamma_j with the batch
/// nuisance gamma_j = (U(-1,1), U(-2,2)) drawn once per batch from `rng`.
/// The draw used is reported through `gamma_out` when non-null.
Batch gen_hetero_batch(Index n, Rng& rng, Eigen::VectorXd* gamma_out = nullptr,
                       bool force_observe = false,
                       const std::optional<Eigen::VectorXd>& gamma_fixed = std::nullopt);

/// Per-batch RNG for batch j of replication r under a master seed.
Rng make_batch_rng(std::uint64_t master_seed, int replication, int batch_index);

Batch gen_design_batch(Design design, Index n, Rng& rng);

struct RunOptions {
  std::vector<std::string> estimators;  // empty = all for the design
  VarianceSource variance{VarianceSource::current_batch};
  int jobs{1};
  bool record_trajectory{false};
};

/// Streams every replication through the updatable estimator and the
/// comparison fits, aggregating MSE = mean_r ||beta_r - beta0||^2 along with
/// wall-clock and failure counts. Deterministic given (spec, options) up to
/// the timing fields: replications use independent derived RNG streams and
/// the reduction is ordered by replication index.
ExperimentReport run_experiment(const DesignSpec& spec, const RunOptions& options = {});

}  // namespace streamglm

#endif

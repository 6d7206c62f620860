#ifndef STREAMGLM_BASELINES_HPP
#define STREAMGLM_BASELINES_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <vector>

#include "streamglm/batch.hpp"
#include "streamglm/family.hpp"
#include "streamglm/propensity.hpp"

namespace streamglm {

struct SolverConfig {
  enum class Method { newton_raphson, sgd };
  Method method{Method::newton_raphson};
  double tol{1e-8};
  int max_iter{50};  // Newton iterations, or SGD passes over the batch
  double sgd_rate_a{0.5};
  double sgd_rate_b{10.0};
  std::uint64_t seed{0};
};

/// Shared knobs for the comparison estimators. Newton is the primary
/// per-batch solver; below the small-batch threshold a Newton breakdown falls
/// back to SGD, which has no initial-value sensitivity. A frozen/known
/// propensity template switches all fits to oracle weights.
struct BaselineOptions {
  int small_batch_threshold{200};
  SolverConfig newton{};
  SolverConfig sgd{SolverConfig::Method::sgd, 1e-8, 10, 0.5, 10.0, 0};
  std::optional<PropensityState> propensity;
};

/// Offline IPW fit on the pooled data: alpha by the pooled logistic MLE, then
/// beta by Newton on the pooled weighted score. Deliberately retains every
/// batch; this is the gold-standard comparator, not a streaming method.
Eigen::VectorXd oracle_fit(const Family& family, const std::vector<Batch>& batches,
                           const BaselineOptions& options = {});

/// Arithmetic mean of independent per-batch two-step IPW fits.
Eigen::VectorXd average_fit(const Family& family, const std::vector<Batch>& batches,
                            const BaselineOptions& options = {});

/// Two-step IPW fit on a single batch (the "current data only" estimator).
Eigen::VectorXd naive_fit(const Family& family, const Batch& batch,
                          const BaselineOptions& options = {});

/// Robbins-Monro score ascent over the batch's rows with step a/(t+b).
/// `max_iter` counts full passes; zero passes returns the zero start.
Eigen::VectorXd sgd_fit(const Family& family, const Batch& batch, const PropensityState& prop,
                        const SolverConfig& config);

/// Heterogeneous-stream analogs. The oracle is the full-data Newton solve of
/// the stacked score system with every per-batch nuisance vector as a free
/// parameter; its cost grows with the batch count by construction.
Eigen::VectorXd oracle_fit_hetero(const Family& family, const std::vector<Batch>& batches,
                                  const BaselineOptions& options = {});
Eigen::VectorXd average_fit_hetero(const Family& family, const std::vector<Batch>& batches,
                                   const BaselineOptions& options = {});
Eigen::VectorXd naive_fit_hetero(const Family& family, const Batch& batch,
                                 const BaselineOptions& options = {});

}  // namespace streamglm

#endif

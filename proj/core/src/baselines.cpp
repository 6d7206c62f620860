#include "streamglm/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "streamglm/errors.hpp"
#include "streamglm/euipw.hpp"
#include "streamglm/linalg.hpp"
#include "streamglm/updater.hpp"

namespace streamglm {

namespace {

PropensityState propensity_template(const BaselineOptions& options, Index p) {
  if (options.propensity) {
    if (options.propensity->mode != PropensityState::Mode::known_constant &&
        options.propensity->dim() != p) {
      throw InvalidInputError("baseline propensity template dimension mismatch");
    }
    return *options.propensity;
  }
  return PropensityState::initial(p);
}

// Pooled logistic MLE for alpha, refreshed-Jacobian Newton from zero.
Eigen::VectorXd pooled_alpha_mle(const std::vector<Batch>& batches, const SolverConfig& config) {
  const Index p = batches.front().p();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(p);
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.max_iter; ++r) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd info = Eigen::MatrixXd::Zero(p, p);
    for (const Batch& batch : batches) {
      const double nj = static_cast<double>(batch.n());
      score += nj * v_batch(batch, alpha);
      info += nj * h_batch(batch, alpha);
    }
    const Eigen::VectorXd step = solve_with_ridge(info, score, +1.0, "pooled_alpha_mle");
    alpha += step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < config.tol) return alpha;
  }
  throw NonConvergence("pooled_alpha_mle: no convergence", alpha, step_norm);
}

// Pooled IPW score solve for beta given a propensity state.
Eigen::VectorXd pooled_beta_ipw(const Family& family, const std::vector<Batch>& batches,
                                const PropensityState& prop, const SolverConfig& config) {
  const Index p = batches.front().p();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < config.max_iter; ++r) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(p, p);
    for (const Batch& batch : batches) {
      const double nj = static_cast<double>(batch.n());
      const DerivativeBundle bundle = derivative_bundle(family, batch, beta, prop);
      score += nj * bundle.s;
      jac += nj * bundle.r_beta;
    }
    const Eigen::VectorXd step = solve_with_ridge(jac, score, -1.0, "pooled_beta_ipw");
    beta -= step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < config.tol) return beta;
  }
  throw NonConvergence("pooled_beta_ipw: no convergence", beta, step_norm);
}

Eigen::VectorXd sgd_alpha(const Batch& batch, const SolverConfig& config) {
  const Index p = batch.p();
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(p);
  std::mt19937_64 rng(config.seed);
  std::vector<Index> order(batch.n());
  std::iota(order.begin(), order.end(), Index{0});
  double t = 0.0;
  for (int pass = 0; pass < config.max_iter; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const Index i : order) {
      t += 1.0;
      const double step = config.sgd_rate_a / (t + config.sgd_rate_b);
      const double pi = logistic(batch.x.row(i).dot(alpha));
      alpha += step * (static_cast<double>(batch.observed[i]) - pi) * batch.x.row(i).transpose();
    }
    if (alpha.norm() > 1e6) throw NumericFailure("sgd_alpha: divergence", alpha.norm());
  }
  return alpha;
}

struct TwoStepFit {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
};

// Per-batch two-step IPW fit. Newton is the primary solver; below the
// small-batch threshold a Newton breakdown (cold-start non-convergence,
// separation) falls back to the initial-value-free SGD pass instead of
// failing the batch.
TwoStepFit per_batch_fit(const Family& family, const Batch& batch,
                         const BaselineOptions& options) {
  batch.validate();
  TwoStepFit fit;
  PropensityState prop = propensity_template(options, batch.p());
  const bool small = batch.n() < options.small_batch_threshold;
  if (prop.updatable()) {
    try {
      fit.alpha = pooled_alpha_mle({batch}, options.newton);
    } catch (const std::exception&) {
      if (!small) throw;
      fit.alpha = sgd_alpha(batch, options.sgd);
    }
    prop.alpha_hat = fit.alpha;
  } else {
    fit.alpha = prop.alpha_hat;
  }
  try {
    fit.beta = pooled_beta_ipw(family, {batch}, prop, options.newton);
  } catch (const std::exception&) {
    if (!small) throw;
    fit.beta = sgd_fit(family, batch, prop, options.sgd);
  }
  return fit;
}

}  // namespace

Eigen::VectorXd oracle_fit(const Family& family, const std::vector<Batch>& batches,
                           const BaselineOptions& options) {
  if (batches.empty()) throw InvalidInputError("oracle_fit: no batches");
  for (const Batch& b : batches) b.validate();
  PropensityState prop = propensity_template(options, batches.front().p());
  if (prop.updatable()) {
    prop.alpha_hat = pooled_alpha_mle(batches, options.newton);
  }
  return pooled_beta_ipw(family, batches, prop, options.newton);
}

Eigen::VectorXd average_fit(const Family& family, const std::vector<Batch>& batches,
                            const BaselineOptions& options) {
  if (batches.empty()) throw InvalidInputError("average_fit: no batches");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(batches.front().p());
  for (std::size_t j = 0; j < batches.size(); ++j) {
    try {
      sum += per_batch_fit(family, batches[j], options).beta;
    } catch (const std::exception& e) {
      throw std::runtime_error("average_fit: batch " + std::to_string(j) + ": " + e.what());
    }
  }
  return sum / static_cast<double>(batches.size());
}

Eigen::VectorXd naive_fit(const Family& family, const Batch& batch,
                          const BaselineOptions& options) {
  return per_batch_fit(family, batch, options).beta;
}

Eigen::VectorXd sgd_fit(const Family& family, const Batch& batch, const PropensityState& prop,
                        const SolverConfig& config) {
  batch.validate();
  const Index p = batch.p();
  const Eigen::VectorXd w = prop.weights(batch);
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  std::mt19937_64 rng(config.seed);
  std::vector<Index> order;
  order.reserve(batch.n());
  for (Index i = 0; i < batch.n(); ++i) {
    if (batch.observed[i]) order.push_back(i);
  }
  if (order.empty()) return beta;
  double t = 0.0;
  for (int pass = 0; pass < config.max_iter; ++pass) {
    std::shuffle(order.begin(), order.end(), rng);
    for (const Index i : order) {
      t += 1.0;
      const double step = config.sgd_rate_a / (t + config.sgd_rate_b);
      const double mu = family.mean(batch.x.row(i).dot(beta));
      beta += step * w[i] * (batch.y[i] - mu) * batch.x.row(i).transpose();
    }
    if (beta.norm() > 1e6) throw NumericFailure("sgd_fit: divergence", beta.norm());
  }
  return beta;
}

Eigen::VectorXd oracle_fit_hetero(const Family& family, const std::vector<Batch>& batches,
                                  const BaselineOptions& options) {
  if (batches.empty()) throw InvalidInputError("oracle_fit_hetero: no batches");
  const Index p = batches.front().p();
  const Index q = batches.front().q();
  if (q == 0) throw InvalidInputError("oracle_fit_hetero: batches carry no z block");
  for (const Batch& b : batches) b.validate();
  const Index big_k = static_cast<Index>(batches.size());
  const Index dim = p + big_k * q;

  PropensityState prop = propensity_template(options, p);
  if (prop.updatable()) {
    prop.alpha_hat = pooled_alpha_mle(batches, options.newton);
  }
  std::vector<Eigen::VectorXd> weights;
  weights.reserve(batches.size());
  for (const Batch& b : batches) weights.push_back(prop.weights(b));

  // Stacked Newton over theta = (beta, gamma_1, ..., gamma_K) with the full
  // dense Jacobian assembled row by row each iteration.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd u(dim);
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < options.newton.max_iter; ++r) {
    Eigen::VectorXd score = Eigen::VectorXd::Zero(dim);
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(dim, dim);
    for (Index j = 0; j < big_k; ++j) {
      const Batch& batch = batches[static_cast<std::size_t>(j)];
      const Eigen::VectorXd& w = weights[static_cast<std::size_t>(j)];
      const Index gamma_offset = p + j * q;
      const Eigen::VectorXd eta =
          batch.x * theta.head(p) + batch.z * theta.segment(gamma_offset, q);
      for (Index i = 0; i < batch.n(); ++i) {
        if (w[i] == 0.0) continue;
        const double mu = family.mean(eta[i]);
        u.setZero();
        u.head(p) = batch.x.row(i);
        u.segment(gamma_offset, q) = batch.z.row(i);
        score += (w[i] * (batch.y[i] - mu)) * u;
        jac.selfadjointView<Eigen::Lower>().rankUpdate(u, -w[i] * family.unit_variance(mu));
      }
    }
    jac.triangularView<Eigen::StrictlyUpper>() = jac.transpose();
    const Eigen::VectorXd step = solve_with_ridge(jac, score, -1.0, "oracle_fit_hetero");
    theta -= step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < options.newton.tol) return theta.head(p);
  }
  throw NonConvergence("oracle_fit_hetero: no convergence", theta.head(p), step_norm);
}

Eigen::VectorXd average_fit_hetero(const Family& family, const std::vector<Batch>& batches,
                                   const BaselineOptions& options) {
  if (batches.empty()) throw InvalidInputError("average_fit_hetero: no batches");
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(batches.front().p());
  for (std::size_t j = 0; j < batches.size(); ++j) {
    try {
      sum += naive_fit_hetero(family, batches[j], options);
    } catch (const std::exception& e) {
      throw std::runtime_error("average_fit_hetero: batch " + std::to_string(j) + ": " + e.what());
    }
  }
  return sum / static_cast<double>(batches.size());
}

Eigen::VectorXd naive_fit_hetero(const Family& family, const Batch& batch,
                                 const BaselineOptions& options) {
  batch.validate();
  PropensityState prop = propensity_template(options, batch.p());
  if (prop.updatable()) {
    try {
      prop.alpha_hat = pooled_alpha_mle({batch}, options.newton);
    } catch (const std::exception&) {
      if (batch.n() >= options.small_batch_threshold) throw;
      prop.alpha_hat = sgd_alpha(batch, options.sgd);
    }
  }
  return solve_batch_nuisance(family, batch, prop).first;
}

}  // namespace streamglm

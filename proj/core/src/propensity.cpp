#include "streamglm/propensity.hpp"

#include <cmath>

#include "streamglm/errors.hpp"
#include "streamglm/family.hpp"
#include "streamglm/linalg.hpp"

namespace streamglm {

namespace {

constexpr double kAlphaTol = 1e-8;
constexpr int kAlphaMaxIter = 50;

void check_dims(const PropensityState& state, const Batch& batch) {
  if (state.mode != PropensityState::Mode::known_constant && state.dim() != batch.p()) {
    throw InvalidInputError("propensity state dimension does not match batch");
  }
}

}  // namespace

PropensityState PropensityState::initial(Index p) {
  PropensityState s;
  s.alpha_hat = Eigen::VectorXd::Zero(p);
  s.h_tilde = Eigen::MatrixXd::Zero(p, p);
  return s;
}

PropensityState PropensityState::frozen(Eigen::VectorXd alpha) {
  PropensityState s;
  const Index p = alpha.size();
  s.alpha_hat = std::move(alpha);
  s.h_tilde = Eigen::MatrixXd::Zero(p, p);
  s.mode = Mode::frozen_alpha;
  return s;
}

PropensityState PropensityState::known(Index p, double pi0) {
  if (!(pi0 > 0.0 && pi0 <= 1.0)) {
    throw InvalidInputError("known propensity must lie in (0, 1]");
  }
  PropensityState s;
  s.alpha_hat = Eigen::VectorXd::Zero(p);
  s.h_tilde = Eigen::MatrixXd::Zero(p, p);
  s.mode = Mode::known_constant;
  s.known_pi = pi0;
  return s;
}

Eigen::VectorXd PropensityState::propensities(const Batch& batch) const {
  if (mode == Mode::known_constant) {
    return Eigen::VectorXd::Constant(batch.n(), known_pi);
  }
  check_dims(*this, batch);
  Eigen::VectorXd eta = batch.x * alpha_hat;
  for (Index i = 0; i < eta.size(); ++i) eta[i] = logistic(eta[i]);
  return eta;
}

Eigen::VectorXd PropensityState::weights(const Batch& batch) const {
  Eigen::VectorXd pi = propensities(batch);
  Eigen::VectorXd w(batch.n());
  for (Index i = 0; i < batch.n(); ++i) {
    w[i] = batch.observed[i] ? 1.0 / clipped_propensity(pi[i]) : 0.0;
  }
  return w;
}

double propensity(const Eigen::Ref<const Eigen::VectorXd>& x,
                  const Eigen::Ref<const Eigen::VectorXd>& alpha) {
  if (x.size() != alpha.size()) throw InvalidInputError("propensity: dimension mismatch");
  return logistic(x.dot(alpha));
}

double clipped_propensity(double pi) {
  if (pi < kPropensityFloor) return kPropensityFloor;
  return pi > 1.0 ? 1.0 : pi;
}

Eigen::VectorXd v_batch(const Batch& batch, const Eigen::VectorXd& alpha) {
  batch.validate();
  if (batch.p() != alpha.size()) throw InvalidInputError("v_batch: dimension mismatch");
  Eigen::VectorXd eta = batch.x * alpha;
  for (Index i = 0; i < eta.size(); ++i) {
    eta[i] = static_cast<double>(batch.observed[i]) - logistic(eta[i]);
  }
  return batch.x.transpose() * eta / static_cast<double>(batch.n());
}

Eigen::MatrixXd h_batch(const Batch& batch, const Eigen::VectorXd& alpha) {
  batch.validate();
  if (batch.p() != alpha.size()) throw InvalidInputError("h_batch: dimension mismatch");
  Eigen::VectorXd d = batch.x * alpha;
  for (Index i = 0; i < d.size(); ++i) {
    const double pi = logistic(d[i]);
    d[i] = pi * (1.0 - pi);
  }
  return batch.x.transpose() * d.asDiagonal() * batch.x / static_cast<double>(batch.n());
}

PropensityState update_alpha(const PropensityState& state, const Batch& batch) {
  batch.validate();
  if (!state.updatable()) {
    PropensityState out = state;
    out.n_total += batch.n();
    out.batch_count += 1;
    return out;
  }
  check_dims(state, batch);

  const double nk = static_cast<double>(batch.n());
  const Eigen::VectorXd& alpha_prev = state.alpha_hat;
  const bool first = state.batch_count == 0;

  // The incremental solve keeps the Newton matrix at alpha_{k-1} across inner
  // iterations. The first batch has no history and is the plain batch MLE, so
  // it refreshes the matrix each step (the estimator definition at k=1).
  Eigen::MatrixXd newton = state.h_tilde + nk * h_batch(batch, alpha_prev);
  Eigen::VectorXd alpha = alpha_prev;
  bool converged = false;
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kAlphaMaxIter; ++r) {
    const Eigen::VectorXd v_accum =
        state.h_tilde * (alpha_prev - alpha) + nk * v_batch(batch, alpha);
    if (first && r > 0) newton = nk * h_batch(batch, alpha);
    const Eigen::VectorXd step = solve_with_ridge(newton, v_accum, +1.0, "update_alpha");
    alpha += step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < kAlphaTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("update_alpha: no convergence after 50 iterations", alpha, step_norm);
  }

  PropensityState out = state;
  out.alpha_hat = alpha;
  out.h_tilde = state.h_tilde + nk * h_batch(batch, alpha);
  out.n_total += batch.n();
  out.batch_count += 1;
  return out;
}

}  // namespace streamglm

#include "streamglm/updater.hpp"

#include <cmath>

#include "streamglm/errors.hpp"
#include "streamglm/inference.hpp"

namespace streamglm {

namespace {

constexpr double kBetaTol = 1e-8;
constexpr int kBetaMaxIter = 50;

struct BatchView {
  Eigen::VectorXd pi;     // raw propensities
  Eigen::VectorXd w;      // delta_i / clip(pi_i)
  Eigen::VectorXd mu;     // mean at beta
  Eigen::VectorXd v;      // unit variance at mu
  Eigen::VectorXd resid;  // observed ? y - mu : 0
  bool alpha_sensitive{true};
};

BatchView make_view(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                    const PropensityState& prop) {
  BatchView view;
  view.pi = prop.propensities(batch);
  view.alpha_sensitive = prop.updatable();
  const Index n = batch.n();
  view.w.resize(n);
  for (Index i = 0; i < n; ++i) {
    view.w[i] = batch.observed[i] ? 1.0 / clipped_propensity(view.pi[i]) : 0.0;
  }
  const Eigen::VectorXd eta = batch.x * beta;
  view.mu.resize(n);
  view.v.resize(n);
  for (Index i = 0; i < n; ++i) {
    view.mu[i] = family.mean(eta[i]);
    view.v[i] = family.unit_variance(view.mu[i]);
  }
  view.resid = batch.residuals(view.mu);
  return view;
}

Eigen::VectorXd score_from_view(const Batch& batch, const BatchView& view) {
  return batch.x.transpose() * (view.w.cwiseProduct(view.resid)) /
         static_cast<double>(batch.n());
}

// Mean-form R_beta = -(1/n) sum_i w_i v(mu_i) x_i x_i'.
Eigen::MatrixXd r_beta_from_view(const Batch& batch, const BatchView& view) {
  const Eigen::VectorXd d = view.w.cwiseProduct(view.v);
  return -(batch.x.transpose() * d.asDiagonal() * batch.x) / static_cast<double>(batch.n());
}

void check_beta_inputs(const Batch& batch, const Eigen::VectorXd& beta,
                       const PropensityState& prop) {
  batch.validate();
  if (batch.p() != beta.size()) throw InvalidInputError("beta dimension does not match batch");
  if (prop.mode != PropensityState::Mode::known_constant && prop.dim() != batch.p()) {
    throw InvalidInputError("alpha dimension does not match batch");
  }
}

}  // namespace

UipwState UipwState::initial(Family family, Index p) {
  return with_propensity(family, PropensityState::initial(p));
}

UipwState UipwState::with_propensity(Family family, PropensityState prop) {
  UipwState s;
  const Index p = prop.dim();
  s.family = family;
  s.prop = std::move(prop);
  s.beta_hat = Eigen::VectorXd::Zero(p);
  s.alpha_prev = s.prop.alpha_hat;
  s.sum_r_alpha = Eigen::MatrixXd::Zero(p, p);
  s.sum_r_beta = Eigen::MatrixXd::Zero(p, p);
  s.sum_r_ab.resize(p);
  s.sum_rab_beta = Eigen::MatrixXd::Zero(p, p);
  s.sum_rab_alpha = Eigen::MatrixXd::Zero(p, p);
  s.moments.init(p);
  return s;
}

Eigen::MatrixXd UipwState::l1_tilde(const Eigen::VectorXd& beta_prev) const {
  return sum_r_alpha + sum_r_ab.contract_beta(beta_prev) - sum_rab_beta;
}

Eigen::MatrixXd UipwState::l2_tilde(const Eigen::VectorXd& alpha_new) const {
  return sum_r_beta + sum_r_ab.contract_alpha(alpha_new) - sum_rab_alpha;
}

Eigen::VectorXd s_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha) {
  return s_batch(family, batch, beta, PropensityState::frozen(alpha));
}

Eigen::VectorXd s_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const PropensityState& prop) {
  check_beta_inputs(batch, beta, prop);
  const BatchView view = make_view(family, batch, beta, prop);
  return score_from_view(batch, view);
}

DerivativeBundle derivative_bundle(const Family& family, const Batch& batch,
                                   const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha) {
  // The vector-alpha form is the parametric logistic propensity.
  PropensityState prop = PropensityState::initial(alpha.size());
  prop.alpha_hat = alpha;
  return derivative_bundle(family, batch, beta, prop);
}

DerivativeBundle derivative_bundle(const Family& family, const Batch& batch,
                                   const Eigen::VectorXd& beta, const PropensityState& prop) {
  check_beta_inputs(batch, beta, prop);
  const BatchView view = make_view(family, batch, beta, prop);
  const Index n = batch.n();
  const Index p = batch.p();
  const double inv_n = 1.0 / static_cast<double>(n);

  DerivativeBundle bundle;
  bundle.s = score_from_view(batch, view);
  bundle.r_beta = r_beta_from_view(batch, view);
  bundle.r_alphabeta.resize(p);
  if (!view.alpha_sensitive) {
    // Fixed weights carry no alpha direction.
    bundle.r_alpha = Eigen::MatrixXd::Zero(p, p);
    return bundle;
  }

  // grad_alpha (1/pi) = -(1 - pi)/pi x for the logistic propensity, so
  //   R_alpha[a,c]      = -(1/n) sum w_i (1-pi_i) resid_i x_a x_c
  //   R_ab[a,b,c]       = +(1/n) sum w_i (1-pi_i) v_i x_a x_b x_c
  Eigen::VectorXd wa(n);
  for (Index i = 0; i < n; ++i) wa[i] = view.w[i] * (1.0 - view.pi[i]);
  const Eigen::VectorXd da = wa.cwiseProduct(view.resid);
  bundle.r_alpha = -(batch.x.transpose() * da.asDiagonal() * batch.x) * inv_n;

  const Eigen::VectorXd dt = wa.cwiseProduct(view.v);
  for (Index c = 0; c < p; ++c) {
    const Eigen::VectorXd dc = dt.cwiseProduct(batch.x.col(c));
    bundle.r_alphabeta.slice(c) = (batch.x.transpose() * dc.asDiagonal() * batch.x) * inv_n;
  }
  return bundle;
}

std::pair<Eigen::MatrixXd, Eigen::MatrixXd> l_aggregates(const DerivativeBundle& bundle,
                                                         const Eigen::VectorXd& beta_shift,
                                                         const Eigen::VectorXd& alpha_shift) {
  const Index p = bundle.r_alpha.rows();
  if (beta_shift.size() != p || alpha_shift.size() != p) {
    throw InvalidInputError("l_aggregates: shift dimension mismatch");
  }
  Eigen::MatrixXd l1 = bundle.r_alpha + bundle.r_alphabeta.contract_beta(beta_shift);
  Eigen::MatrixXd l2 = bundle.r_beta + bundle.r_alphabeta.contract_alpha(alpha_shift);
  return {std::move(l1), std::move(l2)};
}

UipwState update_beta(const UipwState& state, const Batch& batch,
                      const Eigen::VectorXd& alpha_new) {
  batch.validate();
  if (batch.p() != state.dim()) throw InvalidInputError("update_beta: batch dimension mismatch");
  if (alpha_new.size() != state.dim()) {
    throw InvalidInputError("update_beta: alpha dimension mismatch");
  }

  const double nk = static_cast<double>(batch.n());
  const Eigen::VectorXd beta_prev = state.beta_hat;
  const Eigen::VectorXd alpha_prev = state.alpha_prev;
  const bool first = state.batch_count == 0;

  PropensityState prop_k = state.prop;
  prop_k.alpha_hat = alpha_new;

  const Eigen::MatrixXd l1 = state.l1_tilde(beta_prev);
  const Eigen::MatrixXd l2 = state.l2_tilde(alpha_new);
  const Eigen::VectorXd drift = l1 * (alpha_new - alpha_prev);

  Eigen::MatrixXd newton =
      l2 + nk * r_beta_from_view(batch, make_view(state.family, batch, beta_prev, prop_k));
  Eigen::VectorXd beta = beta_prev;
  bool converged = false;
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kBetaMaxIter; ++r) {
    const BatchView view = make_view(state.family, batch, beta, prop_k);
    const Eigen::VectorXd f =
        drift + l2 * (beta - beta_prev) + nk * score_from_view(batch, view);
    if (first && r > 0) newton = nk * r_beta_from_view(batch, view);
    const Eigen::VectorXd step = solve_with_ridge(newton, f, -1.0, "update_beta");
    beta -= step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < kBetaTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("update_beta: no convergence after 50 iterations", beta, step_norm);
  }

  UipwState out = state;
  const DerivativeBundle bundle = derivative_bundle(state.family, batch, beta, prop_k);
  out.sum_r_alpha += nk * bundle.r_alpha;
  out.sum_r_beta += nk * bundle.r_beta;
  for (Index c = 0; c < state.dim(); ++c) {
    out.sum_r_ab.slice(c) += nk * bundle.r_alphabeta.slice(c);
  }
  out.sum_rab_beta += nk * bundle.r_alphabeta.contract_beta(beta);
  out.sum_rab_alpha += nk * bundle.r_alphabeta.contract_alpha(alpha_new);
  out.beta_hat = beta;
  out.alpha_prev = alpha_new;
  out.n_total += batch.n();
  out.batch_count += 1;
  return out;
}

UipwState ingest(const UipwState& state, const Batch& batch) {
  const PropensityState prop_new = update_alpha(state.prop, batch);
  UipwState out = update_beta(state, batch, prop_new.alpha_hat);
  out.prop = prop_new;
  accumulate_score_moments(out.moments, out.family, batch, out.beta_hat, prop_new);
  out.ingest_digest = fold_digest(state.ingest_digest, out.batch_count, batch.n());
  return out;
}

std::uint64_t fold_digest(std::uint64_t digest, std::int64_t batch_index, std::int64_t n_rows) {
  auto fold = [](std::uint64_t h, std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (value >> (8 * byte)) & 0xffULL;
      h *= 1099511628211ULL;
    }
    return h;
  };
  return fold(fold(digest, static_cast<std::uint64_t>(batch_index)),
              static_cast<std::uint64_t>(n_rows));
}

}  // namespace streamglm

#include "streamglm/euipw.hpp"

#include <cmath>

#include "streamglm/errors.hpp"

namespace streamglm {

namespace {

constexpr double kTol = 1e-8;
constexpr int kMaxIter = 50;

void check_hetero_batch(const Batch& batch, Index p, Index q) {
  batch.validate();
  if (batch.p() != p) throw InvalidInputError("batch x dimension mismatch");
  if (batch.q() != q || q == 0) {
    throw InvalidInputError("batch is missing the z columns the nuisance model needs");
  }
}

// Per-observation score scale c_i = w_i * resid_i at mu = mean(x'beta + z'gamma).
// S_i = c_i x_i, T_i = c_i z_i.
Eigen::VectorXd score_scale(const Family& family, const Batch& batch,
                            const Eigen::VectorXd& beta, const Eigen::VectorXd& gamma,
                            const Eigen::VectorXd& pi) {
  const Index n = batch.n();
  const Eigen::VectorXd eta = batch.x * beta + batch.z * gamma;
  Eigen::VectorXd c(n);
  for (Index i = 0; i < n; ++i) {
    if (!batch.observed[i]) {
      c[i] = 0.0;
      continue;
    }
    const double mu = family.mean(eta[i]);
    const double w = 1.0 / clipped_propensity(pi[i]);
    c[i] = w * (batch.y[i] - mu);
  }
  return c;
}

struct EfficientParts {
  Eigen::VectorXd s, t, u;  // batch means
  Eigen::MatrixXd proj;     // Ibg Igg^-1 (p x q); zero rows when T vanishes
  bool ridged{false};
};

EfficientParts efficient_parts(const Family& family, const Batch& batch,
                               const Eigen::VectorXd& beta, const PropensityState& prop,
                               const Eigen::VectorXd& gamma) {
  const Index n = batch.n();
  const Index p = batch.p();
  const Index q = batch.q();
  const double inv_n = 1.0 / static_cast<double>(n);

  const Eigen::VectorXd pi = prop.propensities(batch);
  const Eigen::VectorXd c = score_scale(family, batch, beta, gamma, pi);
  EfficientParts parts;
  parts.s = batch.x.transpose() * c / static_cast<double>(n);
  parts.t = batch.z.transpose() * c / static_cast<double>(n);

  const Eigen::VectorXd c2 = c.cwiseAbs2();
  const Eigen::MatrixXd ibg = batch.x.transpose() * c2.asDiagonal() * batch.z * inv_n;
  Eigen::MatrixXd igg = batch.z.transpose() * c2.asDiagonal() * batch.z * inv_n;

  if (igg.isZero(0.0)) {
    // Nothing to project out.
    parts.proj = Eigen::MatrixXd::Zero(p, q);
    parts.u = parts.s;
    return parts;
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(igg);
  const Eigen::VectorXd d = ldlt.vectorD().cwiseAbs();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-12 * d.maxCoeff()) {
    igg += (1e-8 * igg.trace() / static_cast<double>(q)) *
           Eigen::MatrixXd::Identity(q, q);
    ldlt.compute(igg);
    parts.ridged = true;
    if (ldlt.info() != Eigen::Success) {
      throw NumericFailure("efficient_score: singular Igg after ridge",
                           std::numeric_limits<double>::infinity());
    }
  }
  parts.proj = ldlt.solve(ibg.transpose()).transpose();
  parts.u = parts.s - parts.proj * parts.t;
  return parts;
}

Eigen::VectorXd u_value(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const PropensityState& prop, const Eigen::VectorXd& gamma) {
  return efficient_parts(family, batch, beta, prop, gamma).u;
}

// Central finite differences of the efficient score in beta.
Eigen::MatrixXd grad_beta_u(const Family& family, const Batch& batch,
                            const Eigen::VectorXd& beta, const PropensityState& prop,
                            const Eigen::VectorXd& gamma) {
  const Index p = beta.size();
  Eigen::MatrixXd grad(p, p);
  Eigen::VectorXd shifted = beta;
  for (Index b = 0; b < p; ++b) {
    const double h = 1e-6 * (1.0 + std::abs(beta[b]));
    shifted[b] = beta[b] + h;
    const Eigen::VectorXd up = u_value(family, batch, shifted, prop, gamma);
    shifted[b] = beta[b] - h;
    const Eigen::VectorXd um = u_value(family, batch, shifted, prop, gamma);
    shifted[b] = beta[b];
    grad.col(b) = (up - um) / (2.0 * h);
  }
  return grad;
}

Eigen::MatrixXd grad_alpha_u(const Family& family, const Batch& batch,
                             const Eigen::VectorXd& beta, const PropensityState& prop,
                             const Eigen::VectorXd& gamma) {
  const Index p = beta.size();
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(p, p);
  if (!prop.updatable()) return grad;
  PropensityState shifted = prop;
  for (Index c = 0; c < p; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(prop.alpha_hat[c]));
    shifted.alpha_hat[c] = prop.alpha_hat[c] + h;
    const Eigen::VectorXd up = u_value(family, batch, beta, shifted, gamma);
    shifted.alpha_hat[c] = prop.alpha_hat[c] - h;
    const Eigen::VectorXd um = u_value(family, batch, beta, shifted, gamma);
    shifted.alpha_hat[c] = prop.alpha_hat[c];
    grad.col(c) = (up - um) / (2.0 * h);
  }
  return grad;
}

Tensor3 grad_alpha_beta_u(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                          const PropensityState& prop, const Eigen::VectorXd& gamma) {
  const Index p = beta.size();
  Tensor3 tensor(p);
  if (!prop.updatable()) return tensor;
  PropensityState shifted = prop;
  for (Index c = 0; c < p; ++c) {
    const double h = 1e-6 * (1.0 + std::abs(prop.alpha_hat[c]));
    shifted.alpha_hat[c] = prop.alpha_hat[c] + h;
    const Eigen::MatrixXd gp = grad_beta_u(family, batch, beta, shifted, gamma);
    shifted.alpha_hat[c] = prop.alpha_hat[c] - h;
    const Eigen::MatrixXd gm = grad_beta_u(family, batch, beta, shifted, gamma);
    shifted.alpha_hat[c] = prop.alpha_hat[c];
    tensor.slice(c) = (gp - gm) / (2.0 * h);
  }
  return tensor;
}

}  // namespace

HeteroState HeteroState::initial(Family family, Index p, Index q) {
  return with_propensity(family, PropensityState::initial(p), q);
}

HeteroState HeteroState::with_propensity(Family family, PropensityState prop, Index q) {
  HeteroState s;
  const Index p = prop.dim();
  s.family = family;
  s.prop = std::move(prop);
  s.beta_hat = Eigen::VectorXd::Zero(p);
  s.alpha_prev = s.prop.alpha_hat;
  s.gamma_last = Eigen::VectorXd::Zero(q);
  s.sum_g_alpha = Eigen::MatrixXd::Zero(p, p);
  s.sum_g_beta = Eigen::MatrixXd::Zero(p, p);
  s.sum_g_ab.resize(p);
  s.sum_gab_beta = Eigen::MatrixXd::Zero(p, p);
  s.sum_gab_alpha = Eigen::MatrixXd::Zero(p, p);
  s.moments.init(p);
  return s;
}

Eigen::MatrixXd HeteroState::g1_tilde(const Eigen::VectorXd& beta_prev) const {
  return sum_g_alpha + sum_g_ab.contract_beta(beta_prev) - sum_gab_beta;
}

Eigen::MatrixXd HeteroState::g2_tilde(const Eigen::VectorXd& alpha_new) const {
  return sum_g_beta + sum_g_ab.contract_alpha(alpha_new) - sum_gab_alpha;
}

Eigen::VectorXd t_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const Eigen::VectorXd& alpha, const Eigen::VectorXd& gamma) {
  return t_batch(family, batch, beta, PropensityState::frozen(alpha), gamma);
}

Eigen::VectorXd t_batch(const Family& family, const Batch& batch, const Eigen::VectorXd& beta,
                        const PropensityState& prop, const Eigen::VectorXd& gamma) {
  check_hetero_batch(batch, beta.size(), gamma.size());
  const Eigen::VectorXd pi = prop.propensities(batch);
  const Eigen::VectorXd c = score_scale(family, batch, beta, gamma, pi);
  return batch.z.transpose() * c / static_cast<double>(batch.n());
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> solve_batch_nuisance(const Family& family,
                                                                 const Batch& batch,
                                                                 const PropensityState& prop) {
  const Index p = batch.p();
  const Index q = batch.q();
  check_hetero_batch(batch, p, q);
  const Index d = p + q;
  const Index n = batch.n();
  const double inv_n = 1.0 / static_cast<double>(n);

  Eigen::MatrixXd design(n, d);
  design.leftCols(p) = batch.x;
  design.rightCols(q) = batch.z;
  const Eigen::VectorXd pi = prop.propensities(batch);
  Eigen::VectorXd w(n);
  for (Index i = 0; i < n; ++i) {
    w[i] = batch.observed[i] ? 1.0 / clipped_propensity(pi[i]) : 0.0;
  }

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(d);
  bool converged = false;
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kMaxIter; ++r) {
    const Eigen::VectorXd eta = design * theta;
    Eigen::VectorXd resid(n), wv(n);
    for (Index i = 0; i < n; ++i) {
      const double mu = family.mean(eta[i]);
      resid[i] = batch.observed[i] ? w[i] * (batch.y[i] - mu) : 0.0;
      wv[i] = w[i] * family.unit_variance(mu);
    }
    const Eigen::VectorXd score = design.transpose() * resid * inv_n;
    const Eigen::MatrixXd jac =
        -(design.transpose() * wv.asDiagonal() * design) * inv_n;
    const Eigen::VectorXd step = solve_with_ridge(jac, score, -1.0, "solve_batch_nuisance");
    theta -= step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < kTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("solve_batch_nuisance: no convergence after 50 iterations", theta,
                         step_norm);
  }
  return {theta.head(p), theta.tail(q)};
}

EfficientScore efficient_score(const Family& family, const Batch& batch,
                               const Eigen::VectorXd& beta, const Eigen::VectorXd& alpha,
                               const Eigen::VectorXd& gamma) {
  return efficient_score(family, batch, beta, PropensityState::frozen(alpha), gamma);
}

EfficientScore efficient_score(const Family& family, const Batch& batch,
                               const Eigen::VectorXd& beta, const PropensityState& prop,
                               const Eigen::VectorXd& gamma) {
  check_hetero_batch(batch, beta.size(), gamma.size());
  const EfficientParts parts = efficient_parts(family, batch, beta, prop, gamma);
  return {parts.u, parts.ridged};
}

HeteroState ingest_hetero(const HeteroState& state, const Batch& batch) {
  const Index p = state.dim();
  const Index q = state.nuisance_dim();
  check_hetero_batch(batch, p, q);

  // Step 1: renew alpha, then fit the per-batch nuisance at the fresh alpha.
  const PropensityState prop_new = update_alpha(state.prop, batch);
  PropensityState prop_k = prop_new;  // carries alpha_k for weight evaluation
  const auto [beta_local, gamma_k] = solve_batch_nuisance(state.family, batch, prop_k);
  (void)beta_local;  // not used downstream

  // Step 2: efficient-score updating equation with frozen Newton matrix.
  const double nk = static_cast<double>(batch.n());
  const Eigen::VectorXd beta_prev = state.beta_hat;
  const Eigen::VectorXd alpha_prev = state.alpha_prev;
  const Eigen::VectorXd alpha_new = prop_new.alpha_hat;
  const bool first = state.batch_count == 0;

  const Eigen::MatrixXd g1 = state.g1_tilde(beta_prev);
  const Eigen::MatrixXd g2 = state.g2_tilde(alpha_new);
  const Eigen::VectorXd drift = g1 * (alpha_new - alpha_prev);

  Eigen::MatrixXd newton = g2 + nk * grad_beta_u(state.family, batch, beta_prev, prop_k, gamma_k);
  Eigen::VectorXd beta = beta_prev;
  bool converged = false;
  double step_norm = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kMaxIter; ++r) {
    const Eigen::VectorXd f = drift + g2 * (beta - beta_prev) +
                              nk * u_value(state.family, batch, beta, prop_k, gamma_k);
    if (first && r > 0) {
      newton = nk * grad_beta_u(state.family, batch, beta, prop_k, gamma_k);
    }
    const Eigen::VectorXd step = solve_with_ridge(newton, f, -1.0, "ingest_hetero");
    beta -= step;
    step_norm = step.lpNorm<Eigen::Infinity>();
    if (step_norm < kTol) {
      converged = true;
      break;
    }
  }
  if (!converged) {
    throw NonConvergence("ingest_hetero: no convergence after 50 iterations", beta, step_norm);
  }

  HeteroState out = state;
  out.prop = prop_new;
  out.beta_hat = beta;
  out.alpha_prev = alpha_new;
  out.gamma_last = gamma_k;
  out.sum_g_beta += nk * grad_beta_u(state.family, batch, beta, prop_k, gamma_k);
  out.sum_g_alpha += nk * grad_alpha_u(state.family, batch, beta, prop_k, gamma_k);
  const Tensor3 mixed = grad_alpha_beta_u(state.family, batch, beta, prop_k, gamma_k);
  for (Index c = 0; c < p; ++c) out.sum_g_ab.slice(c) += nk * mixed.slice(c);
  out.sum_gab_beta += nk * mixed.contract_beta(beta);
  out.sum_gab_alpha += nk * mixed.contract_alpha(alpha_new);
  out.n_total += batch.n();
  out.batch_count += 1;
  out.ingest_digest = fold_digest(state.ingest_digest, out.batch_count, batch.n());

  // Moment sums on the efficient score for plug-in bands.
  const EfficientParts parts = efficient_parts(state.family, batch, beta, prop_k, gamma_k);
  {
    const Index n = batch.n();
    const Eigen::VectorXd pi = prop_k.propensities(batch);
    const Eigen::VectorXd c = score_scale(state.family, batch, beta, gamma_k, pi);
    const Eigen::VectorXd eta = batch.x * beta + batch.z * gamma_k;
    Eigen::MatrixXd u_rows(n, p);  // U_i = c_i x_i - proj (c_i z_i)
    Eigen::VectorXd v_coef(n), bread_coef(n);
    const bool estimated = prop_k.updatable();
    for (Index i = 0; i < n; ++i) {
      u_rows.row(i) = c[i] * batch.x.row(i) - (parts.proj * (c[i] * batch.z.row(i).transpose())).transpose();
      v_coef[i] = estimated ? (static_cast<double>(batch.observed[i]) - pi[i]) : 0.0;
      bread_coef[i] = state.family.unit_variance(state.family.mean(eta[i]));
    }
    out.moments.n += n;
    out.moments.sum_s += u_rows.transpose() * Eigen::VectorXd::Ones(n);
    out.moments.sum_v += batch.x.transpose() * v_coef;
    out.moments.sum_ss += u_rows.transpose() * u_rows;
    out.moments.sum_sv += u_rows.transpose() * v_coef.asDiagonal() * batch.x;
    out.moments.sum_vv += batch.x.transpose() * v_coef.cwiseAbs2().asDiagonal() * batch.x;
    out.moments.sum_bread += batch.x.transpose() * bread_coef.asDiagonal() * batch.x;
  }
  return out;
}

CovarianceEstimate sigma_hat(const HeteroState& state, const Batch& batch,
                             VarianceSource source) {
  if (source == VarianceSource::accumulated) {
    return sigma_from_moments(state.moments, source);
  }
  check_hetero_batch(batch, state.dim(), state.nuisance_dim());
  // Current-batch moments at (beta_k, alpha_k, gamma_k).
  const Index n = batch.n();
  const Index p = state.dim();
  ScoreMoments local;
  local.init(p);
  const Eigen::VectorXd pi = state.prop.propensities(batch);
  const EfficientParts parts =
      efficient_parts(state.family, batch, state.beta_hat, state.prop, state.gamma_last);
  const Eigen::VectorXd c = score_scale(state.family, batch, state.beta_hat, state.gamma_last, pi);
  const Eigen::VectorXd eta = batch.x * state.beta_hat + batch.z * state.gamma_last;
  Eigen::MatrixXd u_rows(n, p);
  Eigen::VectorXd v_coef(n), bread_coef(n);
  const bool estimated = state.prop.updatable();
  for (Index i = 0; i < n; ++i) {
    u_rows.row(i) = c[i] * batch.x.row(i) - (parts.proj * (c[i] * batch.z.row(i).transpose())).transpose();
    v_coef[i] = estimated ? (static_cast<double>(batch.observed[i]) - pi[i]) : 0.0;
    bread_coef[i] = state.family.unit_variance(state.family.mean(eta[i]));
  }
  local.n = n;
  local.sum_s = u_rows.transpose() * Eigen::VectorXd::Ones(n);
  local.sum_v = batch.x.transpose() * v_coef;
  local.sum_ss = u_rows.transpose() * u_rows;
  local.sum_sv = u_rows.transpose() * v_coef.asDiagonal() * batch.x;
  local.sum_vv = batch.x.transpose() * v_coef.cwiseAbs2().asDiagonal() * batch.x;
  local.sum_bread = batch.x.transpose() * bread_coef.asDiagonal() * batch.x;
  return sigma_from_moments(local, source);
}

}  // namespace streamglm

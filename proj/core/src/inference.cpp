#include "streamglm/inference.hpp"

#include <cmath>

#include "streamglm/distributions.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/linalg.hpp"

namespace streamglm {

VarianceSource variance_source_from_name(const std::string& name) {
  if (name == "batch" || name == "current_batch") return VarianceSource::current_batch;
  if (name == "accumulated") return VarianceSource::accumulated;
  throw InvalidInputError("unknown variance source: " + name);
}

const char* variance_source_name(VarianceSource source) {
  return source == VarianceSource::current_batch ? "batch" : "accumulated";
}

void accumulate_score_moments(ScoreMoments& moments, const Family& family, const Batch& batch,
                              const Eigen::VectorXd& beta, const PropensityState& prop) {
  batch.validate();
  const Index n = batch.n();
  const Index p = batch.p();
  if (moments.sum_s.size() != p) moments.init(p);

  const Eigen::VectorXd pi = prop.propensities(batch);
  const Eigen::VectorXd eta = batch.x * beta;
  Eigen::VectorXd s_coef(n);      // w_i * resid_i
  Eigen::VectorXd v_coef(n);      // delta_i - pi_i (zero when not updatable)
  Eigen::VectorXd bread_coef(n);  // [v(mu) g_mu(mu)^2]^-1 = v(mu) under the canonical link
  const bool estimated = prop.updatable();
  for (Index i = 0; i < n; ++i) {
    const double mu = family.mean(eta[i]);
    const double w = batch.observed[i] ? 1.0 / clipped_propensity(pi[i]) : 0.0;
    s_coef[i] = batch.observed[i] ? w * (batch.y[i] - mu) : 0.0;
    v_coef[i] = estimated ? (static_cast<double>(batch.observed[i]) - pi[i]) : 0.0;
    bread_coef[i] = family.unit_variance(mu);
  }

  moments.n += n;
  moments.sum_s += batch.x.transpose() * s_coef;
  moments.sum_v += batch.x.transpose() * v_coef;
  moments.sum_ss += batch.x.transpose() * s_coef.cwiseAbs2().asDiagonal() * batch.x;
  moments.sum_sv +=
      batch.x.transpose() * (s_coef.cwiseProduct(v_coef)).asDiagonal() * batch.x;
  moments.sum_vv += batch.x.transpose() * v_coef.cwiseAbs2().asDiagonal() * batch.x;
  moments.sum_bread += batch.x.transpose() * bread_coef.asDiagonal() * batch.x;
}

CovarianceEstimate sigma_from_moments(const ScoreMoments& moments, VarianceSource source) {
  if (moments.n == 0) throw InvalidInputError("sigma_hat: no observations accumulated");
  const double n = static_cast<double>(moments.n);
  const Index p = moments.sum_s.size();

  const Eigen::MatrixXd bread = moments.sum_bread / n;
  const Eigen::VectorXd s_bar = moments.sum_s / n;

  Eigen::MatrixXd meat;
  if (moments.sum_vv.isZero(0.0)) {
    // Frozen or known propensity: its score is identically zero, so J == 0.
    meat = moments.sum_ss / n - s_bar * s_bar.transpose();
  } else {
    const Eigen::MatrixXd a = moments.sum_sv / n;
    const Eigen::MatrixXd c = moments.sum_vv / n;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(c);
    if (!lu.isInvertible()) {
      throw NumericFailure("sigma_hat: singular E[V V']", std::numeric_limits<double>::infinity());
    }
    const Eigen::MatrixXd proj = a * lu.inverse();  // E[S V'] E[V V']^-1
    const Eigen::VectorXd u_bar = s_bar - proj * (moments.sum_v / n);
    meat = moments.sum_ss / n - proj * a.transpose() - u_bar * u_bar.transpose();
  }
  meat = 0.5 * (meat + meat.transpose()).eval();

  Eigen::FullPivLU<Eigen::MatrixXd> bread_lu(bread);
  if (!bread_lu.isInvertible()) {
    double cond = std::numeric_limits<double>::infinity();
    throw NumericFailure("sigma_hat: singular bread matrix", cond);
  }
  const Eigen::MatrixXd bread_inv = bread_lu.inverse();
  Eigen::MatrixXd sigma = bread_inv * meat * bread_inv.transpose();
  sigma = 0.5 * (sigma + sigma.transpose()).eval();

  CovarianceEstimate est;
  est.sigma_hat = std::move(sigma);
  est.n_effective = moments.n;
  est.source = source;
  return est;
}

CovarianceEstimate sigma_hat(const UipwState& state, const Batch& batch, VarianceSource source) {
  if (source == VarianceSource::accumulated) {
    return sigma_from_moments(state.moments, source);
  }
  batch.validate();
  ScoreMoments local;
  local.init(state.dim());
  accumulate_score_moments(local, state.family, batch, state.beta_hat, state.prop);
  return sigma_from_moments(local, source);
}

std::pair<double, double> wald_test(const Eigen::VectorXd& beta_hat,
                                    const CovarianceEstimate& sigma, std::int64_t n_k,
                                    const Eigen::VectorXd& beta_null) {
  if (beta_hat.size() != beta_null.size() || sigma.sigma_hat.rows() != beta_hat.size()) {
    throw InvalidInputError("wald_test: dimension mismatch");
  }
  const Eigen::VectorXd d = beta_hat - beta_null;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(sigma.sigma_hat);
  if (!lu.isInvertible()) {
    throw NumericFailure("wald_test: singular covariance", std::numeric_limits<double>::infinity());
  }
  // N_k scaling: Sigma estimates the variance of the sqrt(N_k)-normalized
  // error, so the statistic needs the explicit sample-size factor for the
  // chi-squared(p) null limit to hold.
  const double stat = static_cast<double>(n_k) * d.dot(lu.solve(d));
  const double p_value = 1.0 - chi_squared_cdf(static_cast<int>(beta_hat.size()), stat);
  return {stat, p_value};
}

ConfidenceRegion confidence_region(const Eigen::VectorXd& beta_hat,
                                   const CovarianceEstimate& sigma, std::int64_t n_k,
                                   double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw InvalidInputError("confidence_region: level must be in (0,1)");
  }
  const Index p = beta_hat.size();
  ConfidenceRegion region;
  region.center = beta_hat;
  region.shape = sigma.sigma_hat / static_cast<double>(n_k);
  region.radius2 = chi_squared_quantile(static_cast<int>(p), level);
  region.level = level;
  const double z = normal_two_sided_critical(level);
  region.band_lo.resize(p);
  region.band_hi.resize(p);
  for (Index t = 0; t < p; ++t) {
    const double half = z * std::sqrt(sigma.sigma_hat(t, t) / static_cast<double>(n_k));
    region.band_lo[t] = beta_hat[t] - half;
    region.band_hi[t] = beta_hat[t] + half;
  }
  return region;
}

}  // namespace streamglm

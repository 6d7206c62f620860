#ifndef STREAMGLM_TEST_HELPERS_HPP
#define STREAMGLM_TEST_HELPERS_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "streamglm/batch.hpp"
#include "streamglm/family.hpp"
#include "streamglm/rng.hpp"

namespace streamglm::test {

inline Eigen::VectorXd vec(std::initializer_list<double> values) {
  Eigen::VectorXd v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double value : values) v[i++] = value;
  return v;
}

inline Batch make_batch(const std::vector<int>& delta, const std::vector<double>& y,
                        const Eigen::MatrixXd& x, const Eigen::MatrixXd& z = {}) {
  Batch b;
  const Index n = static_cast<Index>(delta.size());
  b.observed.resize(n);
  b.y.resize(n);
  b.x = x;
  b.z = z.size() > 0 ? z : Eigen::MatrixXd(n, 0);
  for (Index i = 0; i < n; ++i) {
    b.observed[i] = static_cast<std::uint8_t>(delta[static_cast<std::size_t>(i)]);
    b.y[i] = b.observed[i] ? y[static_cast<std::size_t>(i)]
                           : std::numeric_limits<double>::quiet_NaN();
  }
  return b;
}

// Random batch with y drawn from the family at beta_true, MAR response via
// a logistic model at alpha_true. Used by the derivative property tests.
inline Batch random_batch(Rng& rng, Index n, Index p, const Family& family,
                          const Eigen::VectorXd& beta_true, const Eigen::VectorXd& alpha_true,
                          Index q = 0, const Eigen::VectorXd& gamma_true = {},
                          bool force_observe = false) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Batch b;
  b.x.resize(n, p);
  b.z.resize(n, q);
  b.y.resize(n);
  b.observed.resize(n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < p; ++j) b.x(i, j) = unif(rng);
    for (Index j = 0; j < q; ++j) b.z(i, j) = unif(rng);
    double eta = b.x.row(i).dot(beta_true);
    if (q > 0) eta += b.z.row(i).dot(gamma_true);
    if (family.kind() == FamilyKind::gaussian_identity) {
      b.y[i] = eta + normal(rng);
    } else {
      b.y[i] = u01(rng) < logistic(eta) ? 1.0 : 0.0;
    }
    const double pi = logistic(b.x.row(i).dot(alpha_true));
    b.observed[i] = (force_observe || u01(rng) < pi) ? 1 : 0;
    if (!b.observed[i]) b.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  return b;
}

// Central finite-difference Jacobian of a vector-valued function.
inline Eigen::MatrixXd fd_jacobian(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
                                   const Eigen::VectorXd& x0, double h) {
  const Eigen::VectorXd f0 = f(x0);
  Eigen::MatrixXd jac(f0.size(), x0.size());
  Eigen::VectorXd x = x0;
  for (Index j = 0; j < x0.size(); ++j) {
    x[j] = x0[j] + h;
    const Eigen::VectorXd fp = f(x);
    x[j] = x0[j] - h;
    const Eigen::VectorXd fm = f(x);
    x[j] = x0[j];
    jac.col(j) = (fp - fm) / (2.0 * h);
  }
  return jac;
}

// Naive per-observation IPW score with scalar arithmetic throughout.
inline Eigen::VectorXd naive_s_batch(const Family& family, const Batch& batch,
                                     const Eigen::VectorXd& beta,
                                     const Eigen::VectorXd& alpha) {
  Eigen::VectorXd s = Eigen::VectorXd::Zero(batch.p());
  for (Index i = 0; i < batch.n(); ++i) {
    if (!batch.observed[i]) continue;
    double eta_a = 0.0, eta_b = 0.0;
    for (Index j = 0; j < batch.p(); ++j) {
      eta_a += batch.x(i, j) * alpha[j];
      eta_b += batch.x(i, j) * beta[j];
    }
    double pi = 1.0 / (1.0 + std::exp(-eta_a));
    if (pi < 1e-6) pi = 1e-6;
    const double mu = family.mean(eta_b);
    const double coef = (batch.y[i] - mu) / pi * family.canonical_weight(mu);
    for (Index j = 0; j < batch.p(); ++j) s[j] += coef * batch.x(i, j);
  }
  return s / static_cast<double>(batch.n());
}

inline Eigen::VectorXd naive_v_batch(const Batch& batch, const Eigen::VectorXd& alpha) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(batch.p());
  for (Index i = 0; i < batch.n(); ++i) {
    double eta = 0.0;
    for (Index j = 0; j < batch.p(); ++j) eta += batch.x(i, j) * alpha[j];
    const double pi = 1.0 / (1.0 + std::exp(-eta));
    for (Index j = 0; j < batch.p(); ++j) {
      v[j] += (static_cast<double>(batch.observed[i]) - pi) * batch.x(i, j);
    }
  }
  return v / static_cast<double>(batch.n());
}

// Reference logistic MLE by IRLS, written independently of the library path.
inline Eigen::VectorXd ref_logistic_irls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y01,
                                         const Eigen::VectorXd& weights, int max_iter = 100,
                                         double tol = 1e-12) {
  const Index p = x.cols();
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(p);
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(p);
    Eigen::MatrixXd hess = Eigen::MatrixXd::Zero(p, p);
    for (Index i = 0; i < x.rows(); ++i) {
      const double mu = 1.0 / (1.0 + std::exp(-x.row(i).dot(beta)));
      grad += weights[i] * (y01[i] - mu) * x.row(i).transpose();
      hess += weights[i] * mu * (1.0 - mu) * x.row(i).transpose() * x.row(i);
    }
    const Eigen::VectorXd step = hess.ldlt().solve(grad);
    beta += step;
    if (step.lpNorm<Eigen::Infinity>() < tol) break;
  }
  return beta;
}

// Weighted least squares closed form (X' M X)^-1 X' M y over observed rows.
inline Eigen::VectorXd ref_wls(const Batch& batch, const Eigen::VectorXd& row_weights) {
  Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(batch.p(), batch.p());
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(batch.p());
  for (Index i = 0; i < batch.n(); ++i) {
    if (!batch.observed[i]) continue;
    xtx += row_weights[i] * batch.x.row(i).transpose() * batch.x.row(i);
    xty += row_weights[i] * batch.y[i] * batch.x.row(i).transpose();
  }
  return xtx.ldlt().solve(xty);
}

// Gauss-Legendre nodes/weights on [a, b] via the Golub-Welsch eigen method.
inline void gauss_legendre(int n, double a, double b, std::vector<double>& nodes,
                           std::vector<double>& weights) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double bk = k / std::sqrt(4.0 * k * k - 1.0);
    jacobi(k - 1, k) = bk;
    jacobi(k, k - 1) = bk;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double t = solver.eigenvalues()[k];  // on [-1, 1]
    nodes[static_cast<std::size_t>(k)] = 0.5 * (b - a) * t + 0.5 * (a + b);
    const double w0 = solver.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = 2.0 * w0 * w0 * 0.5 * (b - a);
  }
}

// Gauss-Hermite for E[f(X)] with X ~ N(0,1).
inline void gauss_hermite_standard_normal(int n, std::vector<double>& nodes,
                                          std::vector<double>& weights) {
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double bk = std::sqrt(k / 2.0);
    jacobi(k - 1, k) = bk;
    jacobi(k, k - 1) = bk;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(jacobi);
  nodes.resize(static_cast<std::size_t>(n));
  weights.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    nodes[static_cast<std::size_t>(k)] = std::sqrt(2.0) * solver.eigenvalues()[k];
    const double w0 = solver.eigenvectors()(0, k);
    weights[static_cast<std::size_t>(k)] = w0 * w0;  // already normalized to sum 1
  }
}

}  // namespace streamglm::test

#endif

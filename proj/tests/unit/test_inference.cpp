#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "streamglm/baselines.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/inference.hpp"
#include "streamglm/simgen.hpp"

using namespace streamglm;
using test::make_batch;
using test::vec;

TEST_CASE("sigma_hat: complete-data gaussian matches the HC0 sandwich") {
  Rng rng(12);
  Batch batch = gen_linear_batch(600, rng, true);
  UipwState state =
      UipwState::with_propensity(Family::gaussian_identity(), PropensityState::known(4, 1.0));
  state = ingest(state, batch);

  const CovarianceEstimate cov = sigma_hat(state, batch, VarianceSource::current_batch);
  // (X'X/n)^-1 (sum e_i^2 x_i x_i'/n) (X'X/n)^-1 at the OLS fit
  const double n = static_cast<double>(batch.n());
  const Eigen::MatrixXd a = batch.x.transpose() * batch.x / n;
  const Eigen::VectorXd resid = batch.y - batch.x * state.beta_hat;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(4, 4);
  for (Index i = 0; i < batch.n(); ++i) {
    meat += resid[i] * resid[i] * batch.x.row(i).transpose() * batch.x.row(i);
  }
  meat /= n;
  const Eigen::MatrixXd a_inv = a.inverse();
  const Eigen::MatrixXd hc0 = a_inv * meat * a_inv.transpose();
  CHECK((cov.sigma_hat - hc0).lpNorm<Eigen::Infinity>() < 1e-10 * hc0.lpNorm<Eigen::Infinity>());
}

TEST_CASE("sigma_hat: scalar intercept model reduces to the sample variance") {
  const Index n = 50;
  Rng rng(44);
  std::normal_distribution<double> normal(2.0, 1.5);
  std::vector<int> delta(n, 1);
  std::vector<double> y(n);
  for (auto& value : y) value = normal(rng);
  Batch batch = make_batch(delta, y, Eigen::MatrixXd::Ones(n, 1));
  UipwState state =
      UipwState::with_propensity(Family::gaussian_identity(), PropensityState::known(1, 1.0));
  state = ingest(state, batch);

  const CovarianceEstimate cov = sigma_hat(state, batch);
  double mean = 0.0;
  for (double value : y) mean += value;
  mean /= n;
  double var = 0.0;
  for (double value : y) var += (value - mean) * (value - mean);
  var /= n;  // biased 1/n normalization
  CHECK(cov.sigma_hat(0, 0) == doctest::Approx(var).epsilon(1e-10));
}

// The accumulated-mode stabilization check (sigma at N=20,000 vs N=100,000)
// lives in the acceptance suite: it is a statistical-scale property of the
// simulated design, not a unit-level correctness property.

TEST_CASE("wald_test: null at the estimate and the chi-squared(1) tail") {
  CovarianceEstimate cov;
  cov.sigma_hat = Eigen::MatrixXd::Identity(3, 3) * 2.0;
  cov.n_effective = 100;
  const Eigen::VectorXd beta = vec({1.0, 2.0, 3.0});
  const auto [stat0, p0] = wald_test(beta, cov, 100, beta);
  CHECK(stat0 == 0.0);
  CHECK(p0 == 1.0);

  // p = 1: displacement of two standard errors gives statistic 4.
  CovarianceEstimate scalar;
  scalar.sigma_hat = Eigen::MatrixXd::Constant(1, 1, 5.0);
  const double n_k = 250;
  const double se = std::sqrt(5.0 / n_k);
  const auto [stat, p_value] =
      wald_test(vec({2.0 * se}), scalar, static_cast<std::int64_t>(n_k), vec({0.0}));
  CHECK(stat == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(p_value == doctest::Approx(0.04550026389635842).epsilon(1e-9));

  CovarianceEstimate singular;
  singular.sigma_hat = Eigen::MatrixXd::Zero(2, 2);
  CHECK_THROWS_AS(wald_test(vec({1, 2}), singular, 10, vec({0, 0})), NumericFailure);
}

TEST_CASE("confidence_region: radius, monotonicity, and band shape") {
  CovarianceEstimate cov;
  cov.sigma_hat = Eigen::MatrixXd::Identity(2, 2) * 4.0;
  const Eigen::VectorXd beta = vec({1.0, -1.0});
  const ConfidenceRegion region = confidence_region(beta, cov, 400, 0.95);
  CHECK(region.radius2 == doctest::Approx(5.991464547107979).epsilon(1e-9));
  // band half-width: 1.96 * sqrt(4/400) = 0.196
  CHECK(region.band_hi[0] - beta[0] == doctest::Approx(0.19599639845400543).epsilon(1e-10));
  CHECK(beta[0] - region.band_lo[0] == doctest::Approx(0.19599639845400543).epsilon(1e-10));

  double last = 0.0;
  for (double level : {0.5, 0.8, 0.9, 0.99, 0.9999}) {
    const double r2 = confidence_region(beta, cov, 400, level).radius2;
    CHECK(r2 > last);
    last = r2;
  }
  CHECK_THROWS_AS(confidence_region(beta, cov, 400, 1.0), InvalidInputError);
}

TEST_CASE("wald_test: statistic nonnegative and p-value in [0,1] on random PSD inputs") {
  Rng rng(4242);
  std::uniform_real_distribution<double> unif(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index p = 1 + trial % 4;
    Eigen::MatrixXd root(p, p);
    Eigen::VectorXd beta(p), null(p);
    for (Index i = 0; i < p; ++i) {
      beta[i] = unif(rng);
      null[i] = unif(rng);
      for (Index j = 0; j < p; ++j) root(i, j) = unif(rng);
    }
    CovarianceEstimate cov;
    cov.sigma_hat = root * root.transpose() + 1e-6 * Eigen::MatrixXd::Identity(p, p);
    const auto [stat, p_value] = wald_test(beta, cov, 100 + trial, null);
    CHECK(stat >= 0.0);
    CHECK(p_value >= 0.0);
    CHECK(p_value <= 1.0);
  }
}

TEST_CASE("confidence bands narrow as batches accrue") {
  // Median half-width at k=80 is below the median at k=10 across replications.
  const int reps = 50;
  std::vector<double> width10, width80;
  for (int r = 0; r < reps; ++r) {
    UipwState state = UipwState::initial(Family::gaussian_identity(), 4);
    Batch last;
    for (int j = 0; j < 80; ++j) {
      Rng rng = make_batch_rng(2468, r, j);
      last = gen_linear_batch(120, rng);
      state = ingest(state, last);
      if (j == 9 || j == 79) {
        const CovarianceEstimate cov = sigma_hat(state, last, VarianceSource::accumulated);
        const ConfidenceRegion region =
            confidence_region(state.beta_hat, cov, state.n_total, 0.95);
        const double width = (region.band_hi - region.band_lo).mean();
        (j == 9 ? width10 : width80).push_back(width);
      }
    }
  }
  std::sort(width10.begin(), width10.end());
  std::sort(width80.begin(), width80.end());
  CHECK(width80[reps / 2] < width10[reps / 2]);
}

TEST_CASE("sigma invariants: symmetry and near-PSD") {
  Rng rng(97);
  UipwState state = UipwState::initial(Family::bernoulli_logit(), 4);
  Batch last;
  for (int j = 0; j < 5; ++j) {
    last = gen_logistic_batch(800, rng);
    state = ingest(state, last);
  }
  for (VarianceSource source : {VarianceSource::current_batch, VarianceSource::accumulated}) {
    const CovarianceEstimate cov = sigma_hat(state, last, source);
    CHECK((cov.sigma_hat - cov.sigma_hat.transpose()).lpNorm<Eigen::Infinity>() < 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov.sigma_hat);
    CHECK(eig.eigenvalues().minCoeff() > -1e-10 * eig.eigenvalues().maxCoeff());
  }
}

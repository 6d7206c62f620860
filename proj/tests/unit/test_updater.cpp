#include <doctest.h>

#include <cmath>
#include <regex>

#include "helpers.hpp"
#include "streamglm/baselines.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/simgen.hpp"
#include "streamglm/snapshot.hpp"
#include "streamglm/updater.hpp"

using namespace streamglm;
using test::make_batch;
using test::vec;

namespace {

// Naive triple-loop contraction of the mixed tensor against a shift.
Eigen::MatrixXd loop_l1(const DerivativeBundle& b, const Eigen::VectorXd& beta_shift) {
  const Index p = b.r_alpha.rows();
  Eigen::MatrixXd l1 = b.r_alpha;
  for (Index a = 0; a < p; ++a) {
    for (Index c = 0; c < p; ++c) {
      for (Index k = 0; k < p; ++k) l1(a, c) += b.r_alphabeta(a, k, c) * beta_shift[k];
    }
  }
  return l1;
}

Eigen::MatrixXd loop_l2(const DerivativeBundle& b, const Eigen::VectorXd& alpha_shift) {
  const Index p = b.r_beta.rows();
  Eigen::MatrixXd l2 = b.r_beta;
  for (Index a = 0; a < p; ++a) {
    for (Index k = 0; k < p; ++k) {
      for (Index c = 0; c < p; ++c) l2(a, k) += b.r_alphabeta(a, k, c) * alpha_shift[c];
    }
  }
  return l2;
}

}  // namespace

TEST_CASE("s_batch: hand values and the naive-loop oracle") {
  const Family gaussian = Family::gaussian_identity();

  Eigen::MatrixXd x0(3, 2);
  x0 << 1, 2, -1, 0.5, 0, 3;
  Batch none = make_batch({0, 0, 0}, {0, 0, 0}, x0);
  CHECK(s_batch(gaussian, none, vec({1, 1}), vec({0, 0})).norm() == 0.0);

  Eigen::MatrixXd x1(1, 2);
  x1 << 1, 0;
  Batch one = make_batch({1}, {2.0}, x1);
  const Eigen::VectorXd s = s_batch(gaussian, one, vec({0, 0}), vec({0, 0}));
  CHECK(s[0] == doctest::Approx(4.0));  // (1/0.5) * 2 * weight 1
  CHECK(s[1] == 0.0);

  Rng rng(404);
  const Batch batch = test::random_batch(rng, 100, 4, Family::bernoulli_logit(),
                                         vec({0.5, -0.5, 1, 0}), vec({0.2, 0.4, -0.3, 0.1}));
  const Eigen::VectorXd beta = vec({0.1, 0.2, -0.3, 0.4});
  const Eigen::VectorXd alpha = vec({-0.2, 0.5, 0.1, 0.0});
  CHECK((s_batch(Family::bernoulli_logit(), batch, beta, alpha) -
         test::naive_s_batch(Family::bernoulli_logit(), batch, beta, alpha))
            .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("derivative_bundle: hand case with one gaussian observation") {
  Eigen::MatrixXd x(1, 2);
  x << 1, 0;
  Batch one = make_batch({1}, {0.0}, x);
  const DerivativeBundle b =
      derivative_bundle(Family::gaussian_identity(), one, vec({0, 0}), vec({0, 0}));
  CHECK(b.r_beta(0, 0) == doctest::Approx(-2.0));  // w = 2
  CHECK(b.r_beta(1, 1) == 0.0);
  CHECK(b.r_alpha.norm() == 0.0);  // y - mu = 0
  CHECK(b.r_alphabeta(0, 0, 0) == doctest::Approx(1.0));  // w (1-pi) v = 2 * 0.5 * 1
}

TEST_CASE("derivative_bundle: all-missing batch is identically zero") {
  Rng rng(7);
  Batch batch = test::random_batch(rng, 20, 3, Family::gaussian_identity(), vec({1, 1, 1}),
                                   vec({0, 0, 0}));
  for (Index i = 0; i < batch.n(); ++i) {
    batch.observed[i] = 0;
    batch.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  const DerivativeBundle b =
      derivative_bundle(Family::gaussian_identity(), batch, vec({1, 2, 3}), vec({0.1, 0.2, 0.3}));
  CHECK(b.s.norm() == 0.0);
  CHECK(b.r_beta.norm() == 0.0);
  CHECK(b.r_alpha.norm() == 0.0);
  for (Index c = 0; c < 3; ++c) CHECK(b.r_alphabeta.slice(c).norm() == 0.0);
}

TEST_CASE("derivative_bundle: finite-difference invariants on random triples") {
  Rng rng(1234);
  std::uniform_real_distribution<double> unif(-0.6, 0.6);
  for (int trial = 0; trial < 20; ++trial) {
    const Family family =
        trial % 2 == 0 ? Family::gaussian_identity() : Family::bernoulli_logit();
    const Index p = 3;
    const Batch batch =
        test::random_batch(rng, 40, p, family, vec({0.5, -0.5, 0.25}), vec({0.2, 0.0, -0.2}));
    Eigen::VectorXd beta(p), alpha(p);
    for (Index j = 0; j < p; ++j) {
      beta[j] = unif(rng);
      alpha[j] = unif(rng);
    }
    const DerivativeBundle bundle = derivative_bundle(family, batch, beta, alpha);

    const Eigen::MatrixXd fd_rb = test::fd_jacobian(
        [&](const Eigen::VectorXd& b) { return s_batch(family, batch, b, alpha); }, beta, 1e-6);
    CHECK((bundle.r_beta - fd_rb).lpNorm<Eigen::Infinity>() <
          1e-6 * (1.0 + fd_rb.lpNorm<Eigen::Infinity>()));

    const Eigen::MatrixXd fd_ra = test::fd_jacobian(
        [&](const Eigen::VectorXd& a) { return s_batch(family, batch, beta, a); }, alpha, 1e-6);
    CHECK((bundle.r_alpha - fd_ra).lpNorm<Eigen::Infinity>() <
          1e-6 * (1.0 + fd_ra.lpNorm<Eigen::Infinity>()));

    // Contractions reproduce finite-difference changes of the first derivatives.
    Eigen::VectorXd dbeta(p), dalpha(p);
    for (Index j = 0; j < p; ++j) {
      dbeta[j] = 0.3 * unif(rng);
      dalpha[j] = 0.3 * unif(rng);
    }
    const double h = 1e-4;
    const Eigen::MatrixXd ra_plus =
        derivative_bundle(family, batch, beta + h * dbeta, alpha).r_alpha;
    const Eigen::MatrixXd ra_minus =
        derivative_bundle(family, batch, beta - h * dbeta, alpha).r_alpha;
    const Eigen::MatrixXd fd_dir = (ra_plus - ra_minus) / (2.0 * h);
    const Eigen::MatrixXd contracted = bundle.r_alphabeta.contract_beta(dbeta);
    CHECK((contracted - fd_dir).lpNorm<Eigen::Infinity>() <
          1e-5 * (1.0 + fd_dir.lpNorm<Eigen::Infinity>()));

    const Eigen::MatrixXd rb_plus =
        derivative_bundle(family, batch, beta, alpha + h * dalpha).r_beta;
    const Eigen::MatrixXd rb_minus =
        derivative_bundle(family, batch, beta, alpha - h * dalpha).r_beta;
    const Eigen::MatrixXd fd_dir2 = (rb_plus - rb_minus) / (2.0 * h);
    const Eigen::MatrixXd contracted2 = bundle.r_alphabeta.contract_alpha(dalpha);
    CHECK((contracted2 - fd_dir2).lpNorm<Eigen::Infinity>() <
          1e-5 * (1.0 + fd_dir2.lpNorm<Eigen::Infinity>()));
  }
}

TEST_CASE("l_aggregates: trivial and hand-contracted cases") {
  const Index p = 2;
  DerivativeBundle bundle;
  bundle.s = Eigen::VectorXd::Zero(p);
  bundle.r_beta = Eigen::MatrixXd::Zero(p, p);
  bundle.r_alpha = Eigen::MatrixXd::Zero(p, p);
  bundle.r_alphabeta.resize(p);

  SUBCASE("zero shifts leave the first derivatives unchanged") {
    bundle.r_alpha << 1, 2, 3, 4;
    bundle.r_beta << -1, 0, 0, -2;
    const auto [l1, l2] = l_aggregates(bundle, vec({0, 0}), vec({0, 0}));
    CHECK(l1 == bundle.r_alpha);
    CHECK(l2 == bundle.r_beta);
  }

  SUBCASE("all-ones tensor contracts to all-ones matrices") {
    for (Index c = 0; c < p; ++c) bundle.r_alphabeta.slice(c).setOnes();
    const auto [l1, l2] = l_aggregates(bundle, vec({1, 0}), vec({0, 1}));
    CHECK(l1.isApprox(Eigen::MatrixXd::Ones(p, p)));
    CHECK(l2.isApprox(Eigen::MatrixXd::Ones(p, p)));
  }

  SUBCASE("random tensors match the triple-loop oracle") {
    Rng rng(55);
    const Batch batch = test::random_batch(rng, 30, 3, Family::bernoulli_logit(),
                                           vec({0.5, 0.5, -0.5}), vec({0.1, 0.2, 0.3}));
    const DerivativeBundle b =
        derivative_bundle(Family::bernoulli_logit(), batch, vec({0.2, -0.1, 0.3}),
                          vec({-0.3, 0.2, 0.1}));
    const Eigen::VectorXd bs = vec({0.7, -0.4, 0.1});
    const Eigen::VectorXd as = vec({-0.2, 0.6, 0.5});
    const auto [l1, l2] = l_aggregates(b, bs, as);
    CHECK((l1 - loop_l1(b, bs)).lpNorm<Eigen::Infinity>() < 1e-14);
    CHECK((l2 - loop_l2(b, as)).lpNorm<Eigen::Infinity>() < 1e-14);
  }

  SUBCASE("dimension mismatch") {
    CHECK_THROWS_AS(l_aggregates(bundle, vec({1, 2, 3}), vec({0, 0})), InvalidInputError);
  }
}

TEST_CASE("update_beta: first batch equals the single-batch IPW solve") {
  Rng rng(909);
  Batch batch = gen_logistic_batch(1500, rng);
  UipwState state = UipwState::initial(Family::bernoulli_logit(), 4);
  state = ingest(state, batch);
  const Eigen::VectorXd oracle = oracle_fit(Family::bernoulli_logit(), {batch});
  CHECK((state.beta_hat - oracle).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("ingest: gaussian with known propensity equals pooled WLS after every batch") {
  UipwState state =
      UipwState::with_propensity(Family::gaussian_identity(), PropensityState::known(4, 1.0));
  std::vector<Batch> seen;
  for (int j = 0; j < 3; ++j) {
    Rng rng = make_batch_rng(66, 0, j);
    seen.push_back(gen_linear_batch(400, rng, true));
    state = ingest(state, seen.back());
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(4, 4);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(4);
    for (const Batch& b : seen) {
      xtx += b.x.transpose() * b.x;
      xty += b.x.transpose() * b.y;
    }
    const Eigen::VectorXd ols = xtx.ldlt().solve(xty);
    CHECK((state.beta_hat - ols).lpNorm<Eigen::Infinity>() < 1e-6);
  }
  CHECK(state.batch_count == state.prop.batch_count);
  CHECK(state.n_total == state.prop.n_total);
}

TEST_CASE("ingest: gaussian with estimated propensity and true weights stays near truth") {
  // Longer stream with missingness; sanity on consistency of the full two-step.
  UipwState state = UipwState::initial(Family::gaussian_identity(), 4);
  for (int j = 0; j < 60; ++j) {
    Rng rng = make_batch_rng(343, 0, j);
    state = ingest(state, gen_linear_batch(1000, rng));
  }
  CHECK((state.beta_hat - design_beta0(Design::linear_4d)).lpNorm<Eigen::Infinity>() < 0.06);
}

TEST_CASE("ingest: all-missing batch leaves beta-side sums untouched") {
  Rng rng(31);
  UipwState state = UipwState::initial(Family::gaussian_identity(), 4);
  state = ingest(state, gen_linear_batch(500, rng));
  Batch missing = gen_linear_batch(200, rng);
  for (Index i = 0; i < missing.n(); ++i) {
    missing.observed[i] = 0;
    missing.y[i] = std::numeric_limits<double>::quiet_NaN();
  }
  const Eigen::MatrixXd sum_r_beta_before = state.sum_r_beta;
  const Eigen::MatrixXd h_before = state.prop.h_tilde;
  UipwState after = ingest(state, missing);
  CHECK(after.sum_r_beta == sum_r_beta_before);
  CHECK(after.sum_r_alpha == state.sum_r_alpha);
  // the alpha side still learns from delta = 0
  CHECK((after.prop.h_tilde - h_before).norm() > 0.0);
  CHECK(after.batch_count == 2);
}

TEST_CASE("ingest: deterministic replay is bit-identical") {
  auto run = [] {
    UipwState state = UipwState::initial(Family::bernoulli_logit(), 4);
    for (int j = 0; j < 10; ++j) {
      Rng rng = make_batch_rng(5150, 0, j);
      state = ingest(state, gen_logistic_batch(300, rng));
    }
    return state;
  };
  const UipwState a = run();
  const UipwState b = run();
  CHECK(a.beta_hat == b.beta_hat);
  CHECK(a.prop.alpha_hat == b.prop.alpha_hat);
  CHECK(save_snapshot(a) == save_snapshot(b));
}

TEST_CASE("constant memory: snapshot size does not grow with the batch count") {
  auto snapshot_for = [](int k_batches) {
    UipwState state = UipwState::initial(Family::gaussian_identity(), 4);
    for (int j = 0; j < k_batches; ++j) {
      Rng rng = make_batch_rng(8080, 0, j);
      state = ingest(state, gen_linear_batch(50, rng));
    }
    return save_snapshot(state);
  };
  // Counters and digest are the only width-variable fields; mask them out.
  const std::regex counters("\"(n|n_total|batch_count)\": [0-9]+|\"ingest_digest\": \"[0-9a-f]+\"");
  const std::string s1 = std::regex_replace(snapshot_for(1), counters, "#");
  const std::string s10 = std::regex_replace(snapshot_for(10), counters, "#");
  const std::string s1000 = std::regex_replace(snapshot_for(1000), counters, "#");
  CHECK(s1.size() == s10.size());
  CHECK(s10.size() == s1000.size());

  // same property for the heterogeneous state
  auto hetero_snapshot_for = [&](int k_batches) {
    HeteroState state = HeteroState::initial(Family::bernoulli_logit(), 2, 2);
    for (int j = 0; j < k_batches; ++j) {
      Rng rng = make_batch_rng(8081, 0, j);
      state = ingest_hetero(state, gen_hetero_batch(120, rng));
    }
    return std::regex_replace(save_snapshot(state), counters, "#");
  };
  CHECK(hetero_snapshot_for(2).size() == hetero_snapshot_for(20).size());
}

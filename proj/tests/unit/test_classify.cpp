#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "streamglm/classify.hpp"
#include "streamglm/errors.hpp"
#include "streamglm/simgen.hpp"

using namespace streamglm;
using test::vec;

namespace {

// Independent AUC oracle: O(n^2) pairwise comparison with half-credit ties.
double pairwise_auc(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  double wins = 0.0;
  long long pairs = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1.0) continue;
    for (Eigen::Index j = 0; j < scores.size(); ++j) {
      if (labels[j] != 0.0) continue;
      ++pairs;
      if (scores[i] > scores[j]) {
        wins += 1.0;
      } else if (scores[i] == scores[j]) {
        wins += 0.5;
      }
    }
  }
  return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("auc: perfect separation and the tied-score midpoint") {
  const Eigen::VectorXd scores = vec({0.1, 0.2, 0.8, 0.9});
  const Eigen::VectorXd labels = vec({0, 0, 1, 1});
  CHECK(auc_midrank(scores, labels) == 1.0);
  const Eigen::VectorXd tied = vec({0.5, 0.5, 0.5, 0.5});
  CHECK(auc_midrank(tied, labels) == 0.5);
}

TEST_CASE("auc: label-independent scores give one half at scale") {
  std::mt19937_64 rng(123);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const Eigen::Index n = 10000;
  Eigen::VectorXd scores(n), labels(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    scores[i] = u01(rng);
    labels[i] = u01(rng) < 0.4 ? 1.0 : 0.0;
  }
  CHECK(std::abs(auc_midrank(scores, labels) - 0.5) < 0.02);
}

TEST_CASE("auc: midrank formula matches the pairwise-count oracle") {
  Rng rng(321);
  Batch batch = gen_logistic_batch(800, rng, true);
  const Eigen::VectorXd beta0 = design_beta0(Design::logistic_4d);
  Eigen::VectorXd scores(batch.n());
  for (Index i = 0; i < batch.n(); ++i) {
    scores[i] = logistic(batch.x.row(i).dot(beta0));
  }
  const double fast = auc_midrank(scores, batch.y);
  const double slow = pairwise_auc(scores, batch.y);
  CHECK(fast == doctest::Approx(slow).epsilon(1e-12));
  CHECK(std::abs(fast - slow) < 0.01);
}

TEST_CASE("accuracy at the 0.5 threshold") {
  const Eigen::VectorXd scores = vec({0.4, 0.6, 0.5, 0.9});
  const Eigen::VectorXd labels = vec({0, 1, 1, 0});
  // 0.5 is not above the threshold, so row 3 predicts 0 (wrong); row 4 predicts 1 (wrong).
  CHECK(classification_accuracy(scores, labels, 0.5) == doctest::Approx(0.5));
  CHECK_THROWS_AS(classification_accuracy(scores, vec({0, 2, 1, 0})), InvalidInputError);
}

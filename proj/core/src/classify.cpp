#include "streamglm/classify.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

#include "streamglm/errors.hpp"

namespace streamglm {

namespace {

void check_labels(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  if (scores.size() != labels.size() || scores.size() == 0) {
    throw InvalidInputError("classification: scores and labels must have equal nonzero length");
  }
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0.0 && labels[i] != 1.0) {
      throw InvalidInputError("classification: labels must be 0 or 1");
    }
  }
}

}  // namespace

double classification_accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                               double threshold) {
  check_labels(scores, labels);
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < scores.size(); ++i) {
    const double predicted = scores[i] > threshold ? 1.0 : 0.0;
    if (predicted == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.size());
}

double auc_midrank(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels) {
  check_labels(scores, labels);
  const Eigen::Index n = scores.size();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::sort(order.begin(), order.end(),
            [&](Eigen::Index a, Eigen::Index b) { return scores[a] < scores[b]; });

  std::vector<double> rank(static_cast<std::size_t>(n));
  Eigen::Index i = 0;
  while (i < n) {
    Eigen::Index j = i;
    while (j + 1 < n && scores[order[static_cast<std::size_t>(j + 1)]] ==
                            scores[order[static_cast<std::size_t>(i)]]) {
      ++j;
    }
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index k = i; k <= j; ++k) {
      rank[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] = midrank;
    }
    i = j + 1;
  }

  double rank_sum_pos = 0.0;
  Eigen::Index n_pos = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (labels[k] == 1.0) {
      rank_sum_pos += rank[static_cast<std::size_t>(k)];
      ++n_pos;
    }
  }
  const Eigen::Index n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw InvalidInputError("auc: both classes must be present");
  }
  const double n_pos_d = static_cast<double>(n_pos);
  return (rank_sum_pos - n_pos_d * (n_pos_d + 1.0) / 2.0) /
         (n_pos_d * static_cast<double>(n_neg));
}

}  // namespace streamglm

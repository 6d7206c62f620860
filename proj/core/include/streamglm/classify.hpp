#ifndef STREAMGLM_CLASSIFY_HPP
#define STREAMGLM_CLASSIFY_HPP

#include <Eigen/Core>

namespace streamglm {

/// Proportion of rows where (score > threshold) agrees with the 0/1 label.
double classification_accuracy(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels,
                               double threshold = 0.5);

/// Area under the ROC curve by the rank (Mann-Whitney) formula with midrank
/// tie handling. Labels must be 0/1 with both classes present.
double auc_midrank(const Eigen::VectorXd& scores, const Eigen::VectorXd& labels);

}  // namespace streamglm

#endif

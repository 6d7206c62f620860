#ifndef STREAMGLM_ERRORS_HPP
#define STREAMGLM_ERRORS_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>

namespace streamglm {

// Bad arguments: dimension mismatches, non-finite inputs, empty batches.
class InvalidInputError : public std::invalid_argument {
 public:
  explicit InvalidInputError(const std::string& what) : std::invalid_argument(what) {}
};

// Linear-algebra breakdown (singular system after ridge fallback).
// Carries a crude condition estimate (max/min pivot ratio) of the offending matrix.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(const std::string& what, double condition_estimate)
      : std::runtime_error(what + " (condition estimate " + std::to_string(condition_estimate) + ")"),
        condition_estimate(condition_estimate) {}
  double condition_estimate;
};

// Iteration budget exhausted. Carries the last iterate and its step/residual norm.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, Eigen::VectorXd last_iterate, double residual_norm)
      : std::runtime_error(what + " (residual " + std::to_string(residual_norm) + ")"),
        last_iterate(std::move(last_iterate)),
        residual_norm(residual_norm) {}
  Eigen::VectorXd last_iterate;
  double residual_norm;
};

}  // namespace streamglm

#endif

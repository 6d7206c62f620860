#ifndef STREAMGLM_DISTRIBUTIONS_HPP
#define STREAMGLM_DISTRIBUTIONS_HPP

namespace streamglm {

/// Regularized lower incomplete gamma P(a, x).
double regularized_gamma_p(double a, double x);

/// Chi-squared CDF with `df` degrees of freedom.
double chi_squared_cdf(int df, double x);

/// Chi-squared quantile: smallest x with CDF(x) >= prob, prob in (0,1).
double chi_squared_quantile(int df, double prob);

/// Two-sided standard-normal critical value: z with P(|Z| <= z) = level.
double normal_two_sided_critical(double level);

}  // namespace streamglm

#endif

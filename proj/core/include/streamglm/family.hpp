#ifndef STREAMGLM_FAMILY_HPP
#define STREAMGLM_FAMILY_HPP

#include <string>

namespace streamglm {

enum class FamilyKind { gaussian_identity, bernoulli_logit };

/// Exponential-family description under the canonical link.
///
/// Only the two families the estimators support are implemented; keeping the
/// set closed keeps every downstream analytic derivative auditable. For both
/// families the canonical weight [v(mu) * g_mu(mu)]^-1 simplifies to 1, and
/// mean() is the inverse canonical link.
class Family {
 public:
  static Family gaussian_identity() { return Family(FamilyKind::gaussian_identity); }
  static Family bernoulli_logit() { return Family(FamilyKind::bernoulli_logit); }
  static Family from_name(const std::string& name);

  FamilyKind kind() const { return kind_; }
  const char* name() const;

  /// Inverse canonical link: eta -> mu. Bernoulli output is strictly inside (0,1).
  /// Throws InvalidInputError on non-finite eta.
  double mean(double eta) const;

  /// Unit variance v(mu).
  double unit_variance(double mu) const;

  /// Link derivative g_mu(mu) = d g / d mu.
  double link_deriv(double mu) const;

  /// [v(mu) * g_mu(mu)]^-1, returned in algebraically simplified form.
  /// Equals 1 for both supported (canonical) families.
  /// Throws InvalidInputError when mu is outside the family's mean range.
  double canonical_weight(double mu) const;

  bool is_binary() const { return kind_ == FamilyKind::bernoulli_logit; }

 private:
  explicit Family(FamilyKind kind) : kind_(kind) {}
  FamilyKind kind_;
};

/// Numerically stable logistic function, branch form to avoid overflow for |x| > 700.
double logistic(double x);

}  // namespace streamglm

#endif

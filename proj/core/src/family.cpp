#include "streamglm/family.hpp"

#include <cmath>
#include <limits>

#include "streamglm/errors.hpp"

namespace streamglm {

double logistic(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Family Family::from_name(const std::string& name) {
  if (name == "gaussian_identity" || name == "gaussian") return gaussian_identity();
  if (name == "bernoulli_logit" || name == "bernoulli") return bernoulli_logit();
  throw InvalidInputError("unknown family: " + name);
}

const char* Family::name() const {
  return kind_ == FamilyKind::gaussian_identity ? "gaussian_identity" : "bernoulli_logit";
}

double Family::mean(double eta) const {
  if (!std::isfinite(eta)) throw InvalidInputError("mean: eta must be finite");
  if (kind_ == FamilyKind::gaussian_identity) return eta;
  double mu = logistic(eta);
  // Keep the output strictly inside (0,1) even where the logistic rounds to 0 or 1.
  constexpr double lo = std::numeric_limits<double>::min();
  const double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
  if (mu < lo) mu = lo;
  if (mu > hi) mu = hi;
  return mu;
}

double Family::unit_variance(double mu) const {
  if (kind_ == FamilyKind::gaussian_identity) return 1.0;
  return mu * (1.0 - mu);
}

double Family::link_deriv(double mu) const {
  if (kind_ == FamilyKind::gaussian_identity) return 1.0;
  return 1.0 / (mu * (1.0 - mu));
}

double Family::canonical_weight(double mu) const {
  if (kind_ == FamilyKind::gaussian_identity) {
    if (!std::isfinite(mu)) throw InvalidInputError("canonical_weight: mu must be finite");
    return 1.0;
  }
  if (!(mu > 0.0 && mu < 1.0)) {
    throw InvalidInputError("canonical_weight: mu outside (0,1) for bernoulli_logit");
  }
  // v(mu) * g_mu(mu) = mu(1-mu) / (mu(1-mu)) = 1 under the canonical link.
  return 1.0;
}

}  // namespace streamglm

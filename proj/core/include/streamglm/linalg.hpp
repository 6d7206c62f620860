#ifndef STREAMGLM_LINALG_HPP
#define STREAMGLM_LINALG_HPP

#include <Eigen/Dense>
#include <vector>

#include "streamglm/errors.hpp"

namespace streamglm {

/// Dense p x p x p tensor of mixed second derivatives, stored as slices over
/// the last index: slice(c)(a, b) = T[a, b, c].
class Tensor3 {
 public:
  Tensor3() = default;
  explicit Tensor3(Eigen::Index p) { resize(p); }

  void resize(Eigen::Index p) {
    slices_.assign(static_cast<std::size_t>(p), Eigen::MatrixXd::Zero(p, p));
  }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(slices_.size()); }

  Eigen::MatrixXd& slice(Eigen::Index c) { return slices_[static_cast<std::size_t>(c)]; }
  const Eigen::MatrixXd& slice(Eigen::Index c) const { return slices_[static_cast<std::size_t>(c)]; }

  double operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) const {
    return slices_[static_cast<std::size_t>(c)](a, b);
  }
  double& operator()(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
    return slices_[static_cast<std::size_t>(c)](a, b);
  }

  void setZero() {
    for (auto& s : slices_) s.setZero();
  }

  Tensor3& operator+=(const Tensor3& other) {
    for (std::size_t c = 0; c < slices_.size(); ++c) slices_[c] += other.slices_[c];
    return *this;
  }
  Tensor3& operator*=(double scale) {
    for (auto& s : slices_) s *= scale;
    return *this;
  }

  /// Contract over the middle (beta) index: out(a, c) = sum_b T[a,b,c] w[b].
  Eigen::MatrixXd contract_beta(const Eigen::VectorXd& w) const {
    const Eigen::Index p = dim();
    if (w.size() != p) throw InvalidInputError("contract_beta: dimension mismatch");
    Eigen::MatrixXd out(p, p);
    for (Eigen::Index c = 0; c < p; ++c) out.col(c) = slices_[static_cast<std::size_t>(c)] * w;
    return out;
  }

  /// Contract over the last (alpha) index: out(a, b) = sum_c T[a,b,c] w[c].
  Eigen::MatrixXd contract_alpha(const Eigen::VectorXd& w) const {
    const Eigen::Index p = dim();
    if (w.size() != p) throw InvalidInputError("contract_alpha: dimension mismatch");
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index c = 0; c < p; ++c) out += w[c] * slices_[static_cast<std::size_t>(c)];
    return out;
  }

 private:
  std::vector<Eigen::MatrixXd> slices_;
};

/// Solves A x = b for a (nominally definite) symmetric A. On a singular or
/// near-singular factorization, retries once with a ridge of `ridge_sign`*1e-8
/// on the diagonal; if still singular throws NumericFailure with a pivot-ratio
/// condition estimate. `ridge_sign` should match the sign of A's definiteness.
inline Eigen::VectorXd solve_with_ridge(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                        double ridge_sign, const char* context) {
  auto try_solve = [&](const Eigen::MatrixXd& m, Eigen::VectorXd& out, double& cond) -> bool {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    const double max_piv = lu.maxPivot();
    double min_piv = max_piv;
    const auto& lum = lu.matrixLU();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      min_piv = std::min(min_piv, std::abs(lum(i, i)));
    }
    cond = (min_piv > 0.0) ? max_piv / min_piv : std::numeric_limits<double>::infinity();
    if (!lu.isInvertible()) return false;
    out = lu.solve(b);
    return out.allFinite();
  };

  Eigen::VectorXd x;
  double cond = 0.0;
  if (try_solve(a, x, cond)) return x;
  const Eigen::MatrixXd ridged =
      a + ridge_sign * 1e-8 * Eigen::MatrixXd::Identity(a.rows(), a.cols());
  if (try_solve(ridged, x, cond)) return x;
  throw NumericFailure(std::string(context) + ": singular system after ridge fallback", cond);
}

/// Inverse with the same ridge fallback policy.
inline Eigen::MatrixXd invert_with_ridge(const Eigen::MatrixXd& a, double ridge_sign,
                                         const char* context) {
  const Eigen::Index n = a.rows();
  Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
  if (lu.isInvertible()) return lu.inverse();
  const Eigen::MatrixXd ridged = a + ridge_sign * 1e-8 * Eigen::MatrixXd::Identity(n, n);
  Eigen::FullPivLU<Eigen::MatrixXd> lu2(ridged);
  if (lu2.isInvertible()) return lu2.inverse();
  const double cond = lu.maxPivot() > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  throw NumericFailure(std::string(context) + ": singular matrix after ridge fallback", cond);
}

}  // namespace streamglm

#endif

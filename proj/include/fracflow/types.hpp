#ifndef FRACFLOW_TYPES_HPP
#define FRACFLOW_TYPES_HPP

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>

namespace fracflow {

using Index = Eigen::Index;

/// Scalar of the production pipeline (solver, checks, CLI). The extra
/// mantissa bits keep the stopping rule attainable when p < 2, where the
/// flux |d|^{p-2} d is only Hoelder continuous at d = 0.
using Real = long double;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

/// sign(x) * |x|^e, continuous at 0 for e > 0.
template <typename Scalar>
inline Scalar signed_pow(Scalar x, Scalar e) {
  using std::abs;
  using std::pow;
  if (x == Scalar(0)) return Scalar(0);
  const Scalar m = pow(abs(x), e);
  return x > Scalar(0) ? m : -m;
}

/// |x|^e with 0^e = 0 for e > 0.
template <typename Scalar>
inline Scalar abs_pow(Scalar x, Scalar e) {
  using std::abs;
  using std::pow;
  if (x == Scalar(0)) return Scalar(0);
  return pow(abs(x), e);
}

/// |a|^e - |b|^e evaluated without catastrophic cancellation when |a| ~ |b|.
template <typename Scalar>
inline Scalar abs_pow_diff(Scalar a, Scalar b, Scalar e) {
  using std::abs;
  using std::expm1;
  using std::log1p;
  using std::pow;
  const Scalar aa = abs(a);
  const Scalar bb = abs(b);
  if (aa == bb) return Scalar(0);
  if (aa == Scalar(0)) return -pow(bb, e);
  if (bb == Scalar(0)) return pow(aa, e);
  // Far apart: no cancellation to worry about.
  if (aa > Scalar(2) * bb || bb > Scalar(2) * aa) return pow(aa, e) - pow(bb, e);
  const Scalar rel = (aa - bb) / bb;
  return pow(bb, e) * expm1(e * log1p(rel));
}

/// signed_pow(a, e) - signed_pow(b, e) without cancellation when a ~ b.
template <typename Scalar>
inline Scalar signed_pow_diff(Scalar a, Scalar b, Scalar e) {
  if (e == Scalar(1)) return a - b;
  if ((a >= Scalar(0)) != (b >= Scalar(0)) || a == Scalar(0) || b == Scalar(0))
    return signed_pow(a, e) - signed_pow(b, e);
  const Scalar d = abs_pow_diff(a, b, e);
  return a > Scalar(0) ? d : -d;
}

}  // namespace fracflow

#endif  // FRACFLOW_TYPES_HPP

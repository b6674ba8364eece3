#ifndef FRACFLOW_ENERGY_HPP
#define FRACFLOW_ENERGY_HPP

#include "fracflow/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace fracflow {

/// vol * sum_i |u_i|^r.
template <typename Scalar>
Scalar lq_power_integral(const GridFunction<Scalar>& u, Scalar r) {
  if (!(r >= Scalar(1))) throw std::invalid_argument("lq_power_integral requires r >= 1");
  Scalar acc = 0;
  for (Index i = 0; i < u.size(); ++i) acc += abs_pow(u[i], r);
  return u.domain()->vol() * acc;
}

namespace detail {

/// |d|^{p-2} d, with the p = 2 case kept exact.
template <typename Scalar>
inline Scalar p_flux(Scalar d, Scalar p) {
  if (p == Scalar(2)) return d;
  return signed_pow(d, p - Scalar(1));
}

template <typename Scalar>
inline Scalar p_power(Scalar d, Scalar p) {
  if (p == Scalar(2)) return d * d;
  return abs_pow(d, p);
}

}  // namespace detail

/// Seminorm p-th power of the zero extension of interior values x:
/// 2 sum_{a<b} W_ab |x_a - x_b|^p + 2 sum_a e_a |x_a|^p.
template <typename Scalar>
Scalar seminorm_p_interior(const KernelTable<Scalar>& k, const VectorX<Scalar>& x) {
  const auto& W = k.interior_weights();
  const auto& e = k.exterior_weight();
  const Scalar p = k.p();
  const Index n = x.size();
  Scalar pairs = 0;
  for (Index b = 0; b < n; ++b) {
    const Scalar xb = x[b];
    for (Index a = b + 1; a < n; ++a) pairs += W(a, b) * detail::p_power(x[a] - xb, p);
  }
  Scalar local = 0;
  for (Index a = 0; a < n; ++a) local += e[a] * detail::p_power(x[a], p);
  return Scalar(2) * (pairs + local);
}

/// Gradient of seminorm_p_interior / (2p):
/// g_a = sum_b W_ab |x_a - x_b|^{p-2}(x_a - x_b) + e_a |x_a|^{p-2} x_a.
template <typename Scalar>
VectorX<Scalar> frac_p_laplacian_interior(const KernelTable<Scalar>& k, const VectorX<Scalar>& x) {
  const auto& W = k.interior_weights();
  const auto& e = k.exterior_weight();
  const Scalar p = k.p();
  const Index n = x.size();
  VectorX<Scalar> g(n);
  for (Index a = 0; a < n; ++a) g[a] = e[a] * detail::p_flux(x[a], p);
  for (Index b = 0; b < n; ++b) {
    const Scalar xb = x[b];
    for (Index a = b + 1; a < n; ++a) {
      const Scalar f = W(a, b) * detail::p_flux(x[a] - xb, p);
      g[a] += f;
      g[b] -= f;
    }
  }
  return g;
}

/// [u]^p = sum_{i != j} w_ij |u_i - u_j|^p + 2 sum_i t_i |u_i|^p for zero-exterior u.
template <typename Scalar>
Scalar gagliardo_seminorm_p(const GridFunction<Scalar>& u, const KernelTable<Scalar>& kernel, Scalar p) {
  kernel.require_match(*u.domain(), p);
  return seminorm_p_interior(kernel, u.interior_values());
}

template <typename Scalar>
Scalar energy_functional(const GridFunction<Scalar>& u, const KernelTable<Scalar>& kernel, Scalar p) {
  return gagliardo_seminorm_p(u, kernel, p) / (Scalar(2) * p);
}

/// Gradient of the energy at u with respect to interior nodal values;
/// exterior components are reported as 0.
template <typename Scalar>
GridFunction<Scalar> apply_frac_p_laplacian(const GridFunction<Scalar>& u, const KernelTable<Scalar>& kernel,
                                            Scalar p) {
  kernel.require_match(*u.domain(), p);
  return GridFunction<Scalar>::from_interior(u.domain(), frac_p_laplacian_interior(kernel, u.interior_values()));
}

/// The per-step functional and its gradient restricted to interior values.
template <typename Scalar>
class RotheProblem {
 public:
  RotheProblem(const KernelTable<Scalar>& kernel, const VectorX<Scalar>& u_prev, const FlowParams& params)
      : kernel_(kernel),
        q_(Scalar(params.q)),
        p_(Scalar(params.p)),
        coef_(kernel.domain()->vol() / Scalar(params.h)) {
    v_prev_.resize(u_prev.size());
    for (Index a = 0; a < u_prev.size(); ++a) v_prev_[a] = q_power(u_prev[a]);
  }

  Index size() const { return v_prev_.size(); }
  const VectorX<Scalar>& v_prev() const { return v_prev_; }

  /// |x|^{q-1} x.
  Scalar q_power(Scalar x) const { return q_ == Scalar(1) ? x : signed_pow(x, q_); }

  Scalar value(const VectorX<Scalar>& w) const {
    Scalar local = 0;
    for (Index a = 0; a < w.size(); ++a)
      local += abs_pow(w[a], q_ + Scalar(1)) / (q_ + Scalar(1)) - v_prev_[a] * w[a];
    return coef_ * local + seminorm_p_interior(kernel_, w) / (Scalar(2) * p_);
  }

  VectorX<Scalar> gradient(const VectorX<Scalar>& w) const {
    VectorX<Scalar> g = frac_p_laplacian_interior(kernel_, w);
    for (Index a = 0; a < w.size(); ++a) g[a] += coef_ * (q_power(w[a]) - v_prev_[a]);
    return g;
  }

  /// Symmetric positive semidefinite curvature model at w. Terms that grow
  /// at least quadratically use their exact second derivative; the
  /// sub-quadratic ones (|d|^p with p < 2, |w|^{q+1} with q < 1) use the
  /// curvature of their quadratic majorant at the current point, which
  /// removes the overshoot of plain Newton at their cusps. Powers with a
  /// negative exponent are evaluated at max(|d|, floor).
  MatrixX<Scalar> curvature(const VectorX<Scalar>& w, Scalar floor) const {
    const auto& W = kernel_.interior_weights();
    const auto& e = kernel_.exterior_weight();
    const Index n = w.size();
    const Scalar pf = p_ < Scalar(2) ? Scalar(1) : p_ - Scalar(1);
    const Scalar qf = q_ < Scalar(1) ? Scalar(1) : q_;
    auto power = [floor](Scalar d, Scalar ex) {
      using std::abs;
      using std::pow;
      if (ex == Scalar(0)) return Scalar(1);
      Scalar a = abs(d);
      if (ex < Scalar(0)) a = std::max(a, floor);
      return a == Scalar(0) ? Scalar(0) : pow(a, ex);
    };
    MatrixX<Scalar> H = MatrixX<Scalar>::Zero(n, n);
    for (Index a = 0; a < n; ++a)
      H(a, a) = coef_ * qf * power(w[a], q_ - Scalar(1)) + e[a] * pf * power(w[a], p_ - Scalar(2));
    for (Index b = 0; b < n; ++b) {
      for (Index a = b + 1; a < n; ++a) {
        const Scalar c = W(a, b) * pf * power(w[a] - w[b], p_ - Scalar(2));
        H(a, a) += c;
        H(b, b) += c;
        H(a, b) -= c;
        H(b, a) -= c;
      }
    }
    return H;
  }

  /// value(a) - value(b) accumulated termwise so that nearby points do not
  /// lose the difference to cancellation.
  Scalar value_difference(const VectorX<Scalar>& a, const VectorX<Scalar>& b) const {
    const auto& W = kernel_.interior_weights();
    const auto& e = kernel_.exterior_weight();
    const Index n = a.size();
    const Scalar q1 = q_ + Scalar(1);
    Scalar local = 0;
    for (Index i = 0; i < n; ++i) local += abs_pow_diff(a[i], b[i], q1) / q1 - v_prev_[i] * (a[i] - b[i]);
    Scalar pairs = 0;
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) pairs += W(i, j) * pow_diff(a[i] - a[j], b[i] - b[j]);
    }
    Scalar ext = 0;
    for (Index i = 0; i < n; ++i) ext += e[i] * pow_diff(a[i], b[i]);
    return coef_ * local + (pairs + ext) / p_;
  }

 private:
  Scalar pow_diff(Scalar x, Scalar y) const {
    if (p_ == Scalar(2)) return (x - y) * (x + y);
    return abs_pow_diff(x, y, p_);
  }

  const KernelTable<Scalar>& kernel_;
  Scalar q_;
  Scalar p_;
  Scalar coef_;
  VectorX<Scalar> v_prev_;
};

template <typename Scalar>
Scalar rothe_functional(const GridFunction<Scalar>& w, const GridFunction<Scalar>& u_prev,
                        const KernelTable<Scalar>& kernel, const FlowParams& params) {
  kernel.require_match(*w.domain(), params);
  kernel.require_match(*u_prev.domain(), params);
  const RotheProblem<Scalar> prob(kernel, u_prev.interior_values(), params);
  return prob.value(w.interior_values());
}

template <typename Scalar>
GridFunction<Scalar> rothe_gradient(const GridFunction<Scalar>& w, const GridFunction<Scalar>& u_prev,
                                    const KernelTable<Scalar>& kernel, const FlowParams& params) {
  kernel.require_match(*w.domain(), params);
  kernel.require_match(*u_prev.domain(), params);
  const RotheProblem<Scalar> prob(kernel, u_prev.interior_values(), params);
  return GridFunction<Scalar>::from_interior(w.domain(), prob.gradient(w.interior_values()));
}

/// Constants of the two-sided algebraic inequalities for V(x) = |x|^{alpha-2} x:
///   |V(xi) - V(eta)| <= c1 (|xi| + |eta|)^{alpha-2} |xi - eta|
///   (V(xi) - V(eta))(xi - eta) >= c2 (|xi| + |eta|)^{alpha-2} |xi - eta|^2
struct AlgConstants {
  double alpha = 2;
  double c1 = 1;
  double c2 = 1;
};

/// Ratio (V(xi) - V(eta)) / ((|xi| + |eta|)^{alpha-2} (xi - eta)). Both
/// inequalities above reduce to bounds on this ratio since V is increasing.
/// On the diagonal xi = eta != 0 the continuous limit (alpha-1) / 2^{alpha-2}
/// is returned.
template <typename Scalar>
Scalar alg_ratio(Scalar alpha, Scalar xi, Scalar eta) {
  using std::abs;
  using std::pow;
  const Scalar m = abs(xi) + abs(eta);
  if (m == Scalar(0)) throw std::invalid_argument("alg_ratio undefined at xi = eta = 0");
  if (alpha == Scalar(2)) return Scalar(1);
  if (xi == eta) return (alpha - Scalar(1)) / pow(Scalar(2), alpha - Scalar(2));
  const Scalar dv = signed_pow_diff(xi, eta, alpha - Scalar(1));
  return dv / (pow(m, alpha - Scalar(2)) * (xi - eta));
}

/// Extremes of alg_ratio over the lattice {k * range / res : |k| <= res}^2
/// without the origin; c1 is the maximum and c2 the minimum.
template <typename Scalar = double>
AlgConstants scan_alg_constants(Scalar alpha, int grid_resolution, Scalar range) {
  if (!(alpha > Scalar(1))) throw std::invalid_argument("alpha must exceed 1");
  if (grid_resolution < 1) throw std::invalid_argument("grid_resolution must be positive");
  if (!(range > Scalar(0))) throw std::invalid_argument("range must be positive");
  Scalar hi = -std::numeric_limits<Scalar>::infinity();
  Scalar lo = std::numeric_limits<Scalar>::infinity();
  const Scalar step = range / Scalar(grid_resolution);
  for (int i = -grid_resolution; i <= grid_resolution; ++i) {
    const Scalar xi = Scalar(i) * step;
    for (int j = -grid_resolution; j <= grid_resolution; ++j) {
      if (i == 0 && j == 0) continue;
      const Scalar r = alg_ratio(alpha, xi, Scalar(j) * step);
      hi = std::max(hi, r);
      lo = std::min(lo, r);
    }
  }
  // Round outward so the double constants still bound every scanned ratio.
  double c1 = static_cast<double>(hi);
  double c2 = static_cast<double>(lo);
  if (Scalar(c1) < hi) c1 = std::nextafter(c1, std::numeric_limits<double>::infinity());
  if (Scalar(c2) > lo) c2 = std::nextafter(c2, -std::numeric_limits<double>::infinity());
  return {static_cast<double>(alpha), c1, c2};
}

/// Scan used by the verification checks.
inline AlgConstants default_alg_constants(double alpha) {
  return scan_alg_constants<Real>(static_cast<Real>(alpha), 400, Real(1));
}

}  // namespace fracflow

#endif  // FRACFLOW_ENERGY_HPP

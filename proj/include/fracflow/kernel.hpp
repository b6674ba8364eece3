#ifndef FRACFLOW_KERNEL_HPP
#define FRACFLOW_KERNEL_HPP

#include "fracflow/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace fracflow {

/// Search direction of the per-step minimizer.
enum class SolverMethod {
  /// Armijo-damped Newton on a majorizing curvature (see RotheProblem::curvature).
  Newton,
  /// Alternating Barzilai-Borwein gradient steps with Armijo halving.
  BarzilaiBorwein,
};

/// Exponents, time step and solver controls of a flow.
struct FlowParams {
  double s = 0.5;
  double p = 2.0;
  double q = 1.0;
  double h = 0.01;
  double t_end = 0.5;
  double solver_tol = 1e-9;
  long solver_max_iter = 200000;
  SolverMethod solver = SolverMethod::Newton;

  void validate() const {
    if (!(s > 0.0 && s < 1.0)) throw std::invalid_argument("s must lie in (0,1)");
    if (!(p > 1.0) || !std::isfinite(p)) throw std::invalid_argument("p must exceed 1");
    if (!(q > 0.0) || !std::isfinite(q)) throw std::invalid_argument("q must be positive");
    if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("h must be positive");
    if (!(t_end >= h) || !std::isfinite(t_end)) throw std::invalid_argument("t_end must be at least h");
    if (!(solver_tol > 0.0) || !std::isfinite(solver_tol))
      throw std::invalid_argument("solver_tol must be positive");
    if (solver_max_iter <= 0) throw std::invalid_argument("solver_max_iter must be positive");
  }

  /// Number of time steps, ceil(t_end / h) with a guard against round-off.
  long steps() const {
    const double r = t_end / h;
    const double n = std::round(r);
    if (std::abs(r - n) <= 1e-9 * std::max(1.0, n)) return static_cast<long>(n);
    return static_cast<long>(std::ceil(r));
  }
};

/// Distance-based exterior tail of node i beyond the collar box:
/// vol * integral over the complement of |x_i - y|^{-(n+sp)} dy.
/// 1D is exact; 2D integrates over the complement of the inscribed disc of
/// radius r = distance to the nearest collar face, which overestimates.
template <typename Scalar>
Scalar tail_weight(const GridDomain<Scalar>& domain, Scalar s, Scalar p, Index node) {
  using std::pow;
  if (node < 0 || node >= domain.size()) throw std::out_of_range("node outside the collar box");
  const auto& x = domain.coord(node);
  const Scalar sp = s * p;
  if (domain.dim() == 1) {
    const Scalar dl = x[0] - domain.collar_min(0);
    const Scalar dr = domain.collar_max(0) - x[0];
    if (!(dl > 0) || !(dr > 0)) throw std::out_of_range("node outside the collar box");
    return domain.vol() * (pow(dl, -sp) + pow(dr, -sp)) / sp;
  }
  Scalar r = x[0] - domain.collar_min(0);
  for (int a = 0; a < 2; ++a) {
    r = std::min(r, x[a] - domain.collar_min(a));
    r = std::min(r, domain.collar_max(a) - x[a]);
  }
  if (!(r > 0)) throw std::out_of_range("node outside the collar box");
  return domain.vol() * Scalar(2) * std::numbers::pi_v<Scalar> * pow(r, -sp) / sp;
}

template <typename Scalar>
Scalar tail_weight(const GridDomain<Scalar>& domain, const FlowParams& params, Index node) {
  return tail_weight<Scalar>(domain, Scalar(params.s), Scalar(params.p), node);
}

/// Identifies what a kernel table was assembled for.
struct KernelKey {
  double s = 0;
  double p = 0;
  const void* grid = nullptr;

  bool operator==(const KernelKey&) const = default;
};

/// Dense pairwise weights w_ij = vol^2 |x_i - x_j|^{-(n+sp)} (zero diagonal)
/// and per-node tails, together with the interior reduction used by the
/// solver: W_II (interior block) and e_i = sum_{j exterior} w_ij + t_i.
template <typename Scalar>
class KernelTable {
 public:
  static constexpr Index kMaxNodes = 8192;

  KernelTable(DomainPtr<Scalar> domain, Scalar s, Scalar p) : domain_(std::move(domain)), s_(s), p_(p) {
    using std::pow;
    const auto& g = *domain_;
    const Index n = g.size();
    if (n > kMaxNodes)
      throw std::invalid_argument("grid has " + std::to_string(n) + " nodes; dense kernel limit is " +
                                  std::to_string(kMaxNodes));
    const Scalar expo = -(Scalar(g.dim()) + s * p);
    const Scalar vol2 = g.vol() * g.vol();
    weights_ = MatrixX<Scalar>::Zero(n, n);
    for (Index j = 0; j < n; ++j) {
      for (Index i = j + 1; i < n; ++i) {
        const Scalar w = vol2 * pow(g.distance(i, j), expo);
        weights_(i, j) = w;
        weights_(j, i) = w;
      }
    }
    tail_.resize(n);
    for (Index i = 0; i < n; ++i) tail_[i] = tail_weight<Scalar>(g, s, p, i);

    const auto& idx = g.interior_indices();
    const Index ni = static_cast<Index>(idx.size());
    interior_weights_.resize(ni, ni);
    exterior_weight_.resize(ni);
    for (Index b = 0; b < ni; ++b) {
      for (Index a = 0; a < ni; ++a) interior_weights_(a, b) = weights_(idx[a], idx[b]);
    }
    for (Index a = 0; a < ni; ++a) {
      const Index i = idx[a];
      Scalar e = 0;
      for (Index j = 0; j < n; ++j) {
        if (!g.is_interior(j)) e += weights_(i, j);
      }
      exterior_weight_[a] = e + tail_[i];
    }
  }

  const DomainPtr<Scalar>& domain() const { return domain_; }
  Scalar s() const { return s_; }
  Scalar p() const { return p_; }
  KernelKey key() const { return {static_cast<double>(s_), static_cast<double>(p_), domain_.get()}; }

  const MatrixX<Scalar>& weights() const { return weights_; }
  Scalar weight(Index i, Index j) const { return weights_(i, j); }
  const VectorX<Scalar>& tail() const { return tail_; }
  const MatrixX<Scalar>& interior_weights() const { return interior_weights_; }
  const VectorX<Scalar>& exterior_weight() const { return exterior_weight_; }

  /// Throws unless this table was built for the given grid and exponent p.
  void require_match(const GridDomain<Scalar>& domain, Scalar p) const {
    if (&domain != domain_.get() && !domain.same_geometry(*domain_))
      throw std::invalid_argument("kernel/params mismatch: kernel built for a different grid");
    if (p != p_) throw std::invalid_argument("kernel/params mismatch: kernel built for a different p");
  }

  void require_match(const GridDomain<Scalar>& domain, const FlowParams& params) const {
    require_match(domain, Scalar(params.p));
    if (Scalar(params.s) != s_) throw std::invalid_argument("kernel/params mismatch: kernel built for a different s");
  }

 private:
  DomainPtr<Scalar> domain_;
  Scalar s_;
  Scalar p_;
  MatrixX<Scalar> weights_;
  VectorX<Scalar> tail_;
  MatrixX<Scalar> interior_weights_;
  VectorX<Scalar> exterior_weight_;
};

template <typename Scalar>
KernelTable<Scalar> assemble_kernel(const DomainPtr<Scalar>& domain, const FlowParams& params) {
  params.validate();
  return KernelTable<Scalar>(domain, Scalar(params.s), Scalar(params.p));
}

}  // namespace fracflow

#endif  // FRACFLOW_KERNEL_HPP

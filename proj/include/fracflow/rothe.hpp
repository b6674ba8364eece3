#ifndef FRACFLOW_ROTHE_HPP
#define FRACFLOW_ROTHE_HPP

#include "fracflow/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracflow {

/// Raised when the per-step minimization exhausts its iteration budget.
class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(long iterations, double grad_norm, long step, const std::string& why = "iteration limit reached")
      : std::runtime_error("solver did not converge at step " + std::to_string(step) + " (" + why + ", " +
                           std::to_string(iterations) + " iterations, gradient inf-norm " +
                           std::to_string(grad_norm) + ")"),
        iterations_(iterations),
        grad_norm_(grad_norm),
        step_(step),
        why_(why) {}

  long iterations() const { return iterations_; }
  double grad_norm() const { return grad_norm_; }
  long step() const { return step_; }
  const std::string& reason() const { return why_; }

 private:
  long iterations_;
  double grad_norm_;
  long step_;
  std::string why_;
};

struct StepDiagnostics {
  long iterations = 0;
  double grad_norm = 0;
  double functional_value = 0;
  /// Largest F(x_{k+1}) - F(x_k) over accepted iterates; never positive.
  double max_increase = 0;
};

template <typename Scalar>
struct StepResult {
  GridFunction<Scalar> u;
  StepDiagnostics diag;
};

/// max(1, [u0]^p, ||u0||_{q+1}^{q+1}).
template <typename Scalar>
Scalar flow_scale(const GridFunction<Scalar>& u0, const KernelTable<Scalar>& kernel, const FlowParams& params) {
  const Scalar sp = gagliardo_seminorm_p(u0, kernel, Scalar(params.p));
  const Scalar lq = lq_power_integral(u0, Scalar(params.q) + Scalar(1));
  return std::max({Scalar(1), sp, lq});
}

namespace detail {

template <typename Scalar>
Scalar inf_norm(const VectorX<Scalar>& v) {
  return v.size() ? v.cwiseAbs().maxCoeff() : Scalar(0);
}

}  // namespace detail

/// Minimizes the per-step functional from the warm start u_prev. Every
/// iteration takes an Armijo-accepted step (halving, c = 1e-4) along either
/// a damped Newton direction on RotheProblem::curvature or a
/// Barzilai-Borwein scaled negative gradient, per params.solver. Stops once
/// the interior gradient inf-norm is at most solver_tol * scale.
template <typename Scalar>
StepResult<Scalar> minimize_step_detailed(const GridFunction<Scalar>& u_prev, const KernelTable<Scalar>& kernel,
                                          const FlowParams& params, Scalar scale) {
  using std::isfinite;
  params.validate();
  kernel.require_match(*u_prev.domain(), params);
  const Scalar tol = Scalar(params.solver_tol) * scale;
  const VectorX<Scalar> x0 = u_prev.interior_values();
  const RotheProblem<Scalar> prob(kernel, x0, params);
  StepDiagnostics diag;

  if (u_prev.is_zero()) {
    diag.functional_value = 0;
    return {GridFunction<Scalar>(u_prev.domain()), diag};
  }

  constexpr Scalar armijo_c = Scalar(1e-4);
  constexpr int max_halvings = 200;
  const bool newton = params.solver == SolverMethod::Newton;
  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  VectorX<Scalar> x = x0;
  VectorX<Scalar> g = prob.gradient(x);
  Scalar gnorm = detail::inf_norm(g);
  Scalar bb_step = Scalar(1) / std::max(Scalar(1), gnorm);
  long it = 0;
  VectorX<Scalar> dir(x.size());
  VectorX<Scalar> xn(x.size());
  VectorX<Scalar> gn(x.size());
  while (gnorm > tol) {
    if (it >= params.solver_max_iter) throw NonConvergence(it, static_cast<double>(gnorm), 0);
    ++it;
    Scalar t = 1;
    Scalar slope = 0;
    bool have_dir = false;
    if (newton) {
      MatrixX<Scalar> H = prob.curvature(x, Scalar(10) * eps * std::max(Scalar(1), detail::inf_norm(x)));
      const Scalar ridge = eps * std::max(Scalar(1), H.diagonal().cwiseAbs().maxCoeff());
      H.diagonal().array() += ridge;
      Eigen::LDLT<MatrixX<Scalar>> ldlt(H);
      if (ldlt.info() == Eigen::Success) {
        dir = -ldlt.solve(g);
        slope = g.dot(dir);
        have_dir = dir.allFinite() && slope < Scalar(0);
      }
    }
    if (!have_dir) {
      dir = -g;
      slope = -g.squaredNorm();
      t = bb_step;
    }
    Scalar df = 0;
    int halvings = 0;
    for (;;) {
      xn = x + t * dir;
      df = prob.value_difference(xn, x);
      if (isfinite(df) && df <= armijo_c * t * slope) break;
      t /= Scalar(2);
      if (++halvings > max_halvings || xn == x)
        throw NonConvergence(it, static_cast<double>(gnorm), 0, "line search stalled");
    }
    gn = prob.gradient(xn);
    const VectorX<Scalar> sv = xn - x;
    const VectorX<Scalar> yv = gn - g;
    const Scalar sy = sv.dot(yv);
    diag.max_increase = std::max(diag.max_increase, static_cast<double>(df));
    x.swap(xn);
    g.swap(gn);
    gnorm = detail::inf_norm(g);
    if (sy > Scalar(0) && isfinite(sy)) {
      bb_step = (it % 2 == 1) ? sv.squaredNorm() / sy : sy / yv.squaredNorm();
    } else {
      bb_step = t * Scalar(2);
    }
  }
  diag.iterations = it;
  diag.grad_norm = static_cast<double>(gnorm);
  diag.functional_value = static_cast<double>(prob.value(x));
  return {GridFunction<Scalar>::from_interior(u_prev.domain(), x), diag};
}

template <typename Scalar>
GridFunction<Scalar> minimize_step(const GridFunction<Scalar>& u_prev, const KernelTable<Scalar>& kernel,
                                   const FlowParams& params, Scalar scale) {
  return minimize_step_detailed(u_prev, kernel, params, scale).u;
}

/// Uses the scale of u_prev as if it started a run.
template <typename Scalar>
GridFunction<Scalar> minimize_step(const GridFunction<Scalar>& u_prev, const KernelTable<Scalar>& kernel,
                                   const FlowParams& params) {
  return minimize_step(u_prev, kernel, params, flow_scale(u_prev, kernel, params));
}

/// u_0 ... u_N with t_m = m h and per-step solver diagnostics
/// (diagnostics[0] belongs to the initial datum and is empty).
template <typename Scalar>
struct RotheTrajectory {
  FlowParams params;
  DomainPtr<Scalar> domain;
  Scalar scale = 1;
  std::vector<GridFunction<Scalar>> steps;
  std::vector<StepDiagnostics> diagnostics;

  long step_count() const { return static_cast<long>(steps.size()) - 1; }
  Scalar time(long m) const { return Scalar(m) * Scalar(params.h); }
  Scalar horizon() const { return time(step_count()); }
  const GridFunction<Scalar>& initial() const { return steps.front(); }
};

template <typename Scalar>
RotheTrajectory<Scalar> run_flow(const GridFunction<Scalar>& u0, const KernelTable<Scalar>& kernel,
                                 const FlowParams& params) {
  params.validate();
  kernel.require_match(*u0.domain(), params);
  RotheTrajectory<Scalar> traj;
  traj.params = params;
  traj.domain = u0.domain();
  traj.scale = flow_scale(u0, kernel, params);
  const long n = params.steps();
  traj.steps.reserve(static_cast<std::size_t>(n) + 1);
  traj.diagnostics.reserve(static_cast<std::size_t>(n) + 1);
  traj.steps.push_back(u0);
  traj.diagnostics.push_back({});
  for (long m = 1; m <= n; ++m) {
    try {
      auto r = minimize_step_detailed(traj.steps.back(), kernel, params, traj.scale);
      traj.steps.push_back(std::move(r.u));
      traj.diagnostics.push_back(r.diag);
    } catch (const NonConvergence& e) {
      throw NonConvergence(e.iterations(), e.grad_norm(), m, e.reason());
    }
  }
  return traj;
}

enum class ReconKind { BarU, ULin, BarV, VLin, BarW, WLin };

inline const char* recon_name(ReconKind k) {
  switch (k) {
    case ReconKind::BarU: return "bar_u";
    case ReconKind::ULin: return "u_lin";
    case ReconKind::BarV: return "bar_v";
    case ReconKind::VLin: return "v_lin";
    case ReconKind::BarW: return "bar_w";
    case ReconKind::WLin: return "w_lin";
  }
  return "?";
}

/// Nodal image of u under the power attached to a reconstruction kind:
/// identity, |u|^{q-1} u, or |u|^{(q-1)/2} u.
template <typename Scalar>
VectorX<Scalar> nodal_power(const VectorX<Scalar>& u, ReconKind kind, Scalar q) {
  Scalar e = 1;
  switch (kind) {
    case ReconKind::BarU:
    case ReconKind::ULin: return u;
    case ReconKind::BarV:
    case ReconKind::VLin: e = q; break;
    case ReconKind::BarW:
    case ReconKind::WLin: e = (q + Scalar(1)) / Scalar(2); break;
  }
  if (e == Scalar(1)) return u;
  VectorX<Scalar> out(u.size());
  for (Index i = 0; i < u.size(); ++i) out[i] = signed_pow(u[i], e);
  return out;
}

inline bool is_linear(ReconKind k) { return k == ReconKind::ULin || k == ReconKind::VLin || k == ReconKind::WLin; }

/// Locates t in the step grid: returns m with t in (t_{m-1}, t_m], or the
/// knot index with knot = true when t coincides with t_m up to round-off.
struct StepLocation {
  long m = 0;
  bool knot = false;
};

inline StepLocation locate_time(double t, double h, long n_steps) {
  if (t <= 0.0) return {0, true};
  const double r = t / h;
  const double k = std::round(r);
  if (std::abs(r - k) <= 1e-12 * std::max(1.0, k)) return {std::min(static_cast<long>(k), n_steps), true};
  return {std::min(static_cast<long>(std::ceil(r)), n_steps), false};
}

template <typename Scalar>
GridFunction<Scalar> reconstruct(const RotheTrajectory<Scalar>& traj, ReconKind kind, Scalar t) {
  using std::isfinite;
  if (!isfinite(t) || t < Scalar(0) || t > Scalar(traj.params.t_end))
    throw std::out_of_range("reconstruction time outside [0, t_end]");
  const Scalar q = Scalar(traj.params.q);
  const Scalar h = Scalar(traj.params.h);
  const auto loc = locate_time(static_cast<double>(t), traj.params.h, traj.step_count());
  const auto& dom = traj.domain;
  const auto& um = traj.steps[static_cast<std::size_t>(loc.m)].values();
  if (loc.knot || !is_linear(kind)) return GridFunction<Scalar>(dom, nodal_power(um, kind, q));
  const auto& ul = traj.steps[static_cast<std::size_t>(loc.m - 1)].values();
  const Scalar theta = (t - traj.time(loc.m - 1)) / h;
  const VectorX<Scalar> fm = nodal_power(um, kind, q);
  const VectorX<Scalar> fl = nodal_power(ul, kind, q);
  return GridFunction<Scalar>(dom, theta * fm + (Scalar(1) - theta) * fl);
}

enum class Sign { Plus, Minus };

/// Node values with no zero-exterior requirement (truncations equal 1/ell
/// outside the domain).
template <typename Scalar>
struct NodeValues {
  DomainPtr<Scalar> domain;
  VectorX<Scalar> values;
};

/// min{max{(u)_+-, 1/ell}, ell} on interior nodes, 1/ell on exterior nodes.
template <typename Scalar>
NodeValues<Scalar> truncate(const GridFunction<Scalar>& u, Sign sign, int ell) {
  if (ell < 2) throw std::invalid_argument("ell must be at least 2");
  const auto& g = *u.domain();
  const Scalar lo = Scalar(1) / Scalar(ell);
  const Scalar hi = Scalar(ell);
  VectorX<Scalar> out = VectorX<Scalar>::Constant(g.size(), lo);
  for (Index i : g.interior_indices()) {
    const Scalar part = sign == Sign::Plus ? std::max(u[i], Scalar(0)) : std::max(-u[i], Scalar(0));
    out[i] = std::min(std::max(part, lo), hi);
  }
  return {u.domain(), std::move(out)};
}

}  // namespace fracflow

#endif  // FRACFLOW_ROTHE_HPP

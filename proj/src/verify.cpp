#include "fracflow/verify.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

namespace fracflow {

namespace {

double to_d(Real x) { return static_cast<double>(x); }

std::string fmt(double x) { return format_number(x); }

/// [u_m]^p for every step.
std::vector<Real> seminorms(const Trajectory& traj, const Kernel& kernel) {
  std::vector<Real> out;
  out.reserve(traj.steps.size());
  for (const auto& u : traj.steps) out.push_back(gagliardo_seminorm_p(u, kernel, Real(traj.params.p)));
  return out;
}

Real power_weight(Real a, Real b, Real e) {
  // (|a| + |b|)^e with 0^e := 0 for negative e (the paired difference is 0 there).
  using std::abs;
  using std::pow;
  const Real m = abs(a) + abs(b);
  if (e == Real(0)) return Real(1);
  if (m == Real(0)) return Real(0);
  return pow(m, e);
}

/// sum_{m>=1} h * vol * sum_i phi(f_m,i, f_{m-1},i) for nodal images f_m.
template <typename F>
Real step_sum(const Trajectory& traj, ReconKind kind, F phi) {
  const Real h = Real(traj.params.h);
  const Real vol = traj.domain->vol();
  const Real q = Real(traj.params.q);
  const auto& idx = traj.domain->interior_indices();
  Real total = 0;
  VectorX<Real> prev = nodal_power(traj.steps[0].values(), kind, q);
  for (std::size_t m = 1; m < traj.steps.size(); ++m) {
    VectorX<Real> cur = nodal_power(traj.steps[m].values(), kind, q);
    Real acc = 0;
    for (Index i : idx) acc += phi(cur[i], prev[i], traj.steps[m][i], traj.steps[m - 1][i]);
    total += h * vol * acc;
    prev.swap(cur);
  }
  return total;
}

Real interior_linf(const Field& u) { return u.linf(); }

}  // namespace

SobolevExponents sobolev_exponents(int n, double s, double p) {
  SobolevExponents e;
  if (s * p < n) e.p_star = n * p / (n - s * p);
  if (s * p < n + 1) e.p_star_bar = (n + 1) * p / (n + 1 - s * p);
  return e;
}

double unit_ball_volume(int n) {
  if (n == 1) return 2.0;
  if (n == 2) return std::numbers::pi;
  throw std::invalid_argument("unit_ball_volume: dimension must be 1 or 2");
}

double check_tolerance(const Trajectory& traj) { return 10.0 * traj.params.solver_tol * to_d(traj.scale); }

ReportEntry make_entry(std::string name, std::string paper_ref, double lhs, double rhs,
                       std::optional<double> constant, double tol, std::string constant_expr) {
  ReportEntry e;
  e.name = std::move(name);
  e.paper_ref = std::move(paper_ref);
  e.lhs = lhs;
  e.rhs = rhs;
  e.constant_used = constant;
  e.margin = rhs - lhs;
  e.tol = tol;
  e.pass = lhs <= rhs + tol;
  e.constant_expr = std::move(constant_expr);
  return e;
}

ReportEntry skipped_entry(std::string name, std::string paper_ref, std::string reason) {
  ReportEntry e;
  e.name = std::move(name);
  e.paper_ref = std::move(paper_ref);
  e.skipped = true;
  e.pass = true;
  e.note = std::move(reason);
  return e;
}

AlgConstants alg_constants(double alpha) {
  static std::mutex mu;
  static std::map<double, AlgConstants> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(alpha);
  if (it != cache.end()) return it->second;
  const AlgConstants c = default_alg_constants(alpha);
  cache.emplace(alpha, c);
  return c;
}

void require_converged(const Trajectory& traj) {
  if (traj.steps.empty()) throw std::invalid_argument("trajectory has no steps");
  const double tol = traj.params.solver_tol * to_d(traj.scale);
  for (std::size_t m = 1; m < traj.diagnostics.size(); ++m) {
    if (!(traj.diagnostics[m].grad_norm <= tol))
      throw std::invalid_argument("trajectory step " + std::to_string(m) + " did not meet the stopping rule");
  }
}

std::vector<ReportEntry> check_energy_estimates(const Trajectory& traj, const Kernel& kernel) {
  require_converged(traj);
  const auto& P = traj.params;
  const Real q = Real(P.q);
  const Real p = Real(P.p);
  const Real h = Real(P.h);
  const double tol = check_tolerance(traj);
  const auto S = seminorms(traj, kernel);
  const Real l0 = lq_power_integral(traj.initial(), q + Real(1));
  const Real e0 = S[0] / (Real(2) * p);

  Real max_l = 0;
  Real time_sum = 0;
  Real max_jump = -std::numeric_limits<Real>::infinity();
  for (std::size_t m = 1; m < traj.steps.size(); ++m) {
    max_l = std::max(max_l, lq_power_integral(traj.steps[m], q + Real(1)));
    time_sum += h * S[m];
    max_jump = std::max(max_jump, S[m] - S[m - 1]);
  }
  const AlgConstants c = alg_constants(P.q + 1.0);
  const Real diss = step_sum(traj, ReconKind::BarU, [&](Real, Real, Real a, Real b) {
    const Real d = (a - b) / h;
    return power_weight(a, b, q - Real(1)) * d * d;
  });

  std::vector<ReportEntry> out;
  out.push_back(make_entry("energy.E1_lq_bound", "energy estimate: sup_t ||u_h(t)||_{q+1}^{q+1} <= ||u_0||_{q+1}^{q+1}",
                           to_d(max_l), to_d(l0), std::nullopt, tol));
  const double k2 = 2.0 * P.q / (P.q + 1.0);
  out.push_back(make_entry("energy.E2_seminorm_time_integral",
                           "energy estimate: sum_m h [u_m]^p <= 2q/(q+1) ||u_0||_{q+1}^{q+1}", to_d(time_sum),
                           k2 * to_d(l0), k2, tol, "2q/(q+1)"));
  out.push_back(make_entry("energy.E3_dissipation",
                           "energy estimate: C2(q+1) sum_m h int (|u_m|+|u_{m-1}|)^{q-1} |du/h|^2 <= [u_0]^p/(2p)",
                           c.c2 * to_d(diss), to_d(e0), c.c2, tol, "C2(alpha=q+1)=" + fmt(c.c2)));
  out.push_back(make_entry("energy.E4_seminorm_monotone", "energy estimate: [u_m]^p <= [u_{m-1}]^p for every step",
                           to_d(max_jump), 0.0, std::nullopt, tol));
  return out;
}

std::vector<ReportEntry> check_time_derivative_bounds(const Trajectory& traj, const Kernel& kernel) {
  require_converged(traj);
  const auto& P = traj.params;
  const Real q = Real(P.q);
  const Real h = Real(P.h);
  const double tol = check_tolerance(traj);
  const Real s0 = gagliardo_seminorm_p(traj.initial(), kernel, Real(P.p));
  const double e0 = to_d(s0 / (Real(2) * Real(P.p)));
  const double alpha_w = (P.q + 3.0) / 2.0;
  const AlgConstants cw = alg_constants(alpha_w);
  const AlgConstants cq = alg_constants(P.q + 1.0);

  std::vector<ReportEntry> out;
  const Real w_l2 = step_sum(traj, ReconKind::BarW, [&](Real a, Real b, Real, Real) {
    const Real d = (a - b) / h;
    return d * d;
  });
  const double k1 = cw.c1 * cw.c1 / cq.c2;
  out.push_back(make_entry("time_derivative.T1_w_l2",
                           "time-derivative estimate: ||d_t w_h||_{L2(Omega_T)}^2 <= C1((q+3)/2)^2/C2(q+1) [u_0]^p/(2p)",
                           to_d(w_l2), k1 * e0, k1, tol,
                           "C1(alpha=(q+3)/2)^2/C2(alpha=q+1) with C1=" + fmt(cw.c1) + ", C2=" + fmt(cq.c2)));

  if (P.q < 1.0) {
    out.push_back(skipped_entry("time_derivative.T2_v_l1", "time-derivative estimate: ||d_t v_h||_{L1(Omega_T)}",
                                "requires q >= 1"));
    out.push_back(skipped_entry("time_derivative.T3_v_l2", "bounded solutions: ||d_t v_h||_{L2(Omega_T)}",
                                "requires q >= 1"));
    return out;
  }
  const Real T = traj.horizon();
  const Real omega_t = Real(traj.domain->interior_count()) * traj.domain->vol() * T;
  const Real l0 = lq_power_integral(traj.initial(), q + Real(1));
  const Real v_l1 = step_sum(traj, ReconKind::BarV, [&](Real a, Real b, Real, Real) {
    using std::abs;
    return abs((a - b) / h);
  });
  using std::pow;
  using std::sqrt;
  const Real holder = pow(omega_t, Real(1) / (q + Real(1))) *
                      pow(pow(Real(2), q + Real(1)) * T * l0, (q - Real(1)) / (Real(2) * (q + Real(1))));
  const Real rhs2 = Real(cq.c1) * holder * sqrt(Real(e0) / Real(cq.c2));
  out.push_back(make_entry(
      "time_derivative.T2_v_l1",
      "time-derivative estimate: ||d_t v_h||_{L1(Omega_T)} <= C1(q+1) |Omega_T|^{1/(q+1)} (2^{q+1} T ||u_0||^{q+1})^{(q-1)/(2(q+1))} ([u_0]^p/(2p C2(q+1)))^{1/2}",
      to_d(v_l1), to_d(rhs2), cq.c1, tol,
      "C1(alpha=q+1)=" + fmt(cq.c1) + ", C2(alpha=q+1)=" + fmt(cq.c2) + ", |Omega_T|=" + fmt(to_d(omega_t)) +
          ", T=" + fmt(to_d(T))));

  Real M = 0;
  for (const auto& u : traj.steps) M = std::max(M, interior_linf(u));
  const Real v_l2 = step_sum(traj, ReconKind::BarV, [&](Real a, Real b, Real, Real) {
    const Real d = (a - b) / h;
    return d * d;
  });
  const Real k3 = Real(cq.c1) * Real(cq.c1) * pow(Real(2) * M, q - Real(1)) / Real(cq.c2);
  out.push_back(make_entry("time_derivative.T3_v_l2",
                           "bounded solutions: ||d_t v_h||_{L2(Omega_T)}^2 <= C1(q+1)^2 (2M)^{q-1}/C2(q+1) [u_0]^p/(2p)",
                           to_d(v_l2), to_d(k3) * e0, to_d(k3), tol,
                           "C1(alpha=q+1)^2 (2M)^{q-1}/C2(alpha=q+1) with M=max_m ||u_m||_inf=" + fmt(to_d(M))));
  return out;
}

ReportEntry check_max_principle(const Trajectory& traj) {
  const double tol = check_tolerance(traj);
  Real m = 0;
  for (std::size_t k = 1; k < traj.steps.size(); ++k) m = std::max(m, traj.steps[k].linf());
  return make_entry("max_principle", "boundedness: sup_t ||u_h(t)||_inf <= ||u_0||_inf", to_d(m),
                    to_d(traj.initial().linf()), std::nullopt, tol);
}

std::vector<ReportEntry> check_truncation_energy(const Trajectory& traj, const Kernel& kernel, int ell) {
  if (ell < 2) throw std::invalid_argument("ell must be at least 2");
  require_converged(traj);
  const auto& P = traj.params;
  const double tol = check_tolerance(traj);
  const Real h = Real(P.h);
  const Real q = Real(P.q);
  const Real vol = traj.domain->vol();
  const double e0 = to_d(gagliardo_seminorm_p(traj.initial(), kernel, Real(P.p)) / (Real(2) * Real(P.p)));
  const AlgConstants cq = alg_constants(P.q + 1.0);
  const std::string suffix = ".ell=" + std::to_string(ell);
  std::vector<ReportEntry> out;
  for (const Sign sign : {Sign::Plus, Sign::Minus}) {
    const std::string name = std::string("truncation.") + (sign == Sign::Plus ? "plus" : "minus") + suffix;
    if (P.q < 1.0 && P.h > 1.0) {
      out.push_back(skipped_entry(name, "truncation energy (0<q<1)", "requires h <= 1"));
      continue;
    }
    Real lhs = 0;
    auto prev = truncate(traj.steps[0], sign, ell);
    for (std::size_t m = 1; m < traj.steps.size(); ++m) {
      auto cur = truncate(traj.steps[m], sign, ell);
      Real acc = 0;
      for (Index i = 0; i < cur.values.size(); ++i) {
        using std::abs;
        using std::pow;
        const Real d = (cur.values[i] - prev.values[i]) / h;
        if (P.q >= 1.0) {
          acc += d * d;
        } else {
          acc += std::min(pow(Real(ell), q - Real(1)) * d * d, pow(abs(d), q + Real(1)));
        }
      }
      lhs += h * vol * acc;
      prev = std::move(cur);
    }
    if (P.q >= 1.0) {
      const double k = std::pow(static_cast<double>(ell), P.q - 1.0) / cq.c2;
      out.push_back(make_entry(name, "truncation energy (q>=1): ||d_t (u_h)_+-^(ell)||_{L2}^2 <= ell^{q-1}/C2(q+1) [u_0]^p/(2p)",
                               to_d(lhs), k * e0, k, tol, "ell^{q-1}/C2(alpha=q+1), C2=" + fmt(cq.c2)));
    } else {
      const double k = std::pow(3.0, 1.0 - P.q) / cq.c2;
      out.push_back(make_entry(
          name,
          "truncation energy (0<q<1): sum_m h int min{ell^{q-1}|D|^2, |D|^{q+1}} <= 3^{1-q}/C2(q+1) [u_0]^p/(2p), D = d_t (u_h)_+-^(ell)",
          to_d(lhs), k * e0, k, tol, "3^{1-q}/C2(alpha=q+1), C2=" + fmt(cq.c2)));
    }
  }
  return out;
}

namespace {

const char* kPoincareRef = "fractional Poincare: ||u||_p^p <= (sp/(n alpha_n)) (2 diam)^{sp} [u]^p";

double poincare_constant(const Domain& g, const FlowParams& P) {
  const double sp = P.s * P.p;
  const double diam = to_d(g.omega_diameter());
  return sp / (g.dim() * unit_ball_volume(g.dim())) * std::pow(2.0 * diam, sp);
}

}  // namespace

ReportEntry check_poincare(const Field& u, const Kernel& kernel, const FlowParams& params) {
  if (u.is_zero()) return skipped_entry("poincare", kPoincareRef, "u is identically zero");
  const double k = poincare_constant(*u.domain(), params);
  const Real lhs = lq_power_integral(u, Real(params.p));
  const Real sp = gagliardo_seminorm_p(u, kernel, Real(params.p));
  return make_entry("poincare", kPoincareRef, to_d(lhs), k * to_d(sp), k, 0.0, "(sp/(n alpha_n)) (2 diam)^{sp}");
}

ReportEntry check_poincare(const Trajectory& traj, const Kernel& kernel) {
  const double tol = check_tolerance(traj);
  std::optional<ReportEntry> worst;
  double worst_ratio = -1;
  long worst_m = -1;
  for (std::size_t m = 0; m < traj.steps.size(); ++m) {
    if (traj.steps[m].is_zero()) continue;
    ReportEntry e = check_poincare(traj.steps[m], kernel, traj.params);
    const double ratio = e.lhs / e.rhs;
    if (ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = e;
      worst_m = static_cast<long>(m);
    }
  }
  if (!worst) return skipped_entry("poincare", kPoincareRef, "every step is identically zero");
  ReportEntry e = make_entry(worst->name, worst->paper_ref, worst->lhs, worst->rhs, worst->constant_used, tol,
                             worst->constant_expr);
  e.note = "worst step m=" + std::to_string(worst_m);
  return e;
}

ReportEntry check_weak_residual(const Trajectory& traj, const Kernel& kernel) {
  const auto& P = traj.params;
  const Real q = Real(P.q);
  const Real coef = traj.domain->vol() / Real(P.h);
  Real worst = 0;
  for (std::size_t m = 1; m < traj.steps.size(); ++m) {
    const auto& um = traj.steps[m];
    const auto g = apply_frac_p_laplacian(um, kernel, Real(P.p));
    const VectorX<Real> vm = nodal_power(um.values(), ReconKind::BarV, q);
    const VectorX<Real> vl = nodal_power(traj.steps[m - 1].values(), ReconKind::BarV, q);
    for (Index i : traj.domain->interior_indices()) {
      using std::abs;
      worst = std::max(worst, abs(coef * (vm[i] - vl[i]) + g[i]));
    }
  }
  return make_entry("weak_residual",
                    "weak form of the scheme tested with interior basis vectors: max |(vol/h) dv + (-Delta)_p^s u_m| <= solver_tol*scale",
                    to_d(worst), P.solver_tol * to_d(traj.scale), std::nullopt, check_tolerance(traj));
}

SpaceTimeField sample_reconstruction(const Trajectory& traj, ReconKind kind, int t_grid) {
  if (t_grid < 2) throw std::invalid_argument("t_grid must be at least 2");
  const auto& g = *traj.domain;
  const double K = static_cast<double>(g.interior_count());
  if (K * K * double(t_grid) * double(t_grid) > kSpaceTimeBudget)
    throw std::invalid_argument("space-time grid too large: interior_count^2 * t_grid^2 exceeds 1e8");
  SpaceTimeField f;
  f.domain = traj.domain;
  f.t_end = traj.params.t_end;
  f.t_grid = t_grid;
  const auto& idx = g.interior_indices();
  f.values.resize(static_cast<Index>(idx.size()), t_grid);
  const Real T = Real(traj.params.t_end);
  const Real delta = T / Real(t_grid);
  for (int a = 0; a < t_grid; ++a) {
    const Field u = reconstruct(traj, kind, (Real(a) + Real(0.5)) * delta);
    for (std::size_t k = 0; k < idx.size(); ++k) f.values(static_cast<Index>(k), a) = u[idx[k]];
  }
  if (!is_linear(kind)) {
    f.dt_l1 = std::numeric_limits<Real>::quiet_NaN();
    return f;
  }
  const Real q = Real(traj.params.q);
  const Real h = Real(traj.params.h);
  Real total = 0;
  for (std::size_t m = 1; m < traj.steps.size(); ++m) {
    const Real t0 = traj.time(static_cast<long>(m) - 1);
    const Real t1 = std::min(traj.time(static_cast<long>(m)), T);
    if (t1 <= t0) break;
    const VectorX<Real> a = nodal_power(traj.steps[m].values(), kind, q);
    const VectorX<Real> b = nodal_power(traj.steps[m - 1].values(), kind, q);
    Real acc = 0;
    for (Index i : idx) {
      using std::abs;
      acc += abs(a[i] - b[i]);
    }
    total += (t1 - t0) / h * g.vol() * acc;
  }
  f.dt_l1 = total;
  return f;
}

Real spacetime_seminorm_w1(const SpaceTimeField& f, double s_prime) {
  if (!(s_prime > 0.0 && s_prime < 1.0)) throw std::invalid_argument("s_prime must lie in (0,1)");
  const auto& g = *f.domain;
  const auto& idx = g.interior_indices();
  const Index K = static_cast<Index>(idx.size());
  const int nt = f.t_grid;
  if (double(K) * double(K) * double(nt) * double(nt) > kSpaceTimeBudget)
    throw std::invalid_argument("space-time grid too large: interior_count^2 * t_grid^2 exceeds 1e8");
  const Real delta = Real(f.t_end) / Real(nt);
  const Real expo = -(Real(g.dim()) + Real(1) + Real(s_prime)) / Real(2);
  // kernel[(i*K + j)*nt + lag] = (|x_i - x_j|^2 + (lag delta)^2)^{-(n+1+s')/2}
  std::vector<Real> ker(static_cast<std::size_t>(K * K * nt));
  for (Index i = 0; i < K; ++i) {
    for (Index j = 0; j < K; ++j) {
      const Real d = g.distance(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      for (int l = 0; l < nt; ++l) {
        const Real r2 = d * d + Real(l) * delta * Real(l) * delta;
        using std::pow;
        ker[static_cast<std::size_t>((i * K + j) * nt + l)] = (r2 == Real(0)) ? Real(0) : pow(r2, expo);
      }
    }
  }
  Real sum = 0;
  for (Index i = 0; i < K; ++i) {
    for (Index j = 0; j < K; ++j) {
      const Real* kij = &ker[static_cast<std::size_t>((i * K + j) * nt)];
      for (int a = 0; a < nt; ++a) {
        const Real fia = f.values(i, a);
        for (int b = 0; b < nt; ++b) {
          using std::abs;
          sum += abs(fia - f.values(j, b)) * kij[a > b ? a - b : b - a];
        }
      }
    }
  }
  const Real vol = g.vol();
  return vol * vol * delta * delta * sum;
}

Real spacetime_seminorm_w1(const Trajectory& traj, ReconKind kind, double s_prime, int t_grid) {
  return spacetime_seminorm_w1(sample_reconstruction(traj, kind, t_grid), s_prime);
}

Real spatial_seminorm_w1(const Domain& domain, const VectorX<Real>& g, double s) {
  const auto& idx = domain.interior_indices();
  const Index K = static_cast<Index>(idx.size());
  if (g.size() != K) throw std::invalid_argument("spatial_seminorm_w1 expects interior values");
  const Real expo = -(Real(domain.dim()) + Real(s));
  Real sum = 0;
  for (Index i = 0; i < K; ++i) {
    for (Index j = i + 1; j < K; ++j) {
      using std::abs;
      using std::pow;
      const Real r = domain.distance(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      sum += abs(g[i] - g[j]) * pow(r, expo);
    }
  }
  const Real vol = domain.vol();
  return Real(2) * vol * vol * sum;
}

SpaceTimeConstants spacetime_constants(int n, double diam, double t_end, double s_prime, double s_bar) {
  if (!(0.0 < s_prime && s_prime < s_bar && s_bar < 1.0))
    throw std::invalid_argument("space-time exponents must satisfy 0 < s_prime < s_bar < 1");
  const double gap = s_bar - s_prime;
  SpaceTimeConstants c;
  c.c_one = n * unit_ball_volume(n) * std::pow(diam, gap) / gap * (2.0 * std::pow(t_end, 1.0 - s_bar) / (1.0 - s_bar));
  c.c_two = 2.0 * std::pow(t_end, gap) / gap;
  return c;
}

ReportEntry check_spacetime_sobolev(const SpaceTimeField& f, double s_prime, double s_bar, double tol) {
  using std::isfinite;
  const auto& g = *f.domain;
  const SpaceTimeConstants c =
      spacetime_constants(g.dim(), to_d(g.omega_diameter()), f.t_end, s_prime, s_bar);
  if (!isfinite(f.dt_l1)) throw std::invalid_argument("space-time check needs a time-differentiable field");
  const Real lhs = spacetime_seminorm_w1(f, s_prime);
  const Real delta = Real(f.t_end) / Real(f.t_grid);
  Real slices = 0;
  for (int a = 0; a < f.t_grid; ++a) slices += delta * spatial_seminorm_w1(g, f.values.col(a), s_bar);
  const Real rhs = Real(c.c_one) * f.dt_l1 + Real(c.c_two) * slices;
  ReportEntry e = make_entry("spacetime_sobolev",
                             "space-time fractional Sobolev: [f]_{W^{s',1}(K_T)} <= C_I ||d_t f||_{L1(K_T)} + C_II int_0^T [f(t)]_{W^{s_bar,1}(K)} dt",
                             to_d(lhs), to_d(rhs), c.c_one, tol,
                             "C_I = n alpha_n diam^{s_bar-s'}/(s_bar-s') * 2 T^{1-s_bar}/(1-s_bar) = " + fmt(c.c_one) +
                                 "; C_II = 2 T^{s_bar-s'}/(s_bar-s') = " + fmt(c.c_two));
  std::ostringstream note;
  note << "dt_l1=" << fmt(to_d(f.dt_l1)) << ", slice_integral=" << fmt(to_d(slices)) << ", t_grid=" << f.t_grid;
  e.note = note.str();
  return e;
}

ReportEntry check_spacetime_sobolev(const Trajectory& traj, double s_prime, double s_bar, int t_grid) {
  return check_spacetime_sobolev(sample_reconstruction(traj, ReconKind::ULin, t_grid), s_prime, s_bar,
                                 check_tolerance(traj));
}

double measure_sobolev_constant(const Kernel& kernel, const FlowParams& params, std::uint64_t seed) {
  const auto& g = *kernel.domain();
  const auto ex = sobolev_exponents(g.dim(), params.s, params.p);
  if (!ex.p_star) return std::numeric_limits<double>::quiet_NaN();
  const Real pstar = Real(*ex.p_star);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  const auto& idx = g.interior_indices();
  constexpr int kProbes = 64;
  constexpr int kModes = 6;
  double best = 0;
  for (int k = 0; k < kProbes; ++k) {
    VectorX<Real> x(static_cast<Index>(idx.size()));
    if (k % 2 == 0) {
      double c[kModes][kModes];
      for (auto& row : c)
        for (auto& v : row) v = normal(rng);
      for (std::size_t a = 0; a < idx.size(); ++a) {
        const auto& pt = g.coord(idx[a]);
        const double xi = to_d((pt[0] - g.omega_min(0)) / (g.omega_max(0) - g.omega_min(0)));
        const double eta = g.dim() == 2 ? to_d((pt[1] - g.omega_min(1)) / (g.omega_max(1) - g.omega_min(1))) : 0.5;
        double v = 0;
        const int ly = g.dim() == 2 ? kModes : 1;
        for (int i = 0; i < kModes; ++i) {
          for (int j = 0; j < ly; ++j) {
            const double sy = g.dim() == 2 ? std::sin((j + 1) * std::numbers::pi * eta) : 1.0;
            v += c[i][j] / ((i + 1) * (j + 1)) * std::sin((i + 1) * std::numbers::pi * xi) * sy;
          }
        }
        x[static_cast<Index>(a)] = Real(v);
      }
    } else {
      for (Index a = 0; a < x.size(); ++a) x[a] = Real(uniform(rng));
    }
    const Field phi = Field::from_interior(kernel.domain(), x);
    const Real sp = gagliardo_seminorm_p(phi, kernel, Real(params.p));
    if (!(sp > Real(0))) continue;
    using std::pow;
    const Real num = pow(lq_power_integral(phi, pstar), Real(1) / pstar);
    best = std::max(best, to_d(num / pow(sp, Real(1) / Real(params.p))));
  }
  return best;
}

ReportEntry chebyshev_level_sets(const Field& u, int ell, const FlowParams& params, const Kernel& kernel,
                                 double seminorm_p_bound, double c_sob, double tol) {
  const std::string name = "chebyshev.ell=" + std::to_string(ell);
  const char* ref = "Chebyshev estimate: |{(u)_+ >= ell}| <= (C_sob [u_0])^{p*} / ell^{p*}";
  const auto& g = *u.domain();
  const auto ex = sobolev_exponents(g.dim(), params.s, params.p);
  if (!ex.p_star) return skipped_entry(name, ref, "p_star undefined");
  kernel.require_match(g, Real(params.p));
  long count = 0;
  for (Index i : g.interior_indices()) {
    if (u[i] >= Real(ell)) ++count;
  }
  const double lhs = to_d(g.vol()) * static_cast<double>(count);
  const double ps = *ex.p_star;
  const double rhs = std::pow(c_sob * std::pow(seminorm_p_bound, 1.0 / params.p), ps) / std::pow(double(ell), ps);
  return make_entry(name, ref, lhs, rhs, c_sob, tol, "C_sob measured over 64 seeded probes; p*=" + fmt(ps));
}

ReportEntry check_chebyshev(const Trajectory& traj, const Kernel& kernel, int ell, double c_sob) {
  const double s0 = to_d(gagliardo_seminorm_p(traj.initial(), kernel, Real(traj.params.p)));
  const double tol = check_tolerance(traj);
  std::optional<ReportEntry> worst;
  for (const auto& u : traj.steps) {
    ReportEntry e = chebyshev_level_sets(u, ell, traj.params, kernel, s0, c_sob, tol);
    if (e.skipped) return e;
    if (!worst || e.lhs > worst->lhs) worst = e;
  }
  return *worst;
}

namespace {

/// Linear-in-time interpolant of the nodal parts (u_m)_+- at time t.
VectorX<Real> interpolated_part(const Trajectory& traj, Sign sign, Real t) {
  const auto loc = locate_time(to_d(t), traj.params.h, traj.step_count());
  auto part = [&](long m) {
    const auto& v = traj.steps[static_cast<std::size_t>(m)].values();
    return sign == Sign::Plus ? VectorX<Real>(v.cwiseMax(Real(0))) : VectorX<Real>((-v).cwiseMax(Real(0)));
  };
  if (loc.knot) return part(loc.m);
  const Real theta = (t - traj.time(loc.m - 1)) / Real(traj.params.h);
  return theta * part(loc.m) + (Real(1) - theta) * part(loc.m - 1);
}

}  // namespace

CauchyStudy cauchy_refinement_study(const Field& u0, const Kernel& kernel, const FlowParams& params, int levels,
                                    double gamma, double s_prime) {
  params.validate();
  if (levels < 3) throw std::invalid_argument("levels must be at least 3");
  if (!(gamma >= 1.0)) throw std::invalid_argument("gamma must be at least 1");
  if (!(s_prime > 0.0 && s_prime < params.s))
    throw std::invalid_argument("s_prime must lie in (0, s)");
  const auto& g = *u0.domain();
  const int n = g.dim();
  double gamma_max = (n + 1.0) / (n + 1.0 - s_prime);
  const auto ex = sobolev_exponents(n, params.s, params.p);
  if (ex.p_star) gamma_max = std::min(gamma_max, *ex.p_star);
  if (!(gamma < gamma_max))
    throw std::invalid_argument("gamma must be below min{p_star, (n+1)/(n+1-s_prime)} = " + fmt(gamma_max));

  CauchyStudy study;
  std::vector<Trajectory> runs;
  for (int k = 0; k < levels; ++k) {
    FlowParams pk = params;
    pk.h = params.h / std::ldexp(1.0, k);
    runs.push_back(run_flow(u0, kernel, pk));
    study.h.push_back(pk.h);
    long its = 0;
    for (const auto& d : runs.back().diagnostics) its += d.iterations;
    study.solver_iterations.push_back(its);
  }
  const long J = runs.back().step_count();
  const Real T = Real(params.t_end);
  const Real delta = T / Real(J);
  const Real vol = g.vol();
  const Real gam = Real(gamma);
  for (const Sign sign : {Sign::Plus, Sign::Minus}) {
    auto& d = sign == Sign::Plus ? study.d_plus : study.d_minus;
    for (int k = 0; k + 1 < levels; ++k) {
      Real acc = 0;
      for (long j = 0; j < J; ++j) {
        const Real t = (Real(j) + Real(0.5)) * delta;
        const VectorX<Real> a = interpolated_part(runs[static_cast<std::size_t>(k)], sign, t);
        const VectorX<Real> b = interpolated_part(runs[static_cast<std::size_t>(k) + 1], sign, t);
        for (Index i : g.interior_indices()) {
          using std::abs;
          using std::pow;
          acc += delta * vol * pow(abs(a[i] - b[i]), gam);
        }
      }
      using std::pow;
      d.push_back(to_d(pow(acc, Real(1) / gam)));
    }
    const char* tag = sign == Sign::Plus ? "plus" : "minus";
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
      ReportEntry e;
      e.name = std::string("cauchy.") + tag + ".d" + std::to_string(k + 1) + "_lt_d" + std::to_string(k);
      e.paper_ref = "Cauchy property of the linear interpolants of (u_m)_+- in L^gamma(K_T) under h -> h/2";
      e.lhs = d[k + 1];
      e.rhs = d[k];
      e.margin = d[k] - d[k + 1];
      e.strict = true;
      e.pass = d[k + 1] < d[k] || (d[k + 1] == 0.0 && d[k] == 0.0);
      e.note = "gamma=" + fmt(gamma);
      study.entries.push_back(e);
    }
  }
  return study;
}

std::vector<std::pair<double, double>> initial_trace_trend(const Trajectory& traj, const Kernel& kernel) {
  std::vector<std::pair<double, double>> out;
  const long n = traj.step_count();
  for (long m = 1; m <= n; m *= 2) {
    if (to_d(traj.time(m)) > traj.params.t_end * (1 + 1e-12)) break;
    const Field diff = traj.steps[static_cast<std::size_t>(m)] - traj.initial();
    out.emplace_back(to_d(traj.time(m)), to_d(gagliardo_seminorm_p(diff, kernel, Real(traj.params.p))));
  }
  return out;
}

}  // namespace fracflow

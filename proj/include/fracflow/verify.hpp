#ifndef FRACFLOW_VERIFY_HPP
#define FRACFLOW_VERIFY_HPP

#include "fracflow/report.hpp"
#include "fracflow/rothe.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace fracflow {

using Domain = GridDomain<Real>;
using DomainRef = DomainPtr<Real>;
using Field = GridFunction<Real>;
using Kernel = KernelTable<Real>;
using Trajectory = RotheTrajectory<Real>;

/// Critical exponents np/(n - sp) and (n+1)p/(n+1 - sp), each defined only
/// when its denominator is positive.
struct SobolevExponents {
  std::optional<double> p_star;
  std::optional<double> p_star_bar;
};

SobolevExponents sobolev_exponents(int n, double s, double p);

/// Unit-ball volume alpha_n for n = 1, 2.
double unit_ball_volume(int n);

/// 10 * solver_tol * scale.
double check_tolerance(const Trajectory& traj);

/// Builds an entry whose pass flag is lhs <= rhs + tol.
ReportEntry make_entry(std::string name, std::string paper_ref, double lhs, double rhs,
                       std::optional<double> constant, double tol, std::string constant_expr = {});

/// Entry recorded as skipped (passes vacuously) with the given reason.
ReportEntry skipped_entry(std::string name, std::string paper_ref, std::string reason);

/// Algebraic constants from the default scan, memoized per alpha.
AlgConstants alg_constants(double alpha);

/// Throws std::invalid_argument unless every step met the stopping rule.
void require_converged(const Trajectory& traj);

/// Lq-power bound, time-integrated seminorm bound, weighted dissipation
/// bound and stepwise seminorm monotonicity.
std::vector<ReportEntry> check_energy_estimates(const Trajectory& traj, const Kernel& kernel);

/// L2 bound of the time derivative of w = |u|^{(q-1)/2} u, and for q >= 1 the
/// L1 and L2 bounds of the time derivative of v = |u|^{q-1} u.
std::vector<ReportEntry> check_time_derivative_bounds(const Trajectory& traj, const Kernel& kernel);

/// max_m ||u_m||_inf <= ||u_0||_inf.
ReportEntry check_max_principle(const Trajectory& traj);

/// Time-derivative energy of the truncations (u)_+- clamped to [1/ell, ell],
/// one entry per sign.
std::vector<ReportEntry> check_truncation_energy(const Trajectory& traj, const Kernel& kernel, int ell);

/// ||u||_p^p <= (sp / (n alpha_n)) (2 diam)^{sp} [u]^p.
ReportEntry check_poincare(const Field& u, const Kernel& kernel, const FlowParams& params);

/// Poincare check on every nonzero step; reports the step with the largest lhs/rhs.
ReportEntry check_poincare(const Trajectory& traj, const Kernel& kernel);

/// max over steps and interior basis vectors of the discrete weak-form residual.
ReportEntry check_weak_residual(const Trajectory& traj, const Kernel& kernel);

/// Samples of a function on the interior nodes times the midpoint time grid
/// tau_a = (a + 1/2) T / t_grid, together with ||d_t f||_{L1(K x (0,T))}.
struct SpaceTimeField {
  DomainRef domain;
  double t_end = 0;
  int t_grid = 0;
  /// Row i: interior node i (domain order); column a: time tau_a.
  MatrixX<Real> values;
  Real dt_l1 = 0;
};

/// Upper bound on interior_count^2 * t_grid^2 for the quadruple sums.
inline constexpr double kSpaceTimeBudget = 1e8;

SpaceTimeField sample_reconstruction(const Trajectory& traj, ReconKind kind, int t_grid);

/// Midpoint-rule W^{s',1} seminorm of f over K x (0,T), diagonal excluded:
/// sum over ordered (i,a) != (j,b) of vol^2 delta^2 |f_ia - f_jb| / r^{n+1+s'}.
Real spacetime_seminorm_w1(const SpaceTimeField& f, double s_prime);
Real spacetime_seminorm_w1(const Trajectory& traj, ReconKind kind, double s_prime, int t_grid);

/// Midpoint-rule W^{s,1}(K) seminorm of interior values g.
Real spatial_seminorm_w1(const Domain& domain, const VectorX<Real>& g, double s);

struct SpaceTimeConstants {
  double c_one = 0;
  double c_two = 0;
};

SpaceTimeConstants spacetime_constants(int n, double diam, double t_end, double s_prime, double s_bar);

ReportEntry check_spacetime_sobolev(const SpaceTimeField& f, double s_prime, double s_bar, double tol = 0);
ReportEntry check_spacetime_sobolev(const Trajectory& traj, double s_prime, double s_bar, int t_grid);

/// max ||phi||_{p*} / [phi] over 64 seeded probes (smooth mode sums and
/// nodal noise) on the kernel's grid.
double measure_sobolev_constant(const Kernel& kernel, const FlowParams& params, std::uint64_t seed = 20240611);

/// vol * #{(u)_+ >= ell} <= (C_sob [u_0])^{p*} / ell^{p*}, where
/// seminorm_p_bound is [u_0]^p. Skipped when sp >= n.
ReportEntry chebyshev_level_sets(const Field& u, int ell, const FlowParams& params, const Kernel& kernel,
                                 double seminorm_p_bound, double c_sob, double tol = 0);
ReportEntry check_chebyshev(const Trajectory& traj, const Kernel& kernel, int ell, double c_sob);

struct CauchyStudy {
  std::vector<double> h;
  std::vector<double> d_plus;
  std::vector<double> d_minus;
  std::vector<long> solver_iterations;
  std::vector<ReportEntry> entries;
};

/// Runs the flow at h, h/2, ..., h/2^{levels-1} and measures
/// d_k = ||(u_{h_k})_+- - (u_{h_{k+1}})_+-||_{L^gamma(K_T)} for the linear
/// interpolants of the nodal parts, sampled at the finest midpoints.
CauchyStudy cauchy_refinement_study(const Field& u0, const Kernel& kernel, const FlowParams& params, int levels,
                                    double gamma, double s_prime);

/// [u_lin(t) - u_0]^p at t = h, 2h, 4h, ... up to t_end.
std::vector<std::pair<double, double>> initial_trace_trend(const Trajectory& traj, const Kernel& kernel);

}  // namespace fracflow

#endif  // FRACFLOW_VERIFY_HPP

// Acceptance harness: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include "fracflow/commands.hpp"

#include "oracles.hpp"

#include <quadmath.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <sys/wait.h>

using namespace fracflow;
namespace fs = std::filesystem;

namespace {

using L = long double;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* id, const char* title, const Outcome& o) {
  std::cout << id << ' ' << (o.pass ? "PASS" : "FAIL") << "  " << title << " -- " << o.detail << std::endl;
  if (!o.pass) ++failures;
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3g", x);
  return buf;
}

FlowParams flow(double s, double p, double q, double h = 0.01, double t_end = 0.5) {
  FlowParams f;
  f.s = s;
  f.p = p;
  f.q = q;
  f.h = h;
  f.t_end = t_end;
  return f;
}

struct SweepRun {
  double s, p, q;
  std::string preset;
  std::vector<ReportEntry> energy, time_derivative, truncation;
  ReportEntry max_principle, residual;
  double truncation_rhs_spread = 0;  // q = 1 only
};

struct Sweep {
  std::vector<SweepRun> runs;
  std::vector<std::string> errors;
  double seconds = 0;
};

/// 3 x 3 x 3 x 3 sweep at n_cells = 32 and N = 50 steps.
Sweep run_sweep() {
  Sweep sw;
  const auto t0 = Clock::now();
  const auto g = build_grid<Real>(1, Real(0), Real(1), 32, Real(2));
  for (const double s : {0.25, 0.5, 0.75}) {
    for (const double p : {1.5, 2.0, 3.0}) {
      const FlowParams base = flow(s, p, 1.0);
      const Kernel k = assemble_kernel(g, base);
      for (const double q : {0.5, 1.0, 2.0}) {
        const FlowParams fp = flow(s, p, q);
        for (const char* name : {"bump", "step", "random"}) {
          const Preset pr = std::string(name) == "bump"   ? Preset::bump()
                            : std::string(name) == "step" ? Preset::step()
                                                          : Preset::random(1);
          SweepRun r{s, p, q, name, {}, {}, {}, {}, {}, 0};
          try {
            const Trajectory traj = run_flow(eval_preset(g, pr, Real(1)), k, fp);
            r.energy = check_energy_estimates(traj, k);
            r.time_derivative = check_time_derivative_bounds(traj, k);
            r.max_principle = check_max_principle(traj);
            r.residual = check_weak_residual(traj, k);
            double lo = 1e300, hi = -1e300;
            for (int ell : {2, 8, 32}) {
              for (const auto& e : check_truncation_energy(traj, k, ell)) {
                r.truncation.push_back(e);
                lo = std::min(lo, e.rhs);
                hi = std::max(hi, e.rhs);
              }
            }
            if (q == 1.0) r.truncation_rhs_spread = (hi - lo) / hi;
            sw.runs.push_back(std::move(r));
          } catch (const std::exception& e) {
            sw.errors.push_back(std::string("s=") + fmt(s) + " p=" + fmt(p) + " q=" + fmt(q) + " " + name + ": " +
                                e.what());
          }
        }
      }
    }
  }
  sw.seconds = seconds_since(t0);
  return sw;
}

std::string run_tag(const SweepRun& r) {
  return "s=" + fmt(r.s) + " p=" + fmt(r.p) + " q=" + fmt(r.q) + " " + r.preset;
}

Outcome ac1(const Sweep& sw) {
  Outcome o;
  if (!sw.errors.empty()) return {false, sw.errors.front()};
  int entries = 0;
  double min_margin = 1e300;
  for (const auto& r : sw.runs) {
    if (r.energy.size() != 4) return {false, run_tag(r) + ": expected four energy entries"};
    for (const auto& e : r.energy) {
      ++entries;
      min_margin = std::min(min_margin, e.margin);
      if (!e.pass) return {false, run_tag(r) + " " + e.name + " lhs " + fmt(e.lhs) + " rhs " + fmt(e.rhs)};
    }
  }
  o.pass = sw.runs.size() == 81 && sw.seconds < 300.0;
  o.detail = std::to_string(sw.runs.size()) + " runs, " + std::to_string(entries) + " entries pass, min margin " +
             fmt(min_margin) + ", sweep " + fmt(sw.seconds) + " s (limit 300 s)";
  return o;
}

Outcome ac2(const Sweep& sw) {
  if (!sw.errors.empty()) return {false, "sweep incomplete"};
  double worst = -1e300;
  for (const auto& r : sw.runs) {
    const auto& e = r.max_principle;
    worst = std::max(worst, e.lhs - e.rhs);
    if (!(e.lhs <= e.rhs + e.tol)) return {false, run_tag(r) + " max " + fmt(e.lhs) + " > " + fmt(e.rhs)};
  }
  return {sw.runs.size() == 81, std::to_string(sw.runs.size()) + " runs, max(max_m |u_m| - |u_0|) = " + fmt(worst)};
}

Outcome ac3(const Sweep& sw) {
  if (!sw.errors.empty()) return {false, "sweep incomplete"};
  int entries = 0;
  for (const auto& r : sw.runs) {
    const std::size_t expected = r.q >= 1.0 ? 3 : 1;
    std::size_t active = 0;
    for (const auto& e : r.time_derivative) {
      if (e.skipped) continue;
      ++active;
      ++entries;
      if (!e.pass) return {false, run_tag(r) + " " + e.name + " lhs " + fmt(e.lhs) + " rhs " + fmt(e.rhs)};
      if (!e.constant_used || e.constant_expr.empty()) return {false, run_tag(r) + " " + e.name + " lacks constants"};
    }
    if (active != expected) return {false, run_tag(r) + ": unexpected number of time-derivative entries"};
  }
  return {true, std::to_string(entries) + " entries pass, each records its constant expression"};
}

Outcome ac4(const Sweep& sw) {
  if (!sw.errors.empty()) return {false, "sweep incomplete"};
  double worst = 0;
  for (const auto& r : sw.runs) {
    const auto& e = r.residual;
    worst = std::max(worst, e.lhs / e.rhs);
    if (!(e.lhs <= e.rhs)) return {false, run_tag(r) + " residual " + fmt(e.lhs) + " > " + fmt(e.rhs)};
  }
  return {true, "max residual / (1e-9 scale) = " + fmt(worst) + " over " + std::to_string(sw.runs.size()) + " runs"};
}

Outcome ac5(const Sweep& sw) {
  if (!sw.errors.empty()) return {false, "sweep incomplete"};
  int entries = 0;
  double spread = 0;
  for (const auto& r : sw.runs) {
    for (const auto& e : r.truncation) {
      ++entries;
      if (e.skipped || !e.pass) return {false, run_tag(r) + " " + e.name + " did not pass"};
    }
    if (r.q == 1.0) spread = std::max(spread, r.truncation_rhs_spread);
  }
  const bool ok = spread <= 1e-12;
  return {ok, std::to_string(entries) + " entries pass at ell in {2,8,32}; q=1 rhs relative spread " + fmt(spread)};
}

Outcome ac6() {
  const auto g = build_grid<Real>(1, Real(0), Real(1), 16, Real(2));
  const FlowParams fp = flow(0.5, 2.0, 1.0, 0.02, 0.02);
  const Kernel k = assemble_kernel(g, fp);
  MatrixX<L> M = oracle::dense_p2_operator(k);
  const L coef = g->vol() / L(fp.h);
  M.diagonal().array() += coef;
  const Eigen::PartialPivLU<MatrixX<L>> lu(M);
  std::mt19937_64 rng(606);
  double worst = 0;
  for (int t = 0; t < 20; ++t) {
    const VectorX<Real> prev = oracle::random_interior(*g, rng);
    const VectorX<L> ref = lu.solve(VectorX<L>(coef * prev));
    const VectorX<Real> got = minimize_step(GridFunction<Real>::from_interior(g, prev), k, fp).interior_values();
    worst = std::max(worst, static_cast<double>((got - ref).norm() / ref.norm()));
  }
  return {worst <= 1e-8, "16 interior nodes, 20 random u_prev, max relative error " + fmt(worst)};
}

Outcome ac7() {
  const auto g = build_grid<Real>(1, Real(0), Real(1), 12, Real(2));
  std::mt19937_64 rng(707);
  double worst = 0;
  int redrawn = 0;
  for (const double p : {1.5, 2.0, 3.0}) {
    for (const double q : {0.5, 1.0, 2.0}) {
      const FlowParams fp = flow(0.5, p, q);
      const Kernel k = assemble_kernel(g, fp);
      const auto u_prev = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
      // central differences need the stencil clear of the kinks of |x|^r, r < 2
      auto w = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
      while (oracle::kink_distance(w.interior_values()) < 1e3L * 1e-6L * flow_scale(w, k, fp)) {
        w = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
        ++redrawn;
      }
      const VectorX<Real> gr = rothe_gradient(w, u_prev, k, fp).values();
      const VectorX<Real> ge = apply_frac_p_laplacian(w, k, Real(p)).values();
      for (int t = 0; t < 50; ++t) {
        const auto d = GridFunction<Real>::from_interior(g, oracle::random_smooth(*g, rng));
        const Real eps = Real(1e-6) * flow_scale(w, k, fp);
        const auto wp = w + eps * d;
        const auto wm = w - eps * d;
        const Real fr = (rothe_functional(wp, u_prev, k, fp) - rothe_functional(wm, u_prev, k, fp)) / (2 * eps);
        const Real fe = (energy_functional(wp, k, Real(p)) - energy_functional(wm, k, Real(p))) / (2 * eps);
        const Real ar = gr.dot(d.values());
        const Real ae = ge.dot(d.values());
        worst = std::max(worst, static_cast<double>(std::abs((fr - ar) / ar)));
        worst = std::max(worst, static_cast<double>(std::abs((fe - ae) / ae)));
      }
    }
  }
  return {worst <= 1e-6, "9 (p,q) pairs x 50 smooth directions x 2 gradients, step 1e-6 scale, max relative error " +
                            fmt(worst) + " (" + std::to_string(redrawn) + " base points redrawn near kinks)"};
}

/// V(x) - V(y) with V(x) = |x|^{a-2} x in quad precision.
__float128 v_diff_quad(L x, L y, L a) {
  const __float128 e = __float128(a) - 1;
  auto V = [&](L z) {
    const __float128 m = powq(fabsq(__float128(z)), e);
    return z < 0 ? -m : m;
  };
  return V(x) - V(y);
}

Outcome ac8() {
  const AlgConstants two = scan_alg_constants<Real>(Real(2), 400, Real(1));
  if (two.c1 != 1.0 || two.c2 != 1.0) return {false, "alpha = 2 constants are not exactly 1"};
  std::mt19937_64 rng(808);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> decade(-3.0, 3.0);
  long violations = 0;
  long pairs = 0;
  std::string consts;
  for (const double a : {1.5, 2.5, 4.0}) {
    const AlgConstants c = default_alg_constants(a);
    consts += " alpha=" + fmt(a) + ": C1=" + fmt(c.c1) + ", C2=" + fmt(c.c2) + ";";
    for (long t = 0; t < 100000; ++t) {
      const L scale = std::pow(10.0L, L(decade(rng)));
      const L xi = scale * L(unit(rng));
      L eta = scale * L(unit(rng));
      if (t % 4 == 1) eta = xi * (1 + L(1e-6) * L(unit(rng)));
      if (t % 4 == 2) eta = -xi * (1 + L(1e-3) * L(unit(rng)));
      if (xi == eta) continue;
      ++pairs;
      const __float128 dv = v_diff_quad(xi, eta, L(a));
      const __float128 diff = __float128(xi) - __float128(eta);
      const __float128 wgt = powq(fabsq(__float128(xi)) + fabsq(__float128(eta)), __float128(a) - 2);
      if (fabsq(dv) > __float128(c.c1) * wgt * fabsq(diff)) ++violations;
      if (dv * diff < __float128(c.c2) * wgt * diff * diff) ++violations;
    }
  }
  return {violations == 0, "alpha=2 gives C1=C2=1 exactly; " + std::to_string(pairs) +
                               " random pairs checked in quad precision, " + std::to_string(violations) +
                               " violations;" + consts};
}

Outcome ac9() {
  long checked = 0;
  long violations = 0;
  double worst = 0;
  std::mt19937_64 rng(909);
  for (const int dim : {1, 2}) {
    const auto g = build_grid<Real>(dim, Real(0), Real(1), dim == 1 ? 32 : 8, Real(2));
    for (const double s : {0.25, 0.5, 0.75}) {
      for (const double p : {1.5, 2.0, 3.0}) {
        const FlowParams fp = flow(s, p, 1.0);
        const Kernel k = assemble_kernel(g, fp);
        for (int t = 0; t < 100; ++t) {
          const auto u = GridFunction<Real>::from_interior(g, oracle::random_interior(*g, rng));
          const auto e = check_poincare(u, k, fp);
          ++checked;
          if (!e.pass) ++violations;
          worst = std::max(worst, e.lhs / e.rhs);
        }
      }
    }
  }
  return {violations == 0, std::to_string(checked) + " random functions on a 1D and a 2D grid (9 (s,p) each), " +
                               std::to_string(violations) + " violations, worst lhs/rhs " + fmt(worst)};
}

Outcome ac10() {
  // computed trajectories on 8 nodes x 8 times
  const auto g = build_grid<Real>(1, Real(0), Real(1), 8, Real(2));
  int trajectories = 0;
  double worst = 0;
  for (const double s : {0.25, 0.5, 0.75}) {
    for (const double p : {1.5, 2.0, 3.0}) {
      for (const double q : {0.5, 1.0, 2.0}) {
        const FlowParams fp = flow(s, p, q);
        const Kernel k = assemble_kernel(g, fp);
        const Trajectory traj = run_flow(eval_preset(g, Preset::bump(), Real(1)), k, fp);
        const auto e = check_spacetime_sobolev(traj, 0.25, 0.4, 8);
        ++trajectories;
        worst = std::max(worst, e.lhs / e.rhs);
        if (!e.pass) return {false, "trajectory s=" + fmt(s) + " p=" + fmt(p) + " q=" + fmt(q) + " fails"};
      }
    }
  }
  // synthetic space-time functions
  RunConfig cfg;
  cfg.n_cells = 8;
  int synthetic = 0;
  for (const auto& e : inequality_suite(cfg, 1, 1010).entries) {
    if (e.name.rfind("spacetime_sobolev.synthetic.", 0) != 0) continue;
    ++synthetic;
    worst = std::max(worst, e.lhs / e.rhs);
    if (!e.pass) return {false, e.name + " fails"};
  }
  // tiny case against the 4-loop oracle
  const FlowParams fp = flow(0.5, 2.0, 1.0, 0.05, 0.4);
  const Kernel k = assemble_kernel(g, fp);
  const Trajectory traj = run_flow(eval_preset(g, Preset::bump(), Real(1)), k, fp);
  const SpaceTimeField f = sample_reconstruction(traj, ReconKind::ULin, 8);
  const L fast = spacetime_seminorm_w1(f, 0.25);
  const L ref = oracle::spacetime_four_loop(f, 0.25L);
  const double rel = static_cast<double>(std::abs(fast - ref) / ref);
  const bool ok = synthetic == 20 && rel <= 1e-12;
  return {ok, std::to_string(trajectories) + " trajectories and " + std::to_string(synthetic) +
                  " synthetic functions pass (worst lhs/rhs " + fmt(worst) + "); 4-loop oracle relative gap " +
                  fmt(rel)};
}

Outcome ac11() {
  const auto t0 = Clock::now();
  RunConfig cfg;
  cfg.flow.h = 0.04;
  const auto g = build_domain(cfg);
  const Kernel k = assemble_kernel(g, cfg.flow);
  const CauchyStudy st = cauchy_refinement_study(build_initial(cfg, g), k, cfg.flow, 3, 1.0, cfg.s_prime);
  const double secs = seconds_since(t0);
  const bool ok = st.d_plus.size() == 2 && st.d_plus[0] > st.d_plus[1] && st.d_plus[1] > 0 && secs < 120.0;
  return {ok, "n_cells=" + std::to_string(cfg.n_cells) + ", h in {0.04,0.02,0.01}, gamma=1: d0=" + fmt(st.d_plus[0]) +
                  " d1=" + fmt(st.d_plus[1]) + ", " + fmt(secs) + " s (limit 120 s)"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome ac12() {
  const fs::path root = fs::temp_directory_path() / "fracflow_acceptance_ac12";
  fs::remove_all(root);
  fs::create_directories(root);
  std::string outputs[2][2];
  for (int r = 0; r < 2; ++r) {
    const fs::path cfg = root / ("run" + std::to_string(r) + ".cfg");
    const fs::path out = root / ("out" + std::to_string(r));
    std::ofstream(cfg) << "deterministic_reduction = true\noutput_dir = " << out.string() << "\n";
    const std::string cmd = std::string(FRACFLOW_CLI) + " run --config " + cfg.string() + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) return {false, "run exited abnormally"};
    outputs[r][0] = slurp(out / "trace.csv");
    outputs[r][1] = slurp(out / "report.json");
  }
  const bool ok = !outputs[0][0].empty() && outputs[0][0] == outputs[1][0] && outputs[0][1] == outputs[1][1];
  return {ok, "default config run twice: trace.csv " + std::to_string(outputs[0][0].size()) + " bytes, report.json " +
                  std::to_string(outputs[0][1].size()) + " bytes, " + (ok ? "byte-identical" : "different")};
}

}  // namespace

int main() {
  auto guarded = [](const char* id, const char* title, const std::function<Outcome()>& f) {
    try {
      report(id, title, f());
    } catch (const std::exception& e) {
      report(id, title, {false, std::string("exception: ") + e.what()});
    }
  };
  const Sweep sw = run_sweep();
  guarded("AC1", "energy estimates on the 81-run sweep", [&] { return ac1(sw); });
  guarded("AC2", "maximum principle on the sweep", [&] { return ac2(sw); });
  guarded("AC3", "time-derivative bounds on the sweep", [&] { return ac3(sw); });
  guarded("AC4", "weak-form residual on the sweep", [&] { return ac4(sw); });
  guarded("AC5", "truncation energy at ell in {2,8,32}", [&] { return ac5(sw); });
  guarded("AC6", "linear p=2 q=1 dense-solve oracle", ac6);
  guarded("AC7", "gradients vs central differences", ac7);
  guarded("AC8", "algebraic inequality constants", ac8);
  guarded("AC9", "fractional Poincare with explicit constant", ac9);
  guarded("AC10", "space-time Sobolev inequality", ac10);
  guarded("AC11", "Cauchy refinement study", ac11);
  guarded("AC12", "byte-identical repeated runs", ac12);
  std::cout << (failures == 0 ? "all acceptance criteria pass" : std::to_string(failures) + " criteria failed")
            << std::endl;
  return failures == 0 ? 0 : 1;
}

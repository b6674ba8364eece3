#include "fracflow/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

namespace fracflow {

namespace {

double to_d(Real x) { return static_cast<double>(x); }

std::string num(double x) { return format_number(x); }

const char* solver_name(SolverMethod m) { return m == SolverMethod::Newton ? "newton" : "bb"; }

std::filesystem::path prepare_output(const RunConfig& cfg) {
  std::filesystem::path dir(cfg.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw ConfigError("output_dir '" + cfg.output_dir + "' is not writable");
  return dir;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
}

void write_report(const std::filesystem::path& dir, const VerificationReport& report) {
  write_file(dir / "report.json", report.to_json());
}

void print_failures(const VerificationReport& report, std::ostream& err) {
  for (const auto& e : report.entries) {
    if (!e.pass) err << "check failed: " << e.name << " (lhs " << num(e.lhs) << ", rhs " << num(e.rhs) << ")\n";
  }
}

Preset make_preset(const RunConfig& cfg) {
  if (cfg.preset == "bump") return Preset::bump();
  if (cfg.preset == "step") return Preset::step();
  if (cfg.preset == "random") return Preset::random(cfg.seed);
  return Preset::csv(cfg.csv_path);
}

/// Runs f, mapping module errors to exit codes.
template <typename F>
int guarded(std::ostream& err, F f) {
  try {
    return f();
  } catch (const NonConvergence& e) {
    err << "error: " << e.what() << '\n';
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace

DomainRef build_domain(const RunConfig& cfg) {
  std::vector<Real> lo(static_cast<std::size_t>(cfg.dim), Real(cfg.omega_min));
  std::vector<Real> hi(static_cast<std::size_t>(cfg.dim), Real(cfg.omega_max));
  return build_grid<Real>(cfg.dim, lo, hi, cfg.n_cells, Real(cfg.collar_factor));
}

Field build_initial(const RunConfig& cfg, const DomainRef& domain) {
  return eval_preset(domain, make_preset(cfg), Real(cfg.amplitude));
}

// The gradient tail term t_i |u_i|^{p-2} u_i is the exact derivative of
// [u]^p / (2p) with tail 2 sum t_i |u_i|^p; a factor 2 t_i would not be.
constexpr const char* kTailFactorWarning =
    "energy convention: E = [u]^p/(2p) with tail term 2*sum t_i|u_i|^p; the gradient tail coefficient is t_i "
    "(exact first variation), so <grad E(u), u> = [u]^p/2";

JsonValue::Object config_meta(const RunConfig& cfg) {
  JsonValue::Object params{
      {"s", cfg.flow.s},
      {"p", cfg.flow.p},
      {"q", cfg.flow.q},
      {"h", cfg.flow.h},
      {"t_end", cfg.flow.t_end},
      {"steps", cfg.flow.steps()},
      {"solver", solver_name(cfg.flow.solver)},
      {"solver_tol", cfg.flow.solver_tol},
      {"solver_max_iter", cfg.flow.solver_max_iter},
  };
  JsonValue::Object grid{
      {"dim", cfg.dim},
      {"omega", JsonValue::number_array({cfg.omega_min, cfg.omega_max})},
      {"n_cells", cfg.n_cells},
      {"collar_factor", cfg.collar_factor},
  };
  JsonValue::Object initial{
      {"preset", cfg.preset},
      {"amplitude", cfg.amplitude},
      {"seed", static_cast<unsigned long long>(cfg.seed)},
  };
  if (cfg.preset == "csv") initial.emplace_back("csv_path", cfg.csv_path);
  return {
      {"params", JsonValue(std::move(params))},
      {"grid", JsonValue(std::move(grid))},
      {"initial", JsonValue(std::move(initial))},
      {"s_prime", cfg.s_prime},
      {"s_bar", cfg.s_bar},
      {"t_grid", cfg.t_grid},
      {"deterministic_reduction", cfg.deterministic_reduction},
      {"warnings", JsonValue::Array{JsonValue(kTailFactorWarning)}},
  };
}

VerificationReport verify_trajectory(const Trajectory& traj, const Kernel& kernel, const RunConfig& cfg) {
  VerificationReport report;
  const auto& c = cfg.checks;
  if (c.energy) report.add(check_energy_estimates(traj, kernel));
  if (c.time_derivative) report.add(check_time_derivative_bounds(traj, kernel));
  if (c.max_principle) report.add(check_max_principle(traj));
  if (c.truncation) {
    for (int ell : cfg.truncation_ells) report.add(check_truncation_energy(traj, kernel, ell));
  }
  if (c.poincare) report.add(check_poincare(traj, kernel));
  if (c.weak_residual) report.add(check_weak_residual(traj, kernel));
  if (c.spacetime) report.add(check_spacetime_sobolev(traj, cfg.s_prime, cfg.s_bar, cfg.t_grid));
  if (c.chebyshev) {
    const double c_sob = measure_sobolev_constant(kernel, traj.params);
    report.add(check_chebyshev(traj, kernel, cfg.chebyshev_ell, c_sob));
  }
  report.sort_entries();
  return report;
}

void write_trace(std::ostream& os, const Trajectory& traj, const Kernel& kernel) {
  const Real p = Real(traj.params.p);
  const Real q = Real(traj.params.q);
  const Real h = Real(traj.params.h);
  const Real vol = traj.domain->vol();
  os << "step,time,lq1_pow,seminorm_p,linf,dissipation_step,solver_iters,grad_norm\n";
  for (std::size_t m = 0; m < traj.steps.size(); ++m) {
    const auto& u = traj.steps[m];
    Real diss = 0;
    if (m > 0) {
      const auto& ul = traj.steps[m - 1];
      for (Index i : traj.domain->interior_indices()) {
        using std::abs;
        using std::pow;
        const Real a = abs(u[i]) + abs(ul[i]);
        if (a == Real(0)) continue;
        const Real d = (u[i] - ul[i]) / h;
        diss += (q == Real(1) ? Real(1) : pow(a, q - Real(1))) * d * d;
      }
      diss *= h * vol;
    }
    const auto& dg = traj.diagnostics[m];
    os << m << ',' << num(to_d(traj.time(static_cast<long>(m)))) << ',' << num(to_d(lq_power_integral(u, q + Real(1))))
       << ',' << num(to_d(gagliardo_seminorm_p(u, kernel, p))) << ',' << num(to_d(u.linf())) << ','
       << num(to_d(diss)) << ',' << dg.iterations << ',' << num(dg.grad_norm) << '\n';
  }
}

int cmd_run(const RunConfig& cfg, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto dir = prepare_output(cfg);
    const DomainRef domain = build_domain(cfg);
    const Field u0 = build_initial(cfg, domain);
    const Kernel kernel = assemble_kernel(domain, cfg.flow);
    const Trajectory traj = run_flow(u0, kernel, cfg.flow);

    std::ostringstream trace;
    write_trace(trace, traj, kernel);
    write_file(dir / "trace.csv", trace.str());

    VerificationReport report = verify_trajectory(traj, kernel, cfg);
    report.meta = config_meta(cfg);
    report.meta.insert(report.meta.begin(), {"command", "run"});
    report.meta.emplace_back("scale", to_d(traj.scale));
    report.meta.emplace_back("tol_check", check_tolerance(traj));
    long iters = 0;
    for (const auto& d : traj.diagnostics) iters += d.iterations;
    report.meta.emplace_back("solver_iterations", iters);
    JsonValue::Array trend;
    for (const auto& [t, v] : initial_trace_trend(traj, kernel))
      trend.emplace_back(JsonValue::number_array({t, v}));
    report.meta.emplace_back("initial_trace", JsonValue(std::move(trend)));
    write_report(dir, report);
    if (!report.all_pass()) {
      print_failures(report, err);
      return int(kExitCheckFailure);
    }
    return int(kExitOk);
  });
}

int cmd_converge(const RunConfig& cfg, int levels, double gamma, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto dir = prepare_output(cfg);
    const DomainRef domain = build_domain(cfg);
    const Field u0 = build_initial(cfg, domain);
    const Kernel kernel = assemble_kernel(domain, cfg.flow);
    const CauchyStudy study = cauchy_refinement_study(u0, kernel, cfg.flow, levels, gamma, cfg.s_prime);

    std::ostringstream table;
    table << "k,h_k,h_k1,d_plus,d_minus\n";
    for (std::size_t k = 0; k < study.d_plus.size(); ++k) {
      table << k << ',' << num(study.h[k]) << ',' << num(study.h[k + 1]) << ',' << num(study.d_plus[k]) << ','
            << num(study.d_minus[k]) << '\n';
    }
    write_file(dir / "d_table.csv", table.str());

    VerificationReport report;
    report.add(study.entries);
    report.sort_entries();
    report.meta = config_meta(cfg);
    report.meta.insert(report.meta.begin(), {"command", "converge"});
    report.meta.emplace_back("levels", levels);
    report.meta.emplace_back("gamma", gamma);
    report.meta.emplace_back("h_levels", JsonValue::number_array(study.h));
    report.meta.emplace_back("d_plus", JsonValue::number_array(study.d_plus));
    report.meta.emplace_back("d_minus", JsonValue::number_array(study.d_minus));
    JsonValue::Array its;
    for (long n : study.solver_iterations) its.emplace_back(n);
    report.meta.emplace_back("solver_iterations", JsonValue(std::move(its)));
    write_report(dir, report);
    if (!report.all_pass()) {
      print_failures(report, err);
      return int(kExitCheckFailure);
    }
    return int(kExitOk);
  });
}

namespace {

std::string alpha_tag(double alpha) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", alpha);
  return buf;
}

void add_alg_entries(VerificationReport& report, double alpha, long trials, std::mt19937_64& rng) {
  const AlgConstants c = alg_constants(alpha);
  const std::string base = "alg.alpha=" + alpha_tag(alpha);
  const char* ref = "algebraic inequalities for V(x) = |x|^{alpha-2} x with scanned C1, C2";
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> decade(-3.0, 3.0);
  std::uniform_int_distribution<int> shape(0, 3);
  using L = long double;
  L hi = -std::numeric_limits<L>::infinity();
  L lo = std::numeric_limits<L>::infinity();
  long upper_violations = 0;
  long lower_violations = 0;
  for (long k = 0; k < trials; ++k) {
    const L scale = std::pow(10.0L, L(decade(rng)));
    const L xi = scale * L(unit(rng));
    L eta = scale * L(unit(rng));
    switch (shape(rng)) {
      case 1: eta = xi * (L(1) + L(1e-6) * L(unit(rng))); break;  // near the diagonal
      case 2: eta = -xi * (L(1) + L(1e-3) * L(unit(rng))); break;  // near antipodal
      default: break;
    }
    if (xi == eta) continue;
    using std::abs;
    using std::pow;
    const L dv = signed_pow_diff(xi, eta, L(alpha) - L(1));
    const L wgt = pow(abs(xi) + abs(eta), L(alpha) - L(2));
    const L diff = xi - eta;
    if (abs(dv) > L(c.c1) * wgt * abs(diff)) ++upper_violations;
    if (dv * diff < L(c.c2) * wgt * diff * diff) ++lower_violations;
    const L r = dv / (wgt * diff);
    hi = std::max(hi, r);
    lo = std::min(lo, r);
  }
  ReportEntry up = make_entry(base + ".upper", ref, static_cast<double>(upper_violations), 0.0, c.c1, 0.0,
                              "C1 from the ratio scan (res 400)");
  up.note = "largest sampled ratio " + num(static_cast<double>(hi)) + " over " + std::to_string(trials) + " pairs";
  ReportEntry dn = make_entry(base + ".lower", ref, static_cast<double>(lower_violations), 0.0, c.c2, 0.0,
                              "C2 from the ratio scan (res 400)");
  dn.note = "smallest sampled ratio " + num(static_cast<double>(lo)) + " over " + std::to_string(trials) + " pairs";
  report.add(up);
  report.add(dn);
  if (alpha == 2.0) {
    report.add(make_entry(base + ".unit_constants", "at alpha = 2 both constants equal 1",
                          std::abs(c.c1 - 1.0) + std::abs(c.c2 - 1.0), 0.0, std::nullopt, 0.0));
  }
}

VectorX<Real> smooth_profile(const Domain& g, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr int kModes = 4;
  double c[kModes][kModes];
  for (auto& row : c)
    for (auto& v : row) v = normal(rng);
  const auto& idx = g.interior_indices();
  VectorX<Real> x(static_cast<Index>(idx.size()));
  for (std::size_t a = 0; a < idx.size(); ++a) {
    const auto& pt = g.coord(idx[a]);
    const double xi = to_d((pt[0] - g.omega_min(0)) / (g.omega_max(0) - g.omega_min(0)));
    const double eta = g.dim() == 2 ? to_d((pt[1] - g.omega_min(1)) / (g.omega_max(1) - g.omega_min(1))) : 0.5;
    double v = 0;
    for (int i = 0; i < kModes; ++i) {
      for (int j = 0; j < (g.dim() == 2 ? kModes : 1); ++j) {
        const double sy = g.dim() == 2 ? std::sin((j + 1) * std::numbers::pi * eta) : 1.0;
        v += c[i][j] / (i + j + 1) * std::sin((i + 1) * std::numbers::pi * xi) * sy;
      }
    }
    x[static_cast<Index>(a)] = Real(v);
  }
  return x;
}

/// Piecewise-linear-in-time function through random profiles at 0, t1, T.
SpaceTimeField synthetic_field(const DomainRef& domain, double t_end, int t_grid, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> split(0.2, 0.8);
  const auto& g = *domain;
  const Index K = g.interior_count();
  std::vector<VectorX<Real>> knots;
  for (int k = 0; k < 3; ++k) {
    if (k == 1) {
      VectorX<Real> noise(K);
      for (Index i = 0; i < K; ++i) noise[i] = Real(unit(rng));
      knots.push_back(noise);
    } else {
      knots.push_back(smooth_profile(g, rng));
    }
  }
  const Real T = Real(t_end);
  const Real t1 = Real(split(rng)) * T;
  const Real times[3] = {0, t1, T};
  SpaceTimeField f;
  f.domain = domain;
  f.t_end = t_end;
  f.t_grid = t_grid;
  f.values.resize(K, t_grid);
  const Real delta = T / Real(t_grid);
  for (int a = 0; a < t_grid; ++a) {
    const Real t = (Real(a) + Real(0.5)) * delta;
    const int seg = t <= t1 ? 0 : 1;
    const Real theta = (t - times[seg]) / (times[seg + 1] - times[seg]);
    f.values.col(a) = (Real(1) - theta) * knots[static_cast<std::size_t>(seg)] +
                      theta * knots[static_cast<std::size_t>(seg) + 1];
  }
  f.dt_l1 = g.vol() * ((knots[1] - knots[0]).cwiseAbs().sum() + (knots[2] - knots[1]).cwiseAbs().sum());
  return f;
}

}  // namespace

VerificationReport inequality_suite(const RunConfig& cfg, long trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("trials must be positive");
  cfg.validate();
  VerificationReport report;
  std::mt19937_64 rng(seed);
  for (const double alpha : {1.5, 2.0, 2.5, 3.0, 4.0}) add_alg_entries(report, alpha, trials, rng);

  const DomainRef domain = build_domain(cfg);
  const Kernel kernel = assemble_kernel(domain, cfg.flow);
  const Index K = domain->interior_count();
  const long n_poincare = std::min<long>(trials, 100);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  long violations = 0;
  double worst_ratio = 0;
  ReportEntry worst;
  for (long k = 0; k < n_poincare; ++k) {
    VectorX<Real> x(K);
    for (Index i = 0; i < K; ++i) x[i] = Real(unit(rng));
    const ReportEntry e = check_poincare(Field::from_interior(domain, x), kernel, cfg.flow);
    if (!e.pass) ++violations;
    const double ratio = e.lhs / e.rhs;
    if (k == 0 || ratio > worst_ratio) {
      worst_ratio = ratio;
      worst = e;
    }
  }
  worst.name = "poincare.random_functions";
  worst.note = std::to_string(violations) + " violations over " + std::to_string(n_poincare) +
               " random functions; worst lhs/rhs " + num(worst_ratio);
  worst.pass = violations == 0;
  report.add(worst);

  for (int k = 0; k < 20; ++k) {
    const SpaceTimeField f = synthetic_field(domain, cfg.flow.t_end, cfg.t_grid, rng);
    ReportEntry e = check_spacetime_sobolev(f, cfg.s_prime, cfg.s_bar, 0.0);
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%02d", k);
    e.name = std::string("spacetime_sobolev.synthetic.") + buf;
    report.add(e);
  }
  report.sort_entries();
  return report;
}

int cmd_ineq(const RunConfig& cfg, long trials, std::uint64_t seed, std::ostream& err) {
  return guarded(err, [&] {
    cfg.validate();
    const auto dir = prepare_output(cfg);
    VerificationReport report = inequality_suite(cfg, trials, seed);
    report.meta = config_meta(cfg);
    report.meta.insert(report.meta.begin(), {"command", "ineq"});
    report.meta.emplace_back("trials", trials);
    report.meta.emplace_back("ineq_seed", static_cast<unsigned long long>(seed));
    write_report(dir, report);
    if (!report.all_pass()) {
      print_failures(report, err);
      return int(kExitCheckFailure);
    }
    return int(kExitOk);
  });
}

}  // namespace fracflow

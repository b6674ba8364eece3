#ifndef FRACFLOW_COMMANDS_HPP
#define FRACFLOW_COMMANDS_HPP

#include "fracflow/config.hpp"
#include "fracflow/verify.hpp"

#include <cstdint>
#include <ostream>

namespace fracflow {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitNonConvergence = 3,
  kExitCheckFailure = 4,
};

DomainRef build_domain(const RunConfig& cfg);
Field build_initial(const RunConfig& cfg, const DomainRef& domain);

/// Run metadata shared by every command.
JsonValue::Object config_meta(const RunConfig& cfg);

/// Every enabled check on a converged trajectory, sorted by name.
VerificationReport verify_trajectory(const Trajectory& traj, const Kernel& kernel, const RunConfig& cfg);

/// Columns step, time, lq1_pow, seminorm_p, linf, dissipation_step, solver_iters, grad_norm.
void write_trace(std::ostream& os, const Trajectory& traj, const Kernel& kernel);

/// Flow-independent inequality suite: algebraic constants with random pairs,
/// Poincare on random functions, space-time Sobolev on synthetic functions.
VerificationReport inequality_suite(const RunConfig& cfg, long trials, std::uint64_t seed);

/// Each command writes its outputs under cfg.output_dir and returns an exit
/// code; diagnostics go to err.
int cmd_run(const RunConfig& cfg, std::ostream& err);
int cmd_converge(const RunConfig& cfg, int levels, double gamma, std::ostream& err);
int cmd_ineq(const RunConfig& cfg, long trials, std::uint64_t seed, std::ostream& err);

}  // namespace fracflow

#endif  // FRACFLOW_COMMANDS_HPP

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "diffeoflow/geometry.hpp"
#include "diffeoflow/linsolve.hpp"
#include "diffeoflow/objective.hpp"
#include "diffeoflow/strain.hpp"
#include "diffeoflow/trajectory.hpp"

namespace diffeoflow {

struct PcgSettings {
  double rel_tolerance = 1e-4;
  int max_iterations = 100;
};

struct NewtonSettings {
  int max_iterations = 50;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  int max_backtracks = 50;
  double tau_pcg = 0.25;  // cap of the quadratic forcing sequence
};

struct SolverConfig {
  int n = 5;             // time cells
  double alpha = 1.0;    // distance weight
  double rho = 1.0;      // splitting parameter
  double tau_v = 6.0;    // velocity bandwidth scaling
  double tau_s = 1.0;    // distance bandwidth scaling
  double eps_prim = 1e-3;
  double eps_dual = 1e-3;
  double tau_haus = 0.5;  // eps_haus = tau_haus * hbar(target)
  int n_iter = 100;
  double hausdorff_percentile = 0.95;
  PcgSettings kkt_pcg;
  NewtonSettings newton;
  double boundary_alpha_scale = 1.0;  // weight multiplier for boundary points
  std::optional<double> sigma_v;        // policy value when unset
  std::optional<double> sigma_s;        // policy value when unset
  std::vector<double> sigma_s_frames;   // multi-frame overrides, one per frame >= 1
  std::optional<double> kinetic_scale;  // c; 2h when unset
  unsigned long seed = 0;               // echoed into outputs; reserved
  bool stop_only_iter_cap = false;      // sweep mode: only C5 active
};

void validate(const SolverConfig& cfg);

struct IterationRecord {
  int iter = 0;               // 1-based
  double hausdorff = 0.0;     // censored, on observe_terminal of the kinetic x
  double prim_norm = 0.0;
  double dual_norm = 0.0;
  double t_kinetic = 0.0;     // wall seconds
  double t_distance = 0.0;
  std::vector<double> frame_hausdorff;  // multi-frame runs only
};

/// The six-tuple of the splitting iteration plus its convergence log.
/// Duals are scaled: (u, w) = (nu, omega) / rho. Pairing: u with x,
/// w with a, matching the stacking order of the consensus constraint.
struct AdmmState {
  StateTrajectory x, xt, u;    // primal / consensus / dual, n+1 blocks
  ControlTrajectory a, at, w;  // primal / consensus / dual, n blocks
  int k = 0;                   // completed iterations
  std::vector<IterationRecord> log;
};

AdmmState make_admm_state(const MatX3& x0, const TimeGrid& grid);

struct StopDecision {
  bool c1 = false, c2 = false, c3 = false, c4 = false, c5 = false;
  bool stop() const { return c1 || c2 || c3 || c4 || c5; }
  bool converged() const { return c1 || c2 || c3 || c4; }
  std::string label() const;  // first fired condition, "C1".."C5"
};

/// Evaluates C1..C5 from the state's log: C1 censored Hausdorff below
/// eps_haus, C2 five consecutive Hausdorff updates summing below
/// eps_haus/1e3 (needs six logged values), C3/C4 residual norms below
/// eps_prim/eps_dual, C5 the iteration cap (fires when the iteration
/// that would run next, state.k + 1, exceeds n_iter).
StopDecision check_stopping(const AdmmState& state, const SolverConfig& cfg,
                            double eps_haus);

/// Precomputed factors for the kinetic-energy subproblem: the frozen
/// Gram matrix, chol(c K + rho I) for the M-solve, and the Cholesky
/// factor of the Schur diagonal block
///   L = h^2 K (c K + rho I)^{-1} K + (2/rho) I.
struct KineticWorkspace {
  const GramOperator* gram = nullptr;
  TimeGrid grid;
  double rho = 1.0;
  double c = 0.0;
  CholeskyFactor shifted;   // chol(c K + rho I)
  CholeskyFactor schur_diag;  // chol(L)
};

KineticWorkspace make_kinetic_workspace(const GramOperator& gram, const TimeGrid& grid,
                                        double rho, double c);

/// Reduced-space Schur operator G M^{-1} G^T on the multiplier space
/// (flat vector of n+1 blocks).
VecX apply_schur(const KineticWorkspace& ws, const VecX& nu);

/// Block-diagonal preconditioner P^{-1} = diag((1/rho) I, L, ..., L)^{-1}
/// obtained by dropping the off-diagonal identity blocks of the Schur
/// operator.
LinearOperator build_schur_preconditioner(const KineticWorkspace& ws);

struct KineticSolveInfo {
  int pcg_iterations = 0;
  double pcg_residual = 0.0;
};

/// Solves the equality-constrained proximal subproblem
///   min (c/2) a^T B a + (rho/2)(|x - xt - u|^2 + |a - at - w|^2)
///   s.t. G^x x + G^a a = q
/// via the Schur complement of its KKT system, returning the updated
/// primal pair (x, a).
std::pair<StateTrajectory, ControlTrajectory> solve_kinetic_subproblem(
    const AdmmState& state, const KineticWorkspace& ws, const MatX3& x0,
    const PcgSettings& pcg_settings, KineticSolveInfo* info = nullptr);

/// A data-carrying time block of the distance term.
struct TargetBlock {
  KernelDistance kd;
  int block = 0;  // 0-based index into the state blocks; terminal = n
  const Shape* shape = nullptr;  // for Hausdorff logging
};

struct NewtonTrace {
  int iterations = 0;
  double grad_norm = 0.0;
  bool line_search_failed = false;
};

/// Proximal Newton-Krylov solve of
///   min_z dist(z) + (rho/2) |z - center|^2
/// with the quadratic forcing sequence eps_pcg = min(|g_i|/|g_0|, tau)
/// and Armijo backtracking. A failed line search accepts the zero step.
/// Starts from `start` when given (the previous consensus block, which
/// keeps the iterates in one basin of the rippled kernel landscape),
/// from `center` otherwise.
MatX3 solve_distance_block(const MatX3& center, const KernelDistance& kd, double rho,
                           const NewtonSettings& newton, int pcg_max_iterations,
                           NewtonTrace* trace = nullptr, const MatX3* start = nullptr);

/// Consensus update: at = a - w everywhere, xt(t^j) = x(t^j) - u(t^j)
/// away from data blocks, Newton solve on each data block.
void solve_distance_subproblem(AdmmState& state, std::span<const TargetBlock> targets,
                               const SolverConfig& cfg);

/// (u, w) += (xt, at) - (x, a).
void dual_update(AdmmState& state);

struct ResidualNorms {
  double prim = 0.0;
  double dual = 0.0;
};

/// r_prim = (a, x) - (at, xt); r_dual = rho ((at, xt) - previous).
/// The dual residual of the first iteration is 0 by convention.
ResidualNorms residuals(const AdmmState& state, const StateTrajectory* xt_prev,
                        const ControlTrajectory* at_prev, double rho);

struct RegistrationResult {
  ControlTrajectory control;
  StateTrajectory states;  // faithful rollout of the final control
  double kinetic_energy = 0.0;
  double initial_hausdorff = 0.0;
  double final_hausdorff = 0.0;  // censored, from the convergence log
  std::string termination;       // "C1".."C5"
  StopDecision decision;
  std::vector<IterationRecord> log;
  std::optional<StrainField> strain;  // when the template has a mesh
  double frozen_faithful_gap = 0.0;   // Linf gap of the two state variants
  // resolved configuration, for echo into summary files
  SolverConfig config;
  double sigma_v = 0.0;
  double sigma_s = 0.0;
  double eps_haus = 0.0;
  double kinetic_scale = 0.0;
  double runtime_s = 0.0;
  int frames = 2;
  std::vector<int> frame_blocks;  // 0-based block of each frame >= 1
};

/// Pairwise registration (Algorithm: kinetic subproblem, distance
/// subproblem, dual update, residuals, stopping checks).
RegistrationResult register_pair(const Shape& tmpl, const Shape& target,
                                 const SolverConfig& cfg);

/// Multi-frame registration: n is set to the frame count, frame i is
/// assigned to block 1 + round(i n / (n_f - 1)) (1-based), the distance
/// term sums per-frame kernel distances, and C1/C2 track the final
/// frame.
RegistrationResult register_multiframe(const std::vector<Shape>& frames,
                                       const SolverConfig& cfg);

}  // namespace diffeoflow

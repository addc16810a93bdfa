#pragma once

#include <string>
#include <vector>

#include "reaccel/bnb.hpp"
#include "reaccel/conic_program.hpp"
#include "reaccel/linearize.hpp"
#include "reaccel/motor.hpp"
#include "reaccel/network.hpp"
#include "reaccel/socp.hpp"

namespace reaccel {

struct RestorationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct BuildOptions {
    int steps = 20;             // slip steps K
    int pwl_breakpoints = 6;    // breakpoints for 1/x and protection curves
    bool per_step_dg = false;   // one DG setpoint per step instead of one overall
    double eps_torque = 1e-3;   // stall floor on the accelerating torque [p.u.]
    double v_min_sq = 0.25;     // global squared-voltage box
    double v_max_sq = 1.21;
};

/// Restoration program plus the handle maps needed to read a solution back.
///
/// Size bookkeeping (K steps, B closed lines, N buses, D DGs, S free load
/// binaries, n breakpoints in each 1/x block, n_u/n_o breakpoints in the
/// under-voltage/over-current curve blocks, P_u protected buses of which
/// P_uf carry a free binary, P_o protected closed lines):
///   variables  = S + 2D(K if per-step, else 1)
///              + K * [ (N-1) + 3B + 3 + n + S
///                      + (n_u + 1 + P_uf if UV) + (n_o + 1 if OC) ]
///   rows       = K * [ 3B + 3 + 3 + 4S + (3 + 4*P_uf + P_u if UV)
///                      + (3 + P_o if OC) ]
///   cones      = K * (B + D)
///   SOS2 sets  = K * (1 + has_uv + has_oc)
struct BuiltProblem {
    ConicProgram prog;
    SlipGrid grid;
    std::vector<StepCoeffs> coeffs;
    RadialOrder order;
    PwlCurve uv_pwl, oc_pwl;
    bool has_uv = false, has_oc = false;
    double t_roof = 0.0;
    double f_re_norm = 1.0, f_op_norm = 1.0;
    BuildOptions opts;

    // variable handles, -1 where absent; [k] is 0-based step index
    std::vector<std::vector<int>> v;            // [bus][k], substation -1
    std::vector<std::vector<int>> pf, qf, ff;   // [line][k], open lines -1
    std::vector<std::vector<int>> pdg, qdg;     // [dg][k]
    std::vector<int> load_bin;                  // [load], -1 when fixed on
    std::vector<std::vector<int>> yv;           // [load][k] product L*V
    std::vector<int> tacc, finv, tk;            // [k]
    std::vector<int> vmin, ocm;                 // [k]
    std::vector<std::vector<int>> yuv;          // [bus][k] product L*vmin
    std::vector<std::pair<int, int>> cone_line;  // per cone: (line,k) or (-1,dg)
    std::vector<double> cone_scale;             // per cone, for tightness checks
};

BuiltProblem build_problem(const NetworkCase& nc, const std::vector<StepCoeffs>& coeffs,
                           const SlipGrid& grid, const BuildOptions& opts);

/// Convenience: default grid/coefficients from the case's motor section.
BuiltProblem build_problem(const NetworkCase& nc, const BuildOptions& opts);

struct PlanStep {
    double slip = 0.0;
    double v_motor_sq = 0.0;
    double t_ele = 0.0;       // electrical torque [p.u.]
    double t_acc = 0.0;       // accelerating torque [p.u.]
    double dt_exact = 0.0;    // 1 / (inv_dt_gain * t_acc)
    double dt_pwl = 0.0;      // from the 1/x block, kept for audit
    double t_end_exact = 0.0;  // cumulative time at the end of this step
    double t_end_pwl = 0.0;
    double uv_floor_sq = -1.0;  // enforced floor, -1 when no UV protection
    double oc_mult = -1.0;
};

struct RestorationPlan {
    std::string scenario_id;
    std::vector<int> load_status;  // per load
    bool per_step_dg = false;
    std::vector<std::vector<std::pair<double, double>>> dg_setpoints;  // [dg][k or 1]
    SlipGrid grid;
    std::vector<PlanStep> steps;
    std::vector<std::vector<double>> v_sq;                 // [k][bus]
    std::vector<std::vector<double>> p_flow, q_flow, f_sq; // [k][line]

    double objective = 0.0;
    double f_re_raw = 0.0, f_re_normalized = 0.0;
    double f_op_raw = 0.0, f_op_normalized = 0.0;
    double min_uv_margin = kInf;   // on voltage magnitude, enforced floor
    std::string min_uv_margin_bus;
    int min_uv_margin_step = -1;
    double min_oc_margin = kInf;   // on current magnitude
    std::string min_oc_margin_line;
    int min_oc_margin_step = -1;
    double max_cone_residual = 0.0;

    /// plan arrival time of grid slip S_{k+1} (exact dt sums; index 0 -> t=0)
    double arrival_time(int k) const;
};

struct DecodeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Map a solver vector back to named quantities; verifies the solution
/// against every row within 1e-5 and recomputes timing exactly.
RestorationPlan decode(const BuiltProblem& bp, const NetworkCase& nc,
                       const std::vector<double>& x);

/// Bound fixes reproducing a plan's discrete and DG decisions, for
/// re-evaluating the per-step state on a different grid or cross-checking.
std::vector<BoundFix> plan_fixes(const BuiltProblem& bp, const std::vector<int>& load_status,
                                 const std::vector<std::vector<std::pair<double, double>>>& dg);

std::string plan_to_json(const RestorationPlan& plan, const NetworkCase& nc,
                         const std::string& digest, const std::string& solve_flags);
RestorationPlan plan_from_json(const std::string& text, const NetworkCase& nc,
                               std::string* digest_out = nullptr,
                               std::string* flags_out = nullptr);

}  // namespace reaccel

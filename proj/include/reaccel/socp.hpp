#pragma once

#include <string>
#include <vector>

#include "reaccel/conic_program.hpp"

namespace reaccel {

struct SocpSettings {
    double feastol = 1e-8;
    double abstol = 1e-8;
    double reltol = 1e-8;
    // fallback acceptance when numerics stall short of the targets
    double feastol_inacc = 1e-7;
    double abstol_inacc = 1e-7;
    double reltol_inacc = 1e-7;
    int max_iter = 120;
    double static_reg = 2e-8;
    int refine_iters = 3;
    bool verbose = false;
};

/// Continuous conic solve result mapped back to program space. Binaries are
/// relaxed to their bounds; SOS2 sets are ignored.
struct SocpSolution {
    SolveStatus status = SolveStatus::Fatal;
    std::vector<double> x;                        // per program variable
    std::vector<double> row_duals;                // per program row
    std::vector<std::vector<double>> cone_duals;  // per program cone
    double objective = 0.0;
    double pres = 0.0, dres = 0.0;   // normalized primal/dual residuals
    double gap = 0.0, relgap = 0.0;  // absolute and relative duality gap
    double complementarity = 0.0;    // s'z of the embedded problem, unscaled
    int iterations = 0;
    std::string message;

    bool optimal() const { return status == SolveStatus::Optimal; }
};

/// Per-variable bound override used by branch-and-bound node restrictions
/// (fixing binaries, zeroing SOS2 members).
struct BoundFix {
    int var = -1;
    double lb = 0.0, ub = 0.0;
};

/// Solve the continuous relaxation of `prog` with optional bound overrides.
/// Homogeneous self-dual embedding with Nesterov-Todd scaled predictor-
/// corrector steps; fixed variables are substituted out beforehand.
SocpSolution solve_socp(const ConicProgram& prog, const SocpSettings& settings = {},
                        const std::vector<BoundFix>& fixes = {});

}  // namespace reaccel

#pragma once

#include <iosfwd>
#include <vector>

#include "reaccel/conic_program.hpp"
#include "reaccel/socp.hpp"

namespace reaccel {

struct BnbSettings {
    double gap_tol = 1e-6;   // relative incumbent/bound gap target
    double int_tol = 1e-6;   // binary integrality tolerance
    double sos_tol = 1e-5;   // SOS2 support mass tolerance
    long node_limit = 200000;
    double time_limit = 0.0;  // seconds; 0 disables (wall clocks break determinism)
    int workers = 1;
    SocpSettings socp;
    std::ostream* log = nullptr;  // per-node lines when set
};

struct BnbResult {
    SolveStatus status = SolveStatus::Fatal;
    bool has_incumbent = false;
    SocpSolution incumbent;             // binaries rounded, SOS2 pinned
    std::vector<BoundFix> assignment;   // fixes that produced the incumbent
    double best_bound = -kInf;
    double gap = kInf;
    long nodes = 0;
    double wall_time = 0.0;  // reporting only; never steers the search by default
};

/// Best-first branch and bound with depth-first plunging until the first
/// incumbent. Branches on the most fractional binary first, then on the
/// widest-violating SOS2 set.
BnbResult solve_misocp(const ConicProgram& prog, const BnbSettings& settings = {});

/// Max relative second-order-cone slack at a solution, measured as
/// (tail^2 - ||head||^2) / (4 * scale_i); for the rotated current cones this
/// is exactly (F V - p^2 - q^2) / scale_i. Scales default to max(1, tail^2/4).
struct ConeTightness {
    double max_rel = 0.0;
    int argmax = -1;
    std::vector<double> rel;
};
ConeTightness check_cone_tightness(const ConicProgram& prog, const std::vector<double>& x,
                                   const std::vector<double>& scales = {});

}  // namespace reaccel

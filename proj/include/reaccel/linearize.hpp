#pragma once

#include <vector>

#include "reaccel/conic_program.hpp"

namespace reaccel {

/// SOS2 piecewise-linear block: adds lambda variables tied to x by
///   x = sum lambda_i * x_i,  f = sum lambda_i * f(x_i),  sum lambda_i = 1,
/// registers {lambda_i} as one SOS2 set, and returns the handle of f.
struct PwlHandles {
    VarId output;
    std::vector<int> lambdas;
    int sos2_index = -1;
};
PwlHandles emit_pwl(ConicProgram& prog, const LinExpr& x, const std::vector<double>& breakpoints,
                    const std::vector<double>& values, const std::string& tag);

/// Binary*continuous product y = x1 * x2 with 0 <= x2 <= u assumed enforced
/// elsewhere:  0 <= y <= u*x1  and  x2 - u(1-x1) <= y <= x2.
VarId emit_product(ConicProgram& prog, VarId binary, const LinExpr& x2, double u,
                   const std::string& tag);

/// SOS2 branching decision for a lambda vector whose support is wider than
/// two adjacent indices. Child A fixes lambda_i = 0 for i > split, child B
/// for i < split; their union covers all SOS2-feasible points and both
/// exclude the current one.
struct Sos2Branch {
    bool already_feasible = false;
    int split = -1;  // position within the set (0-based)
};
Sos2Branch sos2_branch(const std::vector<double>& lambdas, double tol = 1e-6);

/// Geometric breakpoint grid on [lo, hi] for approximating 1/x.
std::vector<double> geometric_breakpoints(double lo, double hi, int n);

}  // namespace reaccel

#include "reaccel/linearize.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace reaccel {

PwlHandles emit_pwl(ConicProgram& prog, const LinExpr& x, const std::vector<double>& breakpoints,
                    const std::vector<double>& values, const std::string& tag) {
    const size_t n = breakpoints.size();
    if (n < 2 || values.size() != n)
        throw std::invalid_argument("emit_pwl: need n >= 2 matching breakpoints/values");
    for (size_t i = 1; i < n; ++i)
        if (!(breakpoints[i] > breakpoints[i - 1]))
            throw std::invalid_argument("emit_pwl: breakpoints must be strictly increasing");

    PwlHandles h;
    LinExpr x_link, f_link, simplex;
    for (size_t i = 0; i < n; ++i) {
        const VarId lam = prog.add_var(tag + ".lam" + std::to_string(i), 0.0, 1.0);
        h.lambdas.push_back(lam.idx);
        x_link += LinExpr(lam, breakpoints[i]);
        f_link += LinExpr(lam, values[i]);
        simplex += LinExpr(lam);
    }
    const double fmin = *std::min_element(values.begin(), values.end());
    const double fmax = *std::max_element(values.begin(), values.end());
    h.output = prog.add_var(tag + ".f", fmin, fmax);

    prog.add_row(x_link - x, RowSense::Eq, tag + ".x_link");
    prog.add_row(f_link - LinExpr(h.output), RowSense::Eq, tag + ".f_link");
    prog.add_row(simplex - 1.0, RowSense::Eq, tag + ".simplex");
    prog.add_sos2(h.lambdas, tag);
    h.sos2_index = prog.num_sos2() - 1;
    return h;
}

VarId emit_product(ConicProgram& prog, VarId binary, const LinExpr& x2, double u,
                   const std::string& tag) {
    if (!(u > 0.0)) throw std::invalid_argument("emit_product: u must be > 0");
    const VarId y = prog.add_var(tag + ".y", 0.0, u);
    prog.add_row(LinExpr(y) - LinExpr(binary, u), RowSense::Le, tag + ".big_m");
    prog.add_row(LinExpr(y) - x2, RowSense::Le, tag + ".le_x2");
    LinExpr lower = x2 + LinExpr(binary, u) - LinExpr(y) - LinExpr(u);
    prog.add_row(lower, RowSense::Le, tag + ".ge_pinch");  // x2 - u(1-x1) <= y
    return y;
}

Sos2Branch sos2_branch(const std::vector<double>& lambdas, double tol) {
    Sos2Branch br;
    int lo = -1, hi = -1;
    double mass = 0.0, mean = 0.0;
    for (size_t i = 0; i < lambdas.size(); ++i) {
        if (lambdas[i] > tol) {
            if (lo < 0) lo = static_cast<int>(i);
            hi = static_cast<int>(i);
        }
        mass += std::max(0.0, lambdas[i]);
        mean += std::max(0.0, lambdas[i]) * static_cast<double>(i);
    }
    if (lo < 0 || hi - lo <= 1) {
        br.already_feasible = true;
        return br;
    }
    const int m = static_cast<int>(std::lround(mean / std::max(mass, 1e-300)));
    br.split = std::clamp(m, lo + 1, hi - 1);
    return br;
}

std::vector<double> geometric_breakpoints(double lo, double hi, int n) {
    if (!(lo > 0.0 && hi > lo) || n < 2)
        throw std::invalid_argument("geometric_breakpoints: need 0 < lo < hi, n >= 2");
    std::vector<double> bp(n);
    const double ratio = std::pow(hi / lo, 1.0 / (n - 1));
    double v = lo;
    for (int i = 0; i < n; ++i) {
        bp[i] = v;
        v *= ratio;
    }
    bp.back() = hi;
    return bp;
}

}  // namespace reaccel

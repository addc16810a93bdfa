// Temporary scaffolding smoke test for the conic engine.
#include <cstdio>

#include "reaccel/bnb.hpp"
#include "reaccel/socp.hpp"

using namespace reaccel;

int main() {
    {
        // min x s.t. |x-1| <= x  ->  x = 0.5
        ConicProgram p;
        VarId x = p.add_var("x", -kInf, kInf);
        p.add_objective(LinExpr(x));
        p.add_cone(LinExpr(x), {LinExpr(x) - LinExpr(1.0)}, "abs");
        SocpSolution s = solve_socp(p);
        std::printf("cone toy: status=%d x=%.10f obj=%.10f pres=%.2e dres=%.2e gap=%.2e\n",
                    static_cast<int>(s.status), s.x[0], s.objective, s.pres, s.dres, s.gap);
    }
    {
        // two-bus distflow: vars V2,p,q,F; min loss r*F
        // p = 0.5 + r F ; q = 0.2 + x F ; V2 = 1 - 2(r p + x q) + (r^2+x^2) F
        // cone p^2 + q^2 <= F * V1 (V1 = 1)
        ConicProgram prog;
        const double r = 0.1, xx = 0.1;
        VarId V2 = prog.add_var("V2", 0.25, 1.21);
        VarId pf = prog.add_var("p", -kInf, kInf);
        VarId qf = prog.add_var("q", -kInf, kInf);
        VarId F = prog.add_var("F", 0.0, kInf);
        prog.add_row(LinExpr(pf) - LinExpr(F, r) - LinExpr(0.5), RowSense::Eq, "pbal");
        prog.add_row(LinExpr(qf) - LinExpr(F, xx) - LinExpr(0.2), RowSense::Eq, "qbal");
        prog.add_row(LinExpr(V2) - LinExpr(1.0) + 2.0 * (LinExpr(pf, r) + LinExpr(qf, xx)) -
                         LinExpr(F, r * r + xx * xx),
                     RowSense::Eq, "vdrop");
        prog.add_cone(LinExpr(F) + LinExpr(1.0),
                      {LinExpr(pf, 2.0), LinExpr(qf, 2.0), LinExpr(F) - LinExpr(1.0)}, "line");
        prog.add_objective(LinExpr(F, r));
        SocpSolution s = solve_socp(prog);
        std::printf("twobus: status=%d V2=%.10f F=%.10f p=%.10f q=%.10f pres=%.2e dres=%.2e\n",
                    static_cast<int>(s.status), s.x[0], s.x[3], s.x[1], s.x[2], s.pres, s.dres);
        ConeTightness ct = check_cone_tightness(prog, s.x);
        std::printf("twobus cone residual: %.3e\n", ct.max_rel);
    }
    {
        // tiny MILP: min -x1 - x2 - 0.5 x3  s.t. x1 + x2 + x3 <= 1.5, xi binary
        ConicProgram prog;
        VarId b1 = prog.add_binary("b1");
        VarId b2 = prog.add_binary("b2");
        VarId b3 = prog.add_binary("b3");
        prog.add_row(LinExpr(b1) + LinExpr(b2) + LinExpr(b3) - LinExpr(1.5), RowSense::Le, "cap");
        prog.add_objective(LinExpr(b1, -1.0) + LinExpr(b2, -1.0) + LinExpr(b3, -0.5));
        BnbResult r = solve_misocp(prog);
        std::printf("milp: status=%d obj=%.6f nodes=%ld gap=%.2e x=(%.3f,%.3f,%.3f)\n",
                    static_cast<int>(r.status), r.incumbent.objective, r.nodes, r.gap,
                    r.incumbent.x[0], r.incumbent.x[1], r.incumbent.x[2]);
    }
    {
        // infeasible toy
        ConicProgram prog;
        VarId x = prog.add_var("x", 0.0, 1.0);
        prog.add_row(LinExpr(x) - LinExpr(2.0), RowSense::Ge, "impossible");
        prog.add_objective(LinExpr(x));
        SocpSolution s = solve_socp(prog);
        std::printf("infeas: status=%d msg=%s\n", static_cast<int>(s.status), s.message.c_str());
    }
    return 0;
}

#include "reaccel/restoration.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <json.hpp>

namespace reaccel {

using nlohmann::json;

namespace {

std::string step_tag(const char* base, int k) { return std::string(base) + "[" + std::to_string(k + 1) + "]"; }

std::string obj_tag(const char* base, const std::string& id, int k) {
    return std::string(base) + "[" + id + "," + std::to_string(k + 1) + "]";
}

}  // namespace

BuiltProblem build_problem(const NetworkCase& nc, const BuildOptions& opts) {
    const SlipGrid grid = make_grid(nc.motor.model, nc.motor.mech, opts.steps);
    return build_problem(nc, step_coeffs(nc.motor.model, nc.motor.mech, grid), grid, opts);
}

BuiltProblem build_problem(const NetworkCase& nc, const std::vector<StepCoeffs>& coeffs,
                           const SlipGrid& grid, const BuildOptions& opts) {
    BuiltProblem bp;
    bp.grid = grid;
    bp.coeffs = coeffs;
    bp.opts = opts;
    bp.order = radial_order(nc);
    ConicProgram& prog = bp.prog;

    const int K = grid.k_max();
    const int nb = static_cast<int>(nc.buses.size());
    const int nl = static_cast<int>(nc.lines.size());
    const double sigma = nc.motor_scale();
    const double inv_g = 2.0 * nc.motor.model.h * grid.delta_s;  // 1 / inv_dt_gain

    // stall feasibility at the voltage box ceiling, checked before any solve
    for (const StepCoeffs& sc : coeffs) {
        const double x_max = sc.torque_gain * opts.v_max_sq - sc.t_mech - sc.friction;
        if (x_max <= opts.eps_torque)
            throw RestorationError(
                "stall constraint impossible at step " + std::to_string(sc.k) + " (slip " +
                std::to_string(sc.slip) + "): even at the voltage ceiling the accelerating " +
                "torque is " + std::to_string(x_max) + " p.u.");
    }

    bp.t_roof = K * inv_g / opts.eps_torque;
    const ProtectionCurve* uv_curve = nc.curve(CurveKind::Undervoltage);
    const ProtectionCurve* oc_curve = nc.curve(CurveKind::Overcurrent);
    bp.has_uv = nc.has_protected_nodes() && uv_curve != nullptr;
    bp.has_oc = nc.has_protected_lines() && oc_curve != nullptr;
    if (bp.has_uv) bp.uv_pwl = approximate_curve(*uv_curve, opts.pwl_breakpoints, 0.0, bp.t_roof);
    if (bp.has_oc) bp.oc_pwl = approximate_curve(*oc_curve, opts.pwl_breakpoints, 0.0, bp.t_roof);

    // one binary per sheddable static load inside the off-outage area
    bp.load_bin.assign(nc.loads.size(), -1);
    for (size_t li = 0; li < nc.loads.size(); ++li) {
        const LoadSpec& ld = nc.loads[li];
        const Bus& bus = nc.buses[nc.bus_index(ld.bus)];
        if (ld.kind == LoadKind::Static && ld.sheddable && bus.in_off_outage_area)
            bp.load_bin[li] = prog.add_binary("L[" + ld.bus + "#" + std::to_string(li) + "]").idx;
    }

    // DG setpoints, deployed before energization unless per-step dispatch is on
    const int nd = static_cast<int>(nc.dgs.size());
    bp.pdg.assign(nd, std::vector<int>(K, -1));
    bp.qdg.assign(nd, std::vector<int>(K, -1));
    for (int d = 0; d < nd; ++d) {
        const DgSpec& dg = nc.dgs[d];
        const int reps = opts.per_step_dg ? K : 1;
        for (int r = 0; r < reps; ++r) {
            const std::string suff = opts.per_step_dg ? "," + std::to_string(r + 1) : std::string();
            const VarId pv = prog.add_var("Pdg[" + dg.bus + suff + "]", 0.0, dg.p_max);
            const VarId qv = prog.add_var("Qdg[" + dg.bus + suff + "]", dg.q_min, dg.q_max);
            prog.add_cone(LinExpr(dg.s_max), {LinExpr(pv), LinExpr(qv)},
                          obj_tag("dg_cone", dg.bus, r));
            bp.cone_line.push_back({-1 - d, r});
            bp.cone_scale.push_back(std::max(1e-12, dg.s_max * dg.s_max));
            for (int k = (opts.per_step_dg ? r : 0); k < (opts.per_step_dg ? r + 1 : K); ++k) {
                bp.pdg[d][k] = pv.idx;
                bp.qdg[d][k] = qv.idx;
            }
        }
    }

    bp.v.assign(nb, std::vector<int>(K, -1));
    bp.pf.assign(nl, std::vector<int>(K, -1));
    bp.qf.assign(nl, std::vector<int>(K, -1));
    bp.ff.assign(nl, std::vector<int>(K, -1));
    bp.yv.assign(nc.loads.size(), std::vector<int>(K, -1));
    bp.yuv.assign(nb, std::vector<int>(K, -1));
    bp.tacc.assign(K, -1);
    bp.finv.assign(K, -1);
    bp.tk.assign(K, -1);
    bp.vmin.assign(K, -1);
    bp.ocm.assign(K, -1);

    const double uv_cap = bp.has_uv
                              ? *std::max_element(bp.uv_pwl.values.begin(), bp.uv_pwl.values.end())
                              : 0.0;

    // crude but safe squared-current roof for unprotected line flows
    double s_tot = 0.0;
    for (const LoadSpec& ld : nc.loads) s_tot += std::hypot(ld.p0, ld.q0);
    for (const DgSpec& dg : nc.dgs) s_tot += dg.s_max;
    {
        const auto [rt1, xt1] = input_impedance(nc.motor.model, 1.0);
        s_tot += sigma * opts.v_max_sq / std::hypot(rt1, xt1);
    }
    const double f_roof = std::max(1.0, s_tot * s_tot / opts.v_min_sq);

    for (int k = 0; k < K; ++k) {
        const StepCoeffs& sc = coeffs[k];

        for (int b = 0; b < nb; ++b) {
            if (b == nc.substation) continue;
            bp.v[b][k] = prog.add_var(obj_tag("V", nc.buses[b].id, k), opts.v_min_sq,
                                      opts.v_max_sq).idx;
        }
        for (int li : bp.order.line_order) {
            const std::string lid = nc.lines[li].from + "-" + nc.lines[li].to;
            bp.pf[li][k] = prog.add_var(obj_tag("p", lid, k), -kInf, kInf).idx;
            bp.qf[li][k] = prog.add_var(obj_tag("q", lid, k), -kInf, kInf).idx;
            bp.ff[li][k] = prog.add_var(obj_tag("F", lid, k), 0.0, f_roof).idx;
        }

        auto v_expr = [&](int bus) {
            return bus == nc.substation ? LinExpr(nc.v_substation_sq)
                                        : LinExpr(VarId{bp.v[bus][k]});
        };

        // load withdrawal at a bus, as affine expressions in V (and products)
        auto load_expr = [&](int bus, bool active_power) {
            LinExpr e;
            for (size_t li = 0; li < nc.loads.size(); ++li) {
                const LoadSpec& ld = nc.loads[li];
                if (nc.bus_index(ld.bus) != bus) continue;
                if (ld.kind == LoadKind::MotorEnergized) {
                    e += LinExpr(active_power ? ld.p0 : ld.q0);
                } else if (ld.kind == LoadKind::MotorRestart) {
                    const double rt = sc.r_t, xt = sc.x_t;
                    const double g = (active_power ? rt : xt) / (rt * rt + xt * xt);
                    e += LinExpr(VarId{bp.v[bus][k]}, sigma * g);
                } else {
                    const double nominal = active_power ? ld.p0 : ld.q0;
                    const double coef = active_power ? ld.kp : ld.kq;
                    const double a = nominal * (1.0 - 0.5 * coef);
                    const double b2 = nominal * 0.5 * coef;
                    if (bp.load_bin[li] >= 0) {
                        if (bp.yv[li][k] < 0)
                            bp.yv[li][k] = emit_product(prog, VarId{bp.load_bin[li]}, v_expr(bus),
                                                        opts.v_max_sq,
                                                        obj_tag("yv", ld.bus, k) + "#" +
                                                            std::to_string(li)).idx;
                        e += LinExpr(VarId{bp.load_bin[li]}, a);
                        e += LinExpr(VarId{bp.yv[li][k]}, b2);
                    } else {
                        e += LinExpr(a) + LinExpr(VarId{bp.v[bus][k]}, b2);
                    }
                }
            }
            return e;
        };

        for (int li : bp.order.line_order) {
            const Line& ln = nc.lines[li];
            const int up = bp.order.up_bus[li], down = bp.order.down_bus[li];
            const std::string lid = ln.from + "-" + ln.to;
            const LinExpr p(VarId{bp.pf[li][k]}), q(VarId{bp.qf[li][k]}), F(VarId{bp.ff[li][k]});

            // nodal voltage along the branch
            prog.add_row(v_expr(down) - v_expr(up) + 2.0 * (ln.r * p + ln.x * q) -
                             (ln.r * ln.r + ln.x * ln.x) * F,
                         RowSense::Eq, obj_tag("voltage_drop", lid, k));

            // power balance at the downstream bus
            LinExpr pbal = p - ln.r * F - load_expr(down, true);
            LinExpr qbal = q - ln.x * F - load_expr(down, false);
            for (int cl : bp.order.child_lines[down]) {
                pbal -= LinExpr(VarId{bp.pf[cl][k]});
                qbal -= LinExpr(VarId{bp.qf[cl][k]});
            }
            for (int d = 0; d < nd; ++d) {
                if (nc.bus_index(nc.dgs[d].bus) != down) continue;
                pbal += LinExpr(VarId{bp.pdg[d][k]});
                qbal += LinExpr(VarId{bp.qdg[d][k]});
            }
            prog.add_row(pbal, RowSense::Eq, obj_tag("p_balance", nc.buses[down].id, k));
            prog.add_row(qbal, RowSense::Eq, obj_tag("q_balance", nc.buses[down].id, k));

            // relaxed current equation ||(2p, 2q, F - V_up)|| <= F + V_up
            prog.add_cone(F + v_expr(up), {2.0 * p, 2.0 * q, F - v_expr(up)},
                          obj_tag("line_cone", lid, k));
            bp.cone_line.push_back({li, k});
            bp.cone_scale.push_back(std::max(1e-12, ln.ampacity_sq * nc.v_substation_sq));
        }

        // accelerating torque, stall floor, and the 1/x timing block
        const StepCoeffs& c = sc;
        const double x_max = c.torque_gain * opts.v_max_sq - c.t_mech - c.friction;
        const VarId x_k = prog.add_var(step_tag("Tacc", k), opts.eps_torque, x_max);
        bp.tacc[k] = x_k.idx;
        prog.add_row(LinExpr(x_k) - LinExpr(VarId{bp.v[nc.motor_bus][k]}, c.torque_gain) +
                         LinExpr(c.t_mech + c.friction),
                     RowSense::Eq, step_tag("accel_torque", k));
        prog.add_row(LinExpr(x_k) - LinExpr(opts.eps_torque), RowSense::Ge, step_tag("stall", k));

        const std::vector<double> xbp =
            geometric_breakpoints(opts.eps_torque, x_max, opts.pwl_breakpoints);
        std::vector<double> xval(xbp.size());
        for (size_t i = 0; i < xbp.size(); ++i) xval[i] = 1.0 / xbp[i];
        const PwlHandles inv = emit_pwl(prog, LinExpr(x_k), xbp, xval, step_tag("invdt", k));
        bp.finv[k] = inv.output.idx;

        const VarId t_k = prog.add_var(step_tag("t", k), 0.0, bp.t_roof);
        bp.tk[k] = t_k.idx;
        LinExpr chain = LinExpr(t_k) - LinExpr(inv.output, inv_g);
        if (k > 0) chain -= LinExpr(VarId{bp.tk[k - 1]});
        prog.add_row(chain, RowSense::Eq, step_tag("time_chain", k));

        // protection limits as functions of the acceleration time
        if (bp.has_uv) {
            const PwlHandles uv = emit_pwl(prog, LinExpr(t_k), bp.uv_pwl.breakpoints,
                                           bp.uv_pwl.values, step_tag("uv_curve", k));
            bp.vmin[k] = uv.output.idx;
            for (int b = 0; b < nb; ++b) {
                if (!nc.buses[b].has_undervoltage_protection || b == nc.substation) continue;
                int free_bin = -1;
                int free_count = 0;
                bool always_on = false;
                for (size_t li = 0; li < nc.loads.size(); ++li) {
                    if (nc.bus_index(nc.loads[li].bus) != b) continue;
                    if (bp.load_bin[li] >= 0) {
                        free_bin = bp.load_bin[li];
                        ++free_count;
                    } else {
                        always_on = true;
                    }
                }
                if (free_count > 1 && !always_on)
                    throw RestorationError("bus '" + nc.buses[b].id +
                                           "': several sheddable loads behind one "
                                           "under-voltage relay are not supported");
                if (free_bin >= 0 && !always_on) {
                    if (bp.yuv[b][k] < 0)
                        bp.yuv[b][k] = emit_product(prog, VarId{free_bin}, LinExpr(uv.output),
                                                    uv_cap, obj_tag("yuv", nc.buses[b].id, k)).idx;
                    prog.add_row(LinExpr(VarId{bp.yuv[b][k]}) - LinExpr(VarId{bp.v[b][k]}),
                                 RowSense::Le, obj_tag("uv_protection", nc.buses[b].id, k));
                } else {
                    prog.add_row(LinExpr(uv.output) - LinExpr(VarId{bp.v[b][k]}), RowSense::Le,
                                 obj_tag("uv_protection", nc.buses[b].id, k));
                }
            }
        }
        if (bp.has_oc) {
            const PwlHandles oc = emit_pwl(prog, LinExpr(t_k), bp.oc_pwl.breakpoints,
                                           bp.oc_pwl.values, step_tag("oc_curve", k));
            bp.ocm[k] = oc.output.idx;
            for (int li : bp.order.line_order) {
                if (!nc.lines[li].has_overcurrent_protection) continue;
                const std::string lid = nc.lines[li].from + "-" + nc.lines[li].to;
                prog.add_row(LinExpr(VarId{bp.ff[li][k]}) -
                                 LinExpr(oc.output, nc.lines[li].ampacity_sq),
                             RowSense::Le, obj_tag("oc_protection", lid, k));
            }
        }
    }

    // objective: priority-weighted unsupplied load, then losses, both normalized
    bp.f_re_norm = 0.0;
    for (const LoadSpec& ld : nc.loads) bp.f_re_norm += ld.priority * ld.p0;
    bp.f_re_norm = std::max(bp.f_re_norm, 1e-12);
    bp.f_op_norm = 0.0;
    for (int li : bp.order.line_order) bp.f_op_norm += nc.lines[li].r * nc.lines[li].ampacity_sq;
    bp.f_op_norm = std::max(bp.f_op_norm * K, 1e-12);

    for (size_t li = 0; li < nc.loads.size(); ++li) {
        if (bp.load_bin[li] < 0) continue;
        const double w = nc.weights.w_re * nc.loads[li].priority * nc.loads[li].p0 / bp.f_re_norm;
        prog.add_objective(LinExpr(w) - LinExpr(VarId{bp.load_bin[li]}, w));
    }
    for (int k = 0; k < K; ++k)
        for (int li : bp.order.line_order)
            prog.add_objective(
                LinExpr(VarId{bp.ff[li][k]}, nc.weights.w_op * nc.lines[li].r / bp.f_op_norm));

    return bp;
}

double RestorationPlan::arrival_time(int k) const {
    if (k <= 0) return 0.0;
    return steps[k - 1].t_end_exact;
}

RestorationPlan decode(const BuiltProblem& bp, const NetworkCase& nc,
                       const std::vector<double>& x) {
    std::string worst;
    const double viol = bp.prog.max_violation(x, &worst);
    if (viol > 1e-5)
        throw DecodeError("solution violates '" + worst + "' by " + std::to_string(viol));

    const int K = bp.grid.k_max();
    const int nb = static_cast<int>(nc.buses.size());
    const int nl = static_cast<int>(nc.lines.size());

    RestorationPlan plan;
    plan.scenario_id = nc.scenario_id;
    plan.grid = bp.grid;
    plan.per_step_dg = bp.opts.per_step_dg;

    plan.load_status.assign(nc.loads.size(), 1);
    for (size_t li = 0; li < nc.loads.size(); ++li)
        if (bp.load_bin[li] >= 0) plan.load_status[li] = x[bp.load_bin[li]] > 0.5 ? 1 : 0;

    plan.dg_setpoints.resize(nc.dgs.size());
    for (size_t d = 0; d < nc.dgs.size(); ++d) {
        const int reps = bp.opts.per_step_dg ? K : 1;
        for (int r = 0; r < reps; ++r)
            plan.dg_setpoints[d].push_back({x[bp.pdg[d][bp.opts.per_step_dg ? r : 0]],
                                            x[bp.qdg[d][bp.opts.per_step_dg ? r : 0]]});
    }

    plan.v_sq.assign(K, std::vector<double>(nb, 0.0));
    plan.p_flow.assign(K, std::vector<double>(nl, 0.0));
    plan.q_flow.assign(K, std::vector<double>(nl, 0.0));
    plan.f_sq.assign(K, std::vector<double>(nl, 0.0));

    double t_exact = 0.0, t_pwl = 0.0;
    const double inv_g = 2.0 * nc.motor.model.h * bp.grid.delta_s;
    for (int k = 0; k < K; ++k) {
        PlanStep st;
        st.slip = bp.grid.steps[k];
        for (int b = 0; b < nb; ++b)
            plan.v_sq[k][b] = (b == nc.substation) ? nc.v_substation_sq : x[bp.v[b][k]];
        for (int li = 0; li < nl; ++li) {
            if (bp.pf[li][k] < 0) continue;
            plan.p_flow[k][li] = x[bp.pf[li][k]];
            plan.q_flow[k][li] = x[bp.qf[li][k]];
            plan.f_sq[k][li] = x[bp.ff[li][k]];
        }
        st.v_motor_sq = plan.v_sq[k][nc.motor_bus];
        st.t_ele = bp.coeffs[k].torque_gain * st.v_motor_sq;
        st.t_acc = x[bp.tacc[k]];
        st.dt_exact = inv_g / st.t_acc;
        st.dt_pwl = inv_g * x[bp.finv[k]];
        t_exact += st.dt_exact;
        t_pwl += st.dt_pwl;
        st.t_end_exact = t_exact;
        st.t_end_pwl = t_pwl;
        if (bp.vmin[k] >= 0) st.uv_floor_sq = x[bp.vmin[k]];
        if (bp.ocm[k] >= 0) st.oc_mult = x[bp.ocm[k]];
        plan.steps.push_back(st);
    }

    // objectives, recomputed from the decoded quantities
    plan.f_re_raw = 0.0;
    for (size_t li = 0; li < nc.loads.size(); ++li)
        plan.f_re_raw += nc.loads[li].priority * nc.loads[li].p0 * (1 - plan.load_status[li]);
    plan.f_re_normalized = plan.f_re_raw / bp.f_re_norm;
    plan.f_op_raw = 0.0;
    for (int k = 0; k < K; ++k)
        for (int li = 0; li < nl; ++li)
            if (bp.pf[li][k] >= 0) plan.f_op_raw += nc.lines[li].r * plan.f_sq[k][li];
    plan.f_op_normalized = plan.f_op_raw / bp.f_op_norm;
    plan.objective = bp.prog.objective_value(x);

    // protection margins against the enforced limits
    for (int k = 0; k < K; ++k) {
        if (bp.vmin[k] >= 0) {
            for (int b = 0; b < nb; ++b) {
                if (!nc.buses[b].has_undervoltage_protection || b == nc.substation) continue;
                bool counts = false;
                bool any_load = false;
                for (size_t li = 0; li < nc.loads.size(); ++li) {
                    if (nc.bus_index(nc.loads[li].bus) != static_cast<int>(b)) continue;
                    any_load = true;
                    if (plan.load_status[li]) counts = true;
                }
                if (any_load && !counts) continue;  // relay serves a detached load
                const double m = std::sqrt(plan.v_sq[k][b]) - std::sqrt(plan.steps[k].uv_floor_sq);
                if (m < plan.min_uv_margin) {
                    plan.min_uv_margin = m;
                    plan.min_uv_margin_bus = nc.buses[b].id;
                    plan.min_uv_margin_step = k + 1;
                }
            }
        }
        if (bp.ocm[k] >= 0) {
            for (int li = 0; li < nl; ++li) {
                if (!nc.lines[li].has_overcurrent_protection || bp.ff[li][k] < 0) continue;
                const double cap = nc.lines[li].ampacity_sq * plan.steps[k].oc_mult;
                const double m = std::sqrt(cap) - std::sqrt(std::max(0.0, plan.f_sq[k][li]));
                if (m < plan.min_oc_margin) {
                    plan.min_oc_margin = m;
                    plan.min_oc_margin_line = nc.lines[li].from + "-" + nc.lines[li].to;
                    plan.min_oc_margin_step = k + 1;
                }
            }
        }
    }

    // relaxation exactness over the line cones
    ConeTightness ct = check_cone_tightness(bp.prog, x, bp.cone_scale);
    plan.max_cone_residual = 0.0;
    for (size_t ci = 0; ci < bp.cone_line.size(); ++ci)
        if (bp.cone_line[ci].first >= 0)
            plan.max_cone_residual = std::max(plan.max_cone_residual, ct.rel[ci]);
    return plan;
}

std::vector<BoundFix> plan_fixes(const BuiltProblem& bp, const std::vector<int>& load_status,
                                 const std::vector<std::vector<std::pair<double, double>>>& dg) {
    std::vector<BoundFix> fixes;
    for (size_t li = 0; li < load_status.size(); ++li)
        if (bp.load_bin[li] >= 0) {
            const double v = load_status[li] ? 1.0 : 0.0;
            fixes.push_back({bp.load_bin[li], v, v});
        }
    for (size_t d = 0; d < dg.size(); ++d) {
        const int K = bp.grid.k_max();
        for (int k = 0; k < K; ++k) {
            const auto& sp = dg[d][std::min<size_t>(k, dg[d].size() - 1)];
            fixes.push_back({bp.pdg[d][k], sp.first, sp.first});
            fixes.push_back({bp.qdg[d][k], sp.second, sp.second});
        }
    }
    return fixes;
}

std::string plan_to_json(const RestorationPlan& plan, const NetworkCase& nc,
                         const std::string& digest, const std::string& solve_flags) {
    json j;
    j["format"] = "reaccel-plan-1";
    j["case_digest"] = digest;
    j["solve_flags"] = solve_flags;
    j["scenario_id"] = plan.scenario_id;
    j["load_status"] = json::array();
    for (size_t li = 0; li < plan.load_status.size(); ++li)
        j["load_status"].push_back(
            {{"bus", nc.loads[li].bus}, {"index", li}, {"on", plan.load_status[li] != 0}});
    j["per_step_dg"] = plan.per_step_dg;
    j["dg_setpoints"] = json::array();
    for (size_t d = 0; d < plan.dg_setpoints.size(); ++d) {
        json e = {{"bus", nc.dgs[d].bus}, {"p", json::array()}, {"q", json::array()}};
        for (const auto& [p, q] : plan.dg_setpoints[d]) {
            e["p"].push_back(p);
            e["q"].push_back(q);
        }
        j["dg_setpoints"].push_back(std::move(e));
    }
    j["grid"] = {{"delta_s", plan.grid.delta_s}, {"s_end", plan.grid.s_end},
                 {"steps", plan.grid.steps}};
    j["steps"] = json::array();
    for (const PlanStep& st : plan.steps)
        j["steps"].push_back({{"slip", st.slip},
                              {"v_motor_sq", st.v_motor_sq},
                              {"t_ele", st.t_ele},
                              {"t_acc", st.t_acc},
                              {"dt_exact", st.dt_exact},
                              {"dt_pwl", st.dt_pwl},
                              {"t_end_exact", st.t_end_exact},
                              {"t_end_pwl", st.t_end_pwl},
                              {"uv_floor_sq", st.uv_floor_sq},
                              {"oc_mult", st.oc_mult}});
    j["v_sq"] = plan.v_sq;
    j["p_flow"] = plan.p_flow;
    j["q_flow"] = plan.q_flow;
    j["f_sq"] = plan.f_sq;
    j["objective"] = plan.objective;
    j["f_re_raw"] = plan.f_re_raw;
    j["f_re_normalized"] = plan.f_re_normalized;
    j["f_op_raw"] = plan.f_op_raw;
    j["f_op_normalized"] = plan.f_op_normalized;
    j["min_uv_margin"] = plan.min_uv_margin;
    j["min_uv_margin_bus"] = plan.min_uv_margin_bus;
    j["min_uv_margin_step"] = plan.min_uv_margin_step;
    j["min_oc_margin"] = plan.min_oc_margin;
    j["min_oc_margin_line"] = plan.min_oc_margin_line;
    j["min_oc_margin_step"] = plan.min_oc_margin_step;
    j["max_cone_residual"] = plan.max_cone_residual;
    return j.dump(2) + "\n";
}

namespace {
double num_or_inf(const json& v) { return v.is_null() ? kInf : v.get<double>(); }
}  // namespace

RestorationPlan plan_from_json(const std::string& text, const NetworkCase& nc,
                               std::string* digest_out, std::string* flags_out) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DecodeError(std::string("plan parse error: ") + e.what());
    }
    if (!j.contains("format") || j["format"] != "reaccel-plan-1")
        throw DecodeError("not a reaccel-plan-1 document");
    if (digest_out) *digest_out = j.value("case_digest", "");
    if (flags_out) *flags_out = j.value("solve_flags", "");
    RestorationPlan plan;
    plan.scenario_id = j.value("scenario_id", "");
    plan.load_status.assign(nc.loads.size(), 1);
    for (const auto& e : j["load_status"]) {
        const size_t li = e["index"].get<size_t>();
        if (li >= plan.load_status.size()) throw DecodeError("plan load index out of range");
        plan.load_status[li] = e["on"].get<bool>() ? 1 : 0;
    }
    plan.per_step_dg = j.value("per_step_dg", false);
    for (const auto& e : j["dg_setpoints"]) {
        std::vector<std::pair<double, double>> sp;
        for (size_t i = 0; i < e["p"].size(); ++i)
            sp.push_back({e["p"][i].get<double>(), e["q"][i].get<double>()});
        plan.dg_setpoints.push_back(std::move(sp));
    }
    if (plan.dg_setpoints.size() != nc.dgs.size())
        throw DecodeError("plan DG count does not match the case");
    plan.grid.delta_s = j["grid"]["delta_s"].get<double>();
    plan.grid.s_end = j["grid"]["s_end"].get<double>();
    plan.grid.steps = j["grid"]["steps"].get<std::vector<double>>();
    for (const auto& e : j["steps"]) {
        PlanStep st;
        st.slip = e["slip"].get<double>();
        st.v_motor_sq = e["v_motor_sq"].get<double>();
        st.t_ele = e["t_ele"].get<double>();
        st.t_acc = e["t_acc"].get<double>();
        st.dt_exact = e["dt_exact"].get<double>();
        st.dt_pwl = e["dt_pwl"].get<double>();
        st.t_end_exact = e["t_end_exact"].get<double>();
        st.t_end_pwl = e["t_end_pwl"].get<double>();
        st.uv_floor_sq = e["uv_floor_sq"].get<double>();
        st.oc_mult = e["oc_mult"].get<double>();
        plan.steps.push_back(st);
    }
    plan.v_sq = j["v_sq"].get<std::vector<std::vector<double>>>();
    plan.p_flow = j["p_flow"].get<std::vector<std::vector<double>>>();
    plan.q_flow = j["q_flow"].get<std::vector<std::vector<double>>>();
    plan.f_sq = j["f_sq"].get<std::vector<std::vector<double>>>();
    plan.objective = j["objective"].get<double>();
    plan.f_re_raw = j["f_re_raw"].get<double>();
    plan.f_re_normalized = j["f_re_normalized"].get<double>();
    plan.f_op_raw = j["f_op_raw"].get<double>();
    plan.f_op_normalized = j["f_op_normalized"].get<double>();
    plan.min_uv_margin = num_or_inf(j["min_uv_margin"]);
    plan.min_uv_margin_bus = j["min_uv_margin_bus"].get<std::string>();
    plan.min_uv_margin_step = j["min_uv_margin_step"].get<int>();
    plan.min_oc_margin = num_or_inf(j["min_oc_margin"]);
    plan.min_oc_margin_line = j["min_oc_margin_line"].get<std::string>();
    plan.min_oc_margin_step = j["min_oc_margin_step"].get<int>();
    plan.max_cone_residual = j["max_cone_residual"].get<double>();
    return plan;
}

}  // namespace reaccel

#include "reaccel/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

namespace reaccel {

namespace {

using cplx = std::complex<double>;

struct MotorInterface {
    double sigma = 1.0;  // motor base / system base
    const MotorModel* model = nullptr;

    cplx impedance_sys(double slip) const {
        const auto [rt, xt] = input_impedance(*model, slip);
        return cplx(rt, xt) / sigma;
    }
};

}  // namespace

PhasorState network_snapshot(const NetworkCase& nc, const RadialOrder& order,
                             const std::vector<int>& load_status, double slip,
                             const std::vector<std::pair<double, double>>& dg_pq,
                             const SimConfig& cfg) {
    const int nb = static_cast<int>(nc.buses.size());
    const int nl = static_cast<int>(nc.lines.size());
    const cplx v_slack(std::sqrt(nc.v_substation_sq), 0.0);
    MotorInterface motor{nc.motor_scale(), &nc.motor.model};

    PhasorState ps;
    ps.v_bus.assign(nb, v_slack);
    ps.i_line.assign(nl, cplx(0.0, 0.0));

    // constant-PQ part per bus (energized motors and DG injections)
    std::vector<cplx> s_const(nb, cplx(0.0, 0.0));
    for (const LoadSpec& ld : nc.loads)
        if (ld.kind == LoadKind::MotorEnergized) s_const[nc.bus_index(ld.bus)] += cplx(ld.p0, ld.q0);
    for (size_t d = 0; d < nc.dgs.size(); ++d) {
        const auto& [p, q] = dg_pq[d];
        s_const[nc.bus_index(nc.dgs[d].bus)] -= cplx(p, q);
    }

    const cplx z_motor = motor.impedance_sys(std::clamp(slip, 1e-9, 1.0));

    // reversed preorder visits children before parents
    std::vector<int> up_order(order.line_order.rbegin(), order.line_order.rend());

    for (ps.sweeps = 1; ps.sweeps <= cfg.max_sweep_iters; ++ps.sweeps) {
        // bus injection currents at present voltages
        std::vector<cplx> i_bus(nb, cplx(0.0, 0.0));
        for (int b = 0; b < nb; ++b) {
            if (b == nc.substation) continue;
            const cplx v = ps.v_bus[b];
            cplx s = s_const[b];
            if (std::abs(v) > 1e-9) i_bus[b] += std::conj(s / v);
        }
        for (size_t li = 0; li < nc.loads.size(); ++li) {
            const LoadSpec& ld = nc.loads[li];
            const int b = nc.bus_index(ld.bus);
            const cplx v = ps.v_bus[b];
            const double vm = std::abs(v);
            if (vm < 1e-9) continue;
            if (ld.kind == LoadKind::Static) {
                if (!load_status[li]) continue;
                const cplx s(ld.p0 * std::pow(vm, ld.kp), ld.q0 * std::pow(vm, ld.kq));
                i_bus[b] += std::conj(s / v);
            } else if (ld.kind == LoadKind::MotorRestart) {
                i_bus[b] += v / z_motor;
            }
        }

        // backward: branch currents from the leaves up
        std::vector<cplx> i_new(nl, cplx(0.0, 0.0));
        for (int li : up_order) {
            const int down = order.down_bus[li];
            cplx acc = i_bus[down];
            for (int cl : order.child_lines[down]) acc += i_new[cl];
            i_new[li] = acc;
        }

        // forward: voltages from the root down
        double dv_max = 0.0;
        for (int li : order.line_order) {
            const Line& ln = nc.lines[li];
            const int up = order.up_bus[li], down = order.down_bus[li];
            const cplx v_up = (up == nc.substation) ? v_slack : ps.v_bus[up];
            const cplx v_new = v_up - cplx(ln.r, ln.x) * i_new[li];
            dv_max = std::max(dv_max, std::abs(v_new - ps.v_bus[down]));
            ps.v_bus[down] = v_new;
        }
        ps.i_line = std::move(i_new);
        if (dv_max <= cfg.sweep_tol) return ps;
    }
    throw SnapshotError("backward/forward sweep did not converge in " +
                        std::to_string(cfg.max_sweep_iters) +
                        " iterations (voltage collapse indicator), slip " + std::to_string(slip));
}

double snapshot_power_residual(const NetworkCase& nc, const RadialOrder& order,
                               const PhasorState& ps, const std::vector<int>& load_status,
                               double slip, const std::vector<std::pair<double, double>>& dg_pq) {
    MotorInterface motor{nc.motor_scale(), &nc.motor.model};
    const cplx z_motor = motor.impedance_sys(std::clamp(slip, 1e-9, 1.0));
    double p_in = 0.0;
    for (int li : order.child_lines[nc.substation])
        p_in += (ps.v_bus[nc.substation] * std::conj(ps.i_line[li])).real();
    for (size_t d = 0; d < nc.dgs.size(); ++d) p_in += dg_pq[d].first;
    double p_out = 0.0;
    for (size_t li = 0; li < nc.loads.size(); ++li) {
        const LoadSpec& ld = nc.loads[li];
        const double vm = std::abs(ps.v_bus[nc.bus_index(ld.bus)]);
        if (ld.kind == LoadKind::Static && load_status[li]) p_out += ld.p0 * std::pow(vm, ld.kp);
        if (ld.kind == LoadKind::MotorEnergized) p_out += ld.p0;
        if (ld.kind == LoadKind::MotorRestart)
            p_out += (vm * vm) * (z_motor.real() / std::norm(z_motor));
    }
    for (int li : order.line_order)
        p_out += nc.lines[li].r * std::norm(ps.i_line[li]);
    return p_in - p_out;
}

double Trajectory::sample(const std::vector<double>& t, const std::vector<double>& y, double tq) {
    if (t.empty()) return 0.0;
    if (tq <= t.front()) return y.front();
    if (tq >= t.back()) return y.back();
    auto it = std::upper_bound(t.begin(), t.end(), tq);
    const size_t j = static_cast<size_t>(it - t.begin());
    const double w = (tq - t[j - 1]) / (t[j] - t[j - 1]);
    return y[j - 1] + w * (y[j] - y[j - 1]);
}

double Trajectory::time_at_slip(double s) const {
    for (size_t i = 0; i < slip.size(); ++i) {
        if (slip[i] <= s) {
            if (i == 0) return t[0];
            const double w = (slip[i - 1] - s) / (slip[i - 1] - slip[i]);
            return t[i - 1] + w * (t[i] - t[i - 1]);
        }
    }
    return -1.0;
}

Trajectory simulate_start(const NetworkCase& nc, const RestorationPlan& plan,
                          const SimConfig& cfg) {
    const RadialOrder order = radial_order(nc);
    const MotorModel& mm = nc.motor.model;
    const MechLoad& mech = nc.motor.mech;
    Trajectory traj;

    const ProtectionCurve* uv = nc.curve(CurveKind::Undervoltage);
    const ProtectionCurve* oc = nc.curve(CurveKind::Overcurrent);
    std::vector<int> prot_buses, prot_lines;
    for (size_t b = 0; b < nc.buses.size(); ++b)
        if (nc.buses[b].has_undervoltage_protection && static_cast<int>(b) != nc.substation) {
            prot_buses.push_back(static_cast<int>(b));
            traj.bus_labels.push_back(nc.buses[b].id);
        }
    for (size_t li = 0; li < nc.lines.size(); ++li)
        if (nc.lines[li].has_overcurrent_protection && nc.lines[li].closed) {
            prot_lines.push_back(static_cast<int>(li));
            traj.line_labels.push_back(nc.lines[li].from + "-" + nc.lines[li].to);
        }
    traj.v_bus.resize(prot_buses.size());
    traj.i_line.resize(prot_lines.size());

    auto dg_at = [&](double t_now) {
        std::vector<std::pair<double, double>> dg(nc.dgs.size(), {0.0, 0.0});
        for (size_t d = 0; d < nc.dgs.size(); ++d) {
            const auto& sp = plan.dg_setpoints[d];
            size_t idx = 0;
            if (plan.per_step_dg && sp.size() > 1) {
                while (idx + 1 < sp.size() && idx + 1 < plan.steps.size() &&
                       t_now > plan.steps[idx].t_end_exact)
                    ++idx;
            }
            dg[d] = sp[std::min(idx, sp.size() - 1)];
        }
        return dg;
    };

    auto slip_rate = [&](double s, double t_now) {
        const PhasorState ps = network_snapshot(nc, order, plan.load_status,
                                                std::clamp(s, 1e-9, 1.0), dg_at(t_now), cfg);
        const double v_sq = std::norm(ps.v_bus[nc.motor_bus]);
        const double sc = std::clamp(s, 1e-9, 1.0);
        const double t_ele = torque_gain(mm, sc) * v_sq;
        const double t_acc = t_ele - mech_torque(mech, std::clamp(s, 0.0, 1.0)) -
                             mm.k_d * (1.0 - sc);
        return -t_acc / (2.0 * mm.h);  // positive accelerating torque lowers the slip
    };

    double s = 1.0, t_now = 0.0;
    traj.events.push_back({0.0, "energization", "motor connected at slip 1"});
    double steady_since = -1.0, stall_since = -1.0;
    const double stall_slip_floor = plan.grid.steps.empty()
                                        ? 0.0
                                        : plan.grid.s_end + 2.0 * plan.grid.delta_s;

    const int n_steps = static_cast<int>(std::ceil(cfg.t_end / cfg.dt));
    for (int step = 0; step <= n_steps; ++step) {
        // record state at (t_now, s)
        const PhasorState ps = network_snapshot(nc, order, plan.load_status,
                                                std::clamp(s, 1e-9, 1.0), dg_at(t_now), cfg);
        const double v_sq = std::norm(ps.v_bus[nc.motor_bus]);
        const double sc = std::clamp(s, 1e-9, 1.0);
        const double t_ele = torque_gain(mm, sc) * v_sq;
        const double t_load = mech_torque(mech, std::clamp(s, 0.0, 1.0)) + mm.k_d * (1.0 - sc);
        traj.t.push_back(t_now);
        traj.slip.push_back(s);
        traj.v_motor.push_back(std::sqrt(v_sq));
        traj.t_ele.push_back(t_ele);
        traj.t_load.push_back(t_load);
        for (size_t i = 0; i < prot_buses.size(); ++i)
            traj.v_bus[i].push_back(std::abs(ps.v_bus[prot_buses[i]]));
        for (size_t i = 0; i < prot_lines.size(); ++i)
            traj.i_line[i].push_back(std::abs(ps.i_line[prot_lines[i]]));

        // protection trips against the true curves
        if (cfg.detect_events) {
            bool tripped = false;
            if (uv) {
                for (size_t i = 0; i < prot_buses.size(); ++i) {
                    bool active = false, any_load = false;
                    for (size_t li = 0; li < nc.loads.size(); ++li)
                        if (nc.bus_index(nc.loads[li].bus) == prot_buses[i]) {
                            any_load = true;
                            if (plan.load_status[li]) active = true;
                        }
                    if (any_load && !active) continue;
                    const double floor_sq = limit_at(*uv, t_now);
                    if (traj.v_bus[i].back() * traj.v_bus[i].back() < floor_sq - 1e-12) {
                        traj.events.push_back({t_now, "trip",
                                               "under-voltage at node " + traj.bus_labels[i]});
                        tripped = true;
                    }
                }
            }
            if (oc) {
                for (size_t i = 0; i < prot_lines.size(); ++i) {
                    const double cap_sq =
                        limit_at(*oc, t_now) * nc.lines[prot_lines[i]].ampacity_sq;
                    const double ii = traj.i_line[i].back();
                    if (ii * ii > cap_sq + 1e-12) {
                        traj.events.push_back({t_now, "trip",
                                               "over-current on line " + traj.line_labels[i]});
                        tripped = true;
                    }
                }
            }
            if (tripped) {
                traj.tripped = true;
                return traj;
            }
        }

        const double rate = -(t_ele - t_load) / (2.0 * mm.h);
        if (cfg.detect_events) {
            if (std::abs(rate) <= cfg.steady_slip_rate) {
                if (steady_since < 0.0) steady_since = t_now;
                if (t_now - steady_since >= cfg.steady_window) {
                    traj.steady = true;
                    traj.events.push_back({t_now, "steady_state",
                                           "slip settled at " + std::to_string(s)});
                    return traj;
                }
            } else {
                steady_since = -1.0;
            }
            if (-rate <= cfg.stall_slip_rate && s > stall_slip_floor && stall_slip_floor > 0.0) {
                if (stall_since < 0.0) stall_since = t_now;
                if (t_now - stall_since >= cfg.stall_window) {
                    traj.stalled = true;
                    traj.events.push_back({t_now, "stall",
                                           "no slip progress at slip " + std::to_string(s)});
                    return traj;
                }
            } else {
                stall_since = -1.0;
            }
        }
        if (step == n_steps) break;

        // integrate one step, network re-solved at every stage slip
        const double h = cfg.dt;
        if (cfg.integrator == SimConfig::Integrator::Rk4) {
            const double k1 = rate;
            const double k2 = slip_rate(s + 0.5 * h * k1, t_now + 0.5 * h);
            const double k3 = slip_rate(s + 0.5 * h * k2, t_now + 0.5 * h);
            const double k4 = slip_rate(s + h * k3, t_now + h);
            s += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        } else {
            // trapezoidal with one fixed-point pass
            const double k1 = rate;
            const double k2 = slip_rate(s + h * k1, t_now + h);
            s += 0.5 * h * (k1 + k2);
        }
        s = std::clamp(s, 1e-9, 1.0);
        t_now += h;
    }
    traj.horizon = true;
    traj.events.push_back({t_now, "end_of_horizon", "t_end reached"});
    return traj;
}

MarginReport verify_protection(const Trajectory& traj, const NetworkCase& nc) {
    MarginReport rep;
    const ProtectionCurve* uv = nc.curve(CurveKind::Undervoltage);
    const ProtectionCurve* oc = nc.curve(CurveKind::Overcurrent);
    if (uv) {
        for (size_t i = 0; i < traj.bus_labels.size(); ++i) {
            MarginEntry e;
            e.where = "node " + traj.bus_labels[i];
            for (size_t k = 0; k < traj.t.size(); ++k) {
                const double m = traj.v_bus[i][k] - std::sqrt(limit_at(*uv, traj.t[k]));
                if (m < e.margin) {
                    e.margin = m;
                    e.at_time = traj.t[k];
                }
            }
            rep.min_node_margin = std::min(rep.min_node_margin, e.margin);
            if (e.margin < 0.0) rep.any_trip = true;
            rep.nodes.push_back(std::move(e));
        }
    }
    if (oc) {
        for (size_t i = 0; i < traj.line_labels.size(); ++i) {
            int line_idx = -1;
            for (size_t li = 0; li < nc.lines.size(); ++li)
                if (nc.lines[li].from + "-" + nc.lines[li].to == traj.line_labels[i])
                    line_idx = static_cast<int>(li);
            MarginEntry e;
            e.where = "line " + traj.line_labels[i];
            for (size_t k = 0; k < traj.t.size(); ++k) {
                const double cap =
                    std::sqrt(limit_at(*oc, traj.t[k]) * nc.lines[line_idx].ampacity_sq);
                const double m = cap - traj.i_line[i][k];
                if (m < e.margin) {
                    e.margin = m;
                    e.at_time = traj.t[k];
                }
            }
            rep.min_line_margin = std::min(rep.min_line_margin, e.margin);
            if (e.margin < 0.0) rep.any_trip = true;
            rep.lines.push_back(std::move(e));
        }
    }
    if (traj.tripped) rep.any_trip = true;
    return rep;
}

DeviationReport compare_with_plan(const Trajectory& traj, const RestorationPlan& plan,
                                  const NetworkCase& nc) {
    DeviationReport rep;
    const int K = static_cast<int>(plan.steps.size());
    const double s_last = plan.grid.steps.back();
    rep.partial = traj.final_slip() > s_last;

    for (int k = 0; k < K; ++k) {
        const double t_q = plan.steps[k].t_end_exact;
        const double v_plan = std::sqrt(plan.steps[k].v_motor_sq);
        const double v_sim = Trajectory::sample(traj.t, traj.v_motor, t_q);
        const double dv = std::abs(v_sim - v_plan) / std::max(1e-9, v_plan);
        rep.v_dev_rel.push_back(dv);
        rep.max_v_dev = std::max(rep.max_v_dev, dv);

        double worst_i = 0.0;
        for (size_t i = 0; i < traj.line_labels.size(); ++i) {
            int line_idx = -1;
            for (size_t li = 0; li < nc.lines.size(); ++li)
                if (nc.lines[li].from + "-" + nc.lines[li].to == traj.line_labels[i])
                    line_idx = static_cast<int>(li);
            const double i_plan = std::sqrt(std::max(
                0.0, plan.f_sq[k][line_idx]));
            if (i_plan < 1e-6) continue;
            const double i_sim = Trajectory::sample(traj.t, traj.i_line[i], t_q);
            worst_i = std::max(worst_i, std::abs(i_sim - i_plan) / i_plan);
        }
        rep.i_dev_rel.push_back(worst_i);

        // arrival alignment at grid slip steps[k]
        const double t_plan = plan.arrival_time(k);
        const double t_sim = traj.time_at_slip(plan.grid.steps[k]);
        rep.t_arr_plan.push_back(t_plan);
        rep.t_arr_sim.push_back(t_sim);
        if (k > 0 && t_plan > 1e-9 && t_sim >= 0.0) {
            const double dt_rel = std::abs(t_sim - t_plan) / t_plan;
            rep.t_dev_rel.push_back(dt_rel);
            rep.max_t_dev = std::max(rep.max_t_dev, dt_rel);
        } else {
            rep.t_dev_rel.push_back(0.0);
        }
    }
    return rep;
}

void write_trajectory_csv(const Trajectory& traj, std::ostream& os) {
    os << "t,slip,v_motor,t_ele,t_load";
    for (const std::string& l : traj.line_labels) os << ",i_" << l;
    for (const std::string& b : traj.bus_labels) os << ",v_" << b;
    os << "\n";
    char buf[64];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.12g", v);
        os << buf;
    };
    for (size_t k = 0; k < traj.t.size(); ++k) {
        put(traj.t[k]);
        os << ",";
        put(traj.slip[k]);
        os << ",";
        put(traj.v_motor[k]);
        os << ",";
        put(traj.t_ele[k]);
        os << ",";
        put(traj.t_load[k]);
        for (const auto& ch : traj.i_line) {
            os << ",";
            put(ch[k]);
        }
        for (const auto& ch : traj.v_bus) {
            os << ",";
            put(ch[k]);
        }
        os << "\n";
    }
}

void write_event_log(const Trajectory& traj, std::ostream& os) {
    char buf[64];
    for (const SimEvent& e : traj.events) {
        std::snprintf(buf, sizeof(buf), "%.6f", e.t);
        os << buf << " " << e.kind << " " << e.detail << "\n";
    }
}

}  // namespace reaccel

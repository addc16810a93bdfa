#include "reaccel/cli.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "reaccel/digest.hpp"
#include "reaccel/report.hpp"
#include "reaccel/restoration.hpp"
#include "reaccel/simulator.hpp"

namespace reaccel {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CaseError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const fs::path& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary);
    out << data;
}

std::string solve_flags_string(const SolveOptions& o) {
    std::ostringstream ss;
    ss << "steps=" << o.steps << ";pwl=" << o.pwl_breakpoints << ";per_step_dg=" << o.per_step_dg
       << ";gap=" << o.gap;
    return ss.str();
}

json plan_summary_json(const RestorationPlan& plan, const NetworkCase& nc) {
    json shed = json::array(), kept = json::array();
    for (size_t li = 0; li < plan.load_status.size(); ++li) {
        if (nc.loads[li].kind != LoadKind::Static) continue;
        (plan.load_status[li] ? kept : shed).push_back(nc.loads[li].bus);
    }
    json dg = json::array();
    for (size_t d = 0; d < plan.dg_setpoints.size(); ++d)
        dg.push_back({{"bus", nc.dgs[d].bus},
                      {"p", plan.dg_setpoints[d][0].first},
                      {"q", plan.dg_setpoints[d][0].second},
                      {"per_step", plan.per_step_dg}});
    json j;
    j["shed"] = shed;
    j["kept"] = kept;
    j["dg_setpoints"] = dg;
    j["f_re_raw"] = plan.f_re_raw;
    j["f_re_normalized"] = plan.f_re_normalized;
    j["f_op_raw"] = plan.f_op_raw;
    j["f_op_normalized"] = plan.f_op_normalized;
    j["objective"] = plan.objective;
    j["min_uv_margin"] = std::isfinite(plan.min_uv_margin) ? json(plan.min_uv_margin) : json();
    j["min_uv_margin_at"] = plan.min_uv_margin_bus;
    j["min_uv_margin_step"] = plan.min_uv_margin_step;
    j["min_oc_margin"] = std::isfinite(plan.min_oc_margin) ? json(plan.min_oc_margin) : json();
    j["min_oc_margin_at"] = plan.min_oc_margin_line;
    j["min_oc_margin_step"] = plan.min_oc_margin_step;
    j["max_cone_residual"] = plan.max_cone_residual;
    j["total_time_exact"] = plan.steps.empty() ? 0.0 : plan.steps.back().t_end_exact;
    return j;
}

}  // namespace

int cmd_validate(const std::string& case_path, bool quiet) {
    try {
        const NetworkCase nc = load_case_file(case_path);
        json out;
        out["status"] = "ok";
        out["scenario"] = nc.scenario_id;
        out["buses"] = nc.buses.size();
        out["lines"] = nc.lines.size();
        out["loads"] = nc.loads.size();
        out["dgs"] = nc.dgs.size();
        int off = 0, shed = 0;
        for (const Bus& b : nc.buses) off += b.in_off_outage_area ? 1 : 0;
        for (const LoadSpec& ld : nc.loads)
            if (ld.kind == LoadKind::Static && ld.sheddable &&
                nc.buses[nc.bus_index(ld.bus)].in_off_outage_area)
                ++shed;
        out["off_outage_buses"] = off;
        out["sheddable_loads"] = shed;
        out["digest"] = fnv1a_digest(slurp(case_path));
        if (!quiet) std::cout << out.dump(2) << "\n";
        return kOk;
    } catch (const std::exception& e) {
        json out;
        out["status"] = "error";
        out["message"] = e.what();
        if (!quiet) std::cout << out.dump(2) << "\n";
        return kInput;
    }
}

int cmd_solve(const std::string& case_path, const SolveOptions& opts) {
    NetworkCase nc;
    std::string case_text;
    try {
        case_text = slurp(case_path);
        nc = load_case(case_text);
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    }
    try {
        const auto t0 = std::chrono::steady_clock::now();
        fs::create_directories(opts.out_dir);

        BuildOptions bopt;
        bopt.steps = opts.steps;
        bopt.pwl_breakpoints = opts.pwl_breakpoints;
        bopt.per_step_dg = opts.per_step_dg;
        BuiltProblem bp;
        try {
            bp = build_problem(nc, bopt);
        } catch (const RestorationError& e) {
            std::cerr << "infeasible by construction: " << e.what() << "\n";
            return kInfeasible;
        }
        if (opts.dump_program) {
            std::ofstream os(fs::path(opts.out_dir) / "program.txt");
            bp.prog.dump(os);
        }

        std::ofstream log(fs::path(opts.out_dir) / "solver_log.txt");
        BnbSettings bs;
        bs.gap_tol = opts.gap;
        bs.time_limit = opts.time_limit;
        bs.node_limit = opts.node_limit;
        bs.workers = opts.workers;
        bs.log = &log;
        const BnbResult r = solve_misocp(bp.prog, bs);
        if (!r.has_incumbent) {
            const SocpSolution root = solve_socp(bp.prog, bs.socp);
            std::cerr << "no feasible plan found (search status "
                      << static_cast<int>(r.status) << ", " << r.nodes
                      << " nodes); root relaxation status " << static_cast<int>(root.status)
                      << " " << root.message << "\n";
            return kInfeasible;
        }
        const RestorationPlan plan = decode(bp, nc, r.incumbent.x);

        const std::string flags = solve_flags_string(opts);
        const std::string digest = fnv1a_digest(case_text + "|" + flags);
        spit(fs::path(opts.out_dir) / "plan.json", plan_to_json(plan, nc, digest, flags));

        json rep;
        rep["format"] = "reaccel-report-1";
        rep["case_digest"] = digest;
        rep["case_path"] = fs::path(case_path).filename().string();
        rep["scenario"] = nc.scenario_id;
        rep["flags"] = solve_flags_string(opts);
        rep["plan"] = plan_summary_json(plan, nc);
        rep["solver"] = {{"status", static_cast<int>(r.status)},
                         {"nodes", r.nodes},
                         {"gap", r.gap},
                         {"best_bound", r.best_bound},
                         {"objective", r.incumbent.objective},
                         {"iterations_last", r.incumbent.iterations}};
        spit(fs::path(opts.out_dir) / "report.json", rep.dump(2) + "\n");

        json meta;
        meta["created_unix"] =
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch()).count();
        meta["solve_wall_s"] = r.wall_time;
        meta["total_wall_s"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        spit(fs::path(opts.out_dir) / "meta.json", meta.dump(2) + "\n");

        if (!opts.quiet) {
            std::cout << "plan written to " << (fs::path(opts.out_dir) / "plan.json").string()
                      << "\n";
            std::cout << rep["plan"].dump(2) << "\n";
        }
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

int cmd_check(const std::string& case_path, const std::string& plan_path,
              const CheckOptions& opts) {
    NetworkCase nc;
    RestorationPlan plan;
    std::string digest;
    fs::path out_dir;
    try {
        nc = load_case(slurp(case_path));
        plan = plan_from_json(slurp(plan_path), nc, &digest);
        out_dir = opts.out_dir.empty() ? fs::path(plan_path).parent_path()
                                       : fs::path(opts.out_dir);
        if (out_dir.empty()) out_dir = ".";
    } catch (const std::exception& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kInput;
    }
    // the digest embeds the solve flags, so check the case-content prefix only
    const std::string case_text = slurp(case_path);
    bool digest_ok = false;
    for (const char* flags : {"", ";"}) {
        (void)flags;
    }
    // recompute over all plausible flags is impossible; plans therefore store
    // the digest of case+flags and check.json records both sides
    {
        // A plan matches when its digest was derived from this exact case
        // text under some flags: verify by re-deriving with the flags string
        // recovered from the run report when present, else accept only exact
        // case-hash prefix documents.
        // Simpler contract: the solve digest is fnv1a(case_text + "|" + flags).
        // We re-derive candidate digests for the plan's own grid size.
        for (int pwl = 2; pwl <= 24 && !digest_ok; ++pwl)
            for (int per : {0, 1}) {
                SolveOptions probe;
                probe.steps = static_cast<int>(plan.grid.steps.size());
                probe.pwl_breakpoints = pwl;
                probe.per_step_dg = per != 0;
                std::ostringstream ss;
                ss << "steps=" << probe.steps << ";pwl=" << probe.pwl_breakpoints
                   << ";per_step_dg=" << probe.per_step_dg << ";gap=";
                if (digest.size() == 16 &&
                    fnv1a_digest(case_text + "|" + solve_flags_string(probe)) == digest) {
                    digest_ok = true;
                    break;
                }
            }
    }
    if (!digest_ok) {
        std::cerr << "digest mismatch: plan was not produced from this case document\n";
        return kMismatch;
    }
    try {
        SimConfig cfg;
        cfg.dt = opts.sim_dt;
        const Trajectory traj = simulate_start(nc, plan, cfg);
        const MarginReport margins = verify_protection(traj, nc);
        const DeviationReport dev = compare_with_plan(traj, plan, nc);

        const bool pass = !traj.stalled && !traj.tripped && !margins.any_trip && !dev.partial &&
                          dev.max_v_dev <= opts.max_voltage_dev &&
                          dev.max_t_dev <= opts.max_timing_dev;

        {
            std::ofstream os(out_dir / "trajectory.csv");
            write_trajectory_csv(traj, os);
        }
        {
            std::ofstream os(out_dir / "events.txt");
            write_event_log(traj, os);
        }
        json chk;
        chk["format"] = "reaccel-check-1";
        chk["case_digest"] = digest;
        chk["verdict"] = pass ? "PASS" : "FAIL";
        chk["stalled"] = traj.stalled;
        chk["tripped"] = traj.tripped || margins.any_trip;
        chk["steady_state"] = traj.steady;
        chk["partial_comparison"] = dev.partial;
        chk["max_voltage_dev"] = dev.max_v_dev;
        chk["max_timing_dev"] = dev.max_t_dev;
        chk["final_slip"] = traj.final_slip();
        chk["node_margins"] = json::array();
        for (const MarginEntry& e : margins.nodes)
            chk["node_margins"].push_back({{"where", e.where}, {"margin", e.margin},
                                           {"at_time", e.at_time}});
        chk["line_margins"] = json::array();
        for (const MarginEntry& e : margins.lines)
            chk["line_margins"].push_back({{"where", e.where}, {"margin", e.margin},
                                           {"at_time", e.at_time}});
        chk["events"] = json::array();
        for (const SimEvent& e : traj.events)
            chk["events"].push_back({{"t", e.t}, {"kind", e.kind}, {"detail", e.detail}});
        spit(out_dir / "check.json", chk.dump(2) + "\n");

        if (!opts.quiet) std::cout << chk.dump(2) << "\n";
        return pass ? kOk : kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

int cmd_report(const std::string& run_dir, bool quiet) {
    const fs::path dir(run_dir);
    if (!fs::exists(dir / "trajectory.csv") || !fs::exists(dir / "plan.json")) {
        std::cerr << "missing artifacts in '" << run_dir
                  << "' (need plan.json and trajectory.csv from solve + check)\n";
        return kInput;
    }
    try {
        // parse the trajectory back
        std::ifstream csv(dir / "trajectory.csv");
        std::string header;
        std::getline(csv, header);
        std::vector<std::string> cols;
        {
            std::stringstream ss(header);
            std::string c;
            while (std::getline(ss, c, ',')) cols.push_back(c);
        }
        std::vector<std::vector<double>> data(cols.size());
        std::string line;
        while (std::getline(csv, line)) {
            if (line.empty()) continue;
            std::stringstream ss(line);
            std::string cell;
            size_t i = 0;
            while (std::getline(ss, cell, ',') && i < cols.size()) data[i++].push_back(std::stod(cell));
        }

        json plan = json::parse(slurp((dir / "plan.json").string()));
        std::vector<double> tk, slip_k, vmag_k, tele_k, uv_k, oc_k;
        for (const auto& st : plan["steps"]) {
            tk.push_back(st["t_end_exact"].get<double>());
            slip_k.push_back(st["slip"].get<double>());
            vmag_k.push_back(std::sqrt(st["v_motor_sq"].get<double>()));
            tele_k.push_back(st["t_ele"].get<double>());
            uv_k.push_back(st["uv_floor_sq"].get<double>());
            oc_k.push_back(st["oc_mult"].get<double>());
        }

        std::vector<std::string> manifest;
        auto emit_csv = [&](const std::string& name, const std::vector<std::string>& hdr,
                            const std::vector<const std::vector<double>*>& series) {
            std::ostringstream os;
            for (size_t i = 0; i < hdr.size(); ++i) os << (i ? "," : "") << hdr[i];
            os << "\n";
            size_t rows = 0;
            for (auto* s : series) rows = std::max(rows, s->size());
            char buf[48];
            for (size_t r = 0; r < rows; ++r) {
                for (size_t i = 0; i < series.size(); ++i) {
                    if (i) os << ",";
                    if (r < series[i]->size()) {
                        std::snprintf(buf, sizeof(buf), "%.12g", (*series[i])[r]);
                        os << buf;
                    }
                }
                os << "\n";
            }
            spit(dir / name, os.str());
            manifest.push_back(name);
        };

        {
            SvgPlot p("Motor slip", "time [s]", "slip [-]");
            p.add_line("simulator", data[0], data[1], "#1f77b4");
            p.add_points("plan steps", tk, slip_k, "#d62728");
            spit(dir / "fig_slip.svg", p.render());
            manifest.push_back("fig_slip.svg");
            emit_csv("fig_slip.csv", {"t_sim", "slip_sim", "t_plan", "slip_plan"},
                     {&data[0], &data[1], &tk, &slip_k});
        }
        {
            SvgPlot p("Electrical and load torque", "time [s]", "torque [p.u.]");
            p.add_line("T_ele simulator", data[0], data[2 + 1], "#1f77b4");
            p.add_line("T_load simulator", data[0], data[4], "#2ca02c");
            p.add_points("T_ele plan", tk, tele_k, "#d62728");
            spit(dir / "fig_torque.svg", p.render());
            manifest.push_back("fig_torque.svg");
            emit_csv("fig_torque.csv", {"t_sim", "t_ele_sim", "t_load_sim", "t_plan", "t_ele_plan"},
                     {&data[0], &data[3], &data[4], &tk, &tele_k});
        }

        // protected-line current and protected-node voltage panels
        int i_col = -1, v_col = -1;
        for (size_t c = 0; c < cols.size(); ++c) {
            if (i_col < 0 && cols[c].rfind("i_", 0) == 0) i_col = static_cast<int>(c);
            if (v_col < 0 && cols[c].rfind("v_", 0) == 0 && cols[c] != "v_motor")
                v_col = static_cast<int>(c);
        }
        json chk;
        if (fs::exists(dir / "check.json")) chk = json::parse(slurp((dir / "check.json").string()));

        if (i_col >= 0) {
            NetworkCase nc;  // limits come from the case curves; reconstruct from plan only
            SvgPlot p("Current at " + cols[i_col].substr(2), "time [s]", "current [p.u.]");
            p.add_line("simulator", data[0], data[i_col], "#1f77b4");
            spit(dir / "fig_current.svg", p.render());
            manifest.push_back("fig_current.svg");
            emit_csv("fig_current.csv", {"t_sim", "i_sim"}, {&data[0], &data[i_col]});
        } else {
            manifest.push_back("# no over-current protection configured; current panel omitted");
        }
        if (v_col >= 0) {
            SvgPlot p("Voltage at " + cols[v_col].substr(2), "time [s]", "voltage [p.u.]");
            p.add_line("simulator", data[0], data[v_col], "#1f77b4");
            spit(dir / "fig_voltage.svg", p.render());
            manifest.push_back("fig_voltage.svg");
            emit_csv("fig_voltage.csv", {"t_sim", "v_sim"}, {&data[0], &data[v_col]});
        } else {
            manifest.push_back("# no under-voltage protection configured; voltage panel omitted");
        }

        std::ostringstream mf;
        for (const std::string& m : manifest) mf << m << "\n";
        spit(dir / "manifest.txt", mf.str());
        if (!quiet) std::cout << mf.str();
        return kOk;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kInternal;
    }
}

}  // namespace reaccel

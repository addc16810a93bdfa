#include "reaccel/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace reaccel {

using nlohmann::json;

namespace {

void reject_unknown(const json& obj, std::initializer_list<const char*> keys,
                    const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (std::find_if(keys.begin(), keys.end(),
                         [&](const char* k) { return it.key() == k; }) == keys.end())
            throw CaseError("unknown key '" + it.key() + "' in " + where);
    }
}

double get_num(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw CaseError("missing field '" + std::string(key) + "' in " + where);
    if (!obj[key].is_number()) throw CaseError("field '" + std::string(key) + "' in " + where + " must be a number");
    return obj[key].get<double>();
}

double get_num_or(const json& obj, const char* key, double dflt) {
    return obj.contains(key) ? obj[key].get<double>() : dflt;
}

std::string get_str(const json& obj, const char* key, const std::string& where) {
    if (!obj.contains(key)) throw CaseError("missing field '" + std::string(key) + "' in " + where);
    if (!obj[key].is_string()) throw CaseError("field '" + std::string(key) + "' in " + where + " must be a string");
    return obj[key].get<std::string>();
}

bool get_bool_or(const json& obj, const char* key, bool dflt, const std::string& where) {
    if (!obj.contains(key)) return dflt;
    if (!obj[key].is_boolean()) throw CaseError("field '" + std::string(key) + "' in " + where + " must be a boolean");
    return obj[key].get<bool>();
}

}  // namespace

int NetworkCase::bus_index(const std::string& id) const {
    for (size_t i = 0; i < buses.size(); ++i)
        if (buses[i].id == id) return static_cast<int>(i);
    return -1;
}

const ProtectionCurve* NetworkCase::curve(CurveKind kind) const {
    for (const auto& c : curves)
        if (c.kind == kind) return &c;
    return nullptr;
}

bool NetworkCase::has_protected_nodes() const {
    return std::any_of(buses.begin(), buses.end(),
                       [](const Bus& b) { return b.has_undervoltage_protection; });
}

bool NetworkCase::has_protected_lines() const {
    return std::any_of(lines.begin(), lines.end(),
                       [](const Line& l) { return l.has_overcurrent_protection; });
}

ProtectionCurve default_curve(CurveKind kind) {
    ProtectionCurve c;
    c.kind = kind;
    if (kind == CurveKind::Undervoltage) {
        // squared-voltage floor: 0.80^2 up to 2 s, then linear to 0.95^2 at 10 s
        c.samples = {{0.0, 0.64}, {2.0, 0.64}, {10.0, 0.9025}};
    } else {
        // multiple of the squared ampacity: 6.0 up to 1 s, then linear to 1.0 at 10 s
        c.samples = {{0.0, 6.0}, {1.0, 6.0}, {10.0, 1.0}};
    }
    return c;
}

namespace {

void validate_case(NetworkCase& nc) {
    if (!(nc.s_base > 0.0) || !(nc.v_base > 0.0))
        throw CaseError("bases: s_base and v_base must be > 0");
    if (!(nc.v_substation_sq > 0.0))
        throw CaseError("scenario.v_substation_sq must be > 0");

    // bus ids unique, exactly one substation
    std::set<std::string> ids;
    nc.substation = -1;
    for (size_t i = 0; i < nc.buses.size(); ++i) {
        const Bus& b = nc.buses[i];
        if (!ids.insert(b.id).second) throw CaseError("duplicate bus id '" + b.id + "'");
        if (b.is_substation) {
            if (nc.substation >= 0) throw CaseError("multiple substations");
            nc.substation = static_cast<int>(i);
        }
    }
    if (nc.substation < 0) throw CaseError("no substation bus");

    for (size_t li = 0; li < nc.lines.size(); ++li) {
        const Line& l = nc.lines[li];
        const std::string where = "lines[" + std::to_string(li) + "]";
        if (nc.bus_index(l.from) < 0) throw CaseError(where + ": unknown bus '" + l.from + "'");
        if (nc.bus_index(l.to) < 0) throw CaseError(where + ": unknown bus '" + l.to + "'");
        if (l.r < 0.0) throw CaseError(where + ": r must be >= 0");
        if (!(l.ampacity_sq > 0.0)) throw CaseError(where + ": ampacity_sq must be > 0");
    }

    // closed lines form a spanning tree rooted at the substation (union-find)
    const size_t nb = nc.buses.size();
    std::vector<int> uf(nb);
    std::iota(uf.begin(), uf.end(), 0);
    auto find = [&](int a) {
        while (uf[a] != a) a = uf[a] = uf[uf[a]];
        return a;
    };
    size_t n_closed = 0;
    for (const Line& l : nc.lines) {
        if (!l.closed) continue;
        ++n_closed;
        const int a = find(nc.bus_index(l.from));
        const int b = find(nc.bus_index(l.to));
        if (a == b) throw CaseError("network not radial: closed lines contain a cycle");
        uf[a] = b;
    }
    if (n_closed != nb - 1) throw CaseError("network not radial: closed lines do not span all buses");
    for (size_t i = 0; i < nb; ++i)
        if (find(static_cast<int>(i)) != find(nc.substation))
            throw CaseError("network not radial: bus '" + nc.buses[i].id + "' not connected");

    // loads
    nc.motor_load = -1;
    for (size_t i = 0; i < nc.loads.size(); ++i) {
        const LoadSpec& ld = nc.loads[i];
        const std::string where = "loads[" + std::to_string(i) + "]";
        const int bi = nc.bus_index(ld.bus);
        if (bi < 0) throw CaseError(where + ": unknown bus '" + ld.bus + "'");
        if (bi == nc.substation) throw CaseError(where + ": substation bus carries no load");
        if (ld.p0 < 0.0) throw CaseError(where + ": p0 must be >= 0");
        if (ld.kind == LoadKind::MotorRestart) {
            if (nc.motor_load >= 0) throw CaseError("more than one motor_restart load");
            nc.motor_load = static_cast<int>(i);
        }
    }
    if (nc.motor_load < 0) throw CaseError("no motor_restart load");
    if (nc.loads[nc.motor_load].bus != nc.motor.bus)
        throw CaseError("motor_restart load bus '" + nc.loads[nc.motor_load].bus +
                        "' does not match motor.bus '" + nc.motor.bus + "'");
    nc.motor_bus = nc.bus_index(nc.motor.bus);
    if (nc.motor_bus < 0) throw CaseError("motor.bus '" + nc.motor.bus + "' is unknown");

    nc.motor.model.validate("motor");
    if (!(nc.motor.s_base > 0.0) || !(nc.motor.v_base > 0.0))
        throw CaseError("motor: s_base and v_base must be > 0");
    if (std::abs(nc.motor.v_base - nc.v_base) > 1e-9 * nc.v_base)
        throw CaseError("motor.v_base must equal the system v_base (no interposing transformer model)");
    if (nc.motor.mech.t_nom < 0.0) throw CaseError("motor.mech_load.t_nom must be >= 0");

    for (size_t i = 0; i < nc.dgs.size(); ++i) {
        const DgSpec& dg = nc.dgs[i];
        const std::string where = "dgs[" + std::to_string(i) + "]";
        if (nc.bus_index(dg.bus) < 0) throw CaseError(where + ": unknown bus '" + dg.bus + "'");
        if (!(dg.p_max >= 0.0 && dg.p_max <= dg.s_max))
            throw CaseError(where + ": requires 0 <= p_max <= s_max");
        if (!(dg.q_min <= 0.0 && 0.0 <= dg.q_max))
            throw CaseError(where + ": requires q_min <= 0 <= q_max");
    }

    std::set<int> seen_kinds;
    for (size_t i = 0; i < nc.curves.size(); ++i) {
        nc.curves[i].validate("protection_curves[" + std::to_string(i) + "]");
        if (!seen_kinds.insert(static_cast<int>(nc.curves[i].kind)).second)
            throw CaseError("duplicate protection curve kind");
    }
    if (nc.has_protected_nodes() && !nc.curve(CurveKind::Undervoltage))
        nc.curves.push_back(default_curve(CurveKind::Undervoltage));
    if (nc.has_protected_lines() && !nc.curve(CurveKind::Overcurrent))
        nc.curves.push_back(default_curve(CurveKind::Overcurrent));

    // Resolve the off-outage area: explicit flags win; otherwise every bus
    // downstream of a closed tie switch is in it.
    const bool any_explicit = std::any_of(nc.buses.begin(), nc.buses.end(),
                                          [](const Bus& b) { return b.off_outage_explicit; });
    if (!any_explicit) {
        const RadialOrder ro = radial_order(nc);
        for (size_t li = 0; li < nc.lines.size(); ++li) {
            if (!nc.lines[li].tie || !nc.lines[li].closed) continue;
            // mark the subtree hanging below this line
            const int head = ro.down_bus[li];
            for (size_t b = 0; b < nb; ++b) {
                int cur = static_cast<int>(b);
                while (cur >= 0) {
                    if (cur == head) {
                        nc.buses[b].in_off_outage_area = true;
                        break;
                    }
                    cur = ro.parent_bus[cur];
                }
            }
        }
    }
    if (nc.buses[nc.substation].in_off_outage_area)
        throw CaseError("substation cannot be in the off-outage area");
}

}  // namespace

NetworkCase load_case(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw CaseError(std::string("parse error: ") + e.what());
    }
    if (!doc.is_object()) throw CaseError("case document must be a JSON object");
    reject_unknown(doc, {"bases", "buses", "lines", "loads", "dgs", "motor",
                         "protection_curves", "weights", "scenario"},
                   "top level");

    NetworkCase nc;

    {
        if (!doc.contains("bases")) throw CaseError("missing 'bases'");
        const json& b = doc["bases"];
        reject_unknown(b, {"s_base", "v_base"}, "bases");
        nc.s_base = get_num(b, "s_base", "bases");
        nc.v_base = get_num(b, "v_base", "bases");
    }

    if (doc.contains("scenario")) {
        const json& s = doc["scenario"];
        reject_unknown(s, {"id", "v_substation_sq", "description"}, "scenario");
        nc.scenario_id = s.contains("id") ? get_str(s, "id", "scenario") : "";
        nc.v_substation_sq = get_num_or(s, "v_substation_sq", 1.0);
        if (s.contains("description")) nc.scenario_description = get_str(s, "description", "scenario");
    }

    if (!doc.contains("buses") || !doc["buses"].is_array()) throw CaseError("missing 'buses' array");
    for (size_t i = 0; i < doc["buses"].size(); ++i) {
        const json& jb = doc["buses"][i];
        const std::string where = "buses[" + std::to_string(i) + "]";
        reject_unknown(jb, {"id", "is_substation", "has_undervoltage_protection", "in_off_outage_area"}, where);
        Bus b;
        b.id = get_str(jb, "id", where);
        b.is_substation = get_bool_or(jb, "is_substation", false, where);
        b.has_undervoltage_protection = get_bool_or(jb, "has_undervoltage_protection", false, where);
        if (jb.contains("in_off_outage_area")) {
            b.in_off_outage_area = get_bool_or(jb, "in_off_outage_area", false, where);
            b.off_outage_explicit = true;
        }
        nc.buses.push_back(std::move(b));
    }

    if (!doc.contains("lines") || !doc["lines"].is_array()) throw CaseError("missing 'lines' array");
    for (size_t i = 0; i < doc["lines"].size(); ++i) {
        const json& jl = doc["lines"][i];
        const std::string where = "lines[" + std::to_string(i) + "]";
        reject_unknown(jl, {"from", "to", "r", "x", "ampacity_sq", "has_overcurrent_protection",
                            "switch_state", "tie"},
                       where);
        Line l;
        l.from = get_str(jl, "from", where);
        l.to = get_str(jl, "to", where);
        l.r = get_num(jl, "r", where);
        l.x = get_num(jl, "x", where);
        l.ampacity_sq = get_num(jl, "ampacity_sq", where);
        l.has_overcurrent_protection = get_bool_or(jl, "has_overcurrent_protection", false, where);
        const std::string st = jl.contains("switch_state") ? get_str(jl, "switch_state", where) : "closed";
        if (st != "closed" && st != "open")
            throw CaseError(where + ": switch_state must be 'closed' or 'open'");
        l.closed = (st == "closed");
        l.tie = get_bool_or(jl, "tie", false, where);
        nc.lines.push_back(std::move(l));
    }

    if (!doc.contains("loads") || !doc["loads"].is_array()) throw CaseError("missing 'loads' array");
    for (size_t i = 0; i < doc["loads"].size(); ++i) {
        const json& jl = doc["loads"][i];
        const std::string where = "loads[" + std::to_string(i) + "]";
        reject_unknown(jl, {"bus", "p0", "q0", "kind", "kp", "kq", "priority", "sheddable"}, where);
        LoadSpec ld;
        ld.bus = get_str(jl, "bus", where);
        ld.p0 = get_num(jl, "p0", where);
        ld.q0 = get_num(jl, "q0", where);
        const std::string kind = jl.contains("kind") ? get_str(jl, "kind", where) : "static";
        if (kind == "static")
            ld.kind = LoadKind::Static;
        else if (kind == "motor_energized")
            ld.kind = LoadKind::MotorEnergized;
        else if (kind == "motor_restart")
            ld.kind = LoadKind::MotorRestart;
        else
            throw CaseError(where + ": kind must be static|motor_energized|motor_restart");
        ld.kp = get_num_or(jl, "kp", 2.0);
        ld.kq = get_num_or(jl, "kq", 2.0);
        ld.priority = get_num_or(jl, "priority", 1.0);
        ld.sheddable = get_bool_or(jl, "sheddable", false, where);
        nc.loads.push_back(std::move(ld));
    }

    if (doc.contains("dgs")) {
        for (size_t i = 0; i < doc["dgs"].size(); ++i) {
            const json& jd = doc["dgs"][i];
            const std::string where = "dgs[" + std::to_string(i) + "]";
            reject_unknown(jd, {"bus", "p_max", "q_min", "q_max", "s_max"}, where);
            DgSpec dg;
            dg.bus = get_str(jd, "bus", where);
            dg.p_max = get_num(jd, "p_max", where);
            dg.q_min = get_num(jd, "q_min", where);
            dg.q_max = get_num(jd, "q_max", where);
            dg.s_max = get_num(jd, "s_max", where);
            nc.dgs.push_back(std::move(dg));
        }
    }

    {
        if (!doc.contains("motor")) throw CaseError("missing 'motor'");
        const json& jm = doc["motor"];
        reject_unknown(jm, {"bus", "units", "r_s", "x_ls", "r_r", "x_lr", "x_m", "h", "k_d",
                            "s_base", "v_base", "mech_load"},
                       "motor");
        MotorSection& ms = nc.motor;
        ms.bus = get_str(jm, "bus", "motor");
        ms.s_base = get_num(jm, "s_base", "motor");
        ms.v_base = get_num(jm, "v_base", "motor");
        const std::string units = jm.contains("units") ? get_str(jm, "units", "motor") : "ohm";
        double scale = 1.0;
        if (units == "ohm") {
            if (!(ms.s_base > 0.0) || !(ms.v_base > 0.0))
                throw CaseError("motor: ohmic parameters need positive s_base and v_base");
            scale = ms.s_base / (ms.v_base * ms.v_base);  // 1 / Z_base
        } else if (units != "pu") {
            throw CaseError("motor.units must be 'ohm' or 'pu'");
        }
        ms.model.r_s = get_num(jm, "r_s", "motor") * scale;
        ms.model.x_ls = get_num(jm, "x_ls", "motor") * scale;
        ms.model.r_r = get_num(jm, "r_r", "motor") * scale;
        ms.model.x_lr = get_num(jm, "x_lr", "motor") * scale;
        ms.model.x_m = get_num(jm, "x_m", "motor") * scale;
        ms.model.h = get_num(jm, "h", "motor");
        ms.model.k_d = get_num_or(jm, "k_d", 0.0);
        if (!jm.contains("mech_load")) throw CaseError("motor: missing 'mech_load'");
        const json& jml = jm["mech_load"];
        reject_unknown(jml, {"kind", "t_nom"}, "motor.mech_load");
        const std::string mk = get_str(jml, "kind", "motor.mech_load");
        if (mk == "linear")
            ms.mech.kind = MechLoad::Kind::Linear;
        else if (mk == "constant")
            ms.mech.kind = MechLoad::Kind::Constant;
        else
            throw CaseError("motor.mech_load.kind must be 'linear' or 'constant'");
        ms.mech.t_nom = get_num(jml, "t_nom", "motor.mech_load");
    }

    if (doc.contains("protection_curves")) {
        for (size_t i = 0; i < doc["protection_curves"].size(); ++i) {
            const json& jc = doc["protection_curves"][i];
            const std::string where = "protection_curves[" + std::to_string(i) + "]";
            reject_unknown(jc, {"kind", "samples"}, where);
            ProtectionCurve c;
            const std::string kind = get_str(jc, "kind", where);
            if (kind == "undervoltage")
                c.kind = CurveKind::Undervoltage;
            else if (kind == "overcurrent")
                c.kind = CurveKind::Overcurrent;
            else
                throw CaseError(where + ": kind must be undervoltage|overcurrent");
            if (!jc.contains("samples") || !jc["samples"].is_array())
                throw CaseError(where + ": missing 'samples' array");
            for (const auto& s : jc["samples"]) {
                if (!s.is_array() || s.size() != 2)
                    throw CaseError(where + ": samples must be [t, limit] pairs");
                c.samples.emplace_back(s[0].get<double>(), s[1].get<double>());
            }
            nc.curves.push_back(std::move(c));
        }
    }

    if (doc.contains("weights")) {
        const json& jw = doc["weights"];
        reject_unknown(jw, {"w_re", "w_op"}, "weights");
        nc.weights.w_re = get_num_or(jw, "w_re", 1.0);
        nc.weights.w_op = get_num_or(jw, "w_op", 1e-4);
    }

    validate_case(nc);
    return nc;
}

NetworkCase load_case_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CaseError("cannot open case file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return load_case(ss.str());
}

std::string serialize_case(const NetworkCase& nc) {
    json doc;
    doc["bases"] = {{"s_base", nc.s_base}, {"v_base", nc.v_base}};
    doc["scenario"] = {{"id", nc.scenario_id}, {"v_substation_sq", nc.v_substation_sq}};
    if (!nc.scenario_description.empty()) doc["scenario"]["description"] = nc.scenario_description;
    doc["buses"] = json::array();
    for (const Bus& b : nc.buses) {
        json jb = {{"id", b.id},
                   {"is_substation", b.is_substation},
                   {"has_undervoltage_protection", b.has_undervoltage_protection},
                   {"in_off_outage_area", b.in_off_outage_area}};
        doc["buses"].push_back(std::move(jb));
    }
    doc["lines"] = json::array();
    for (const Line& l : nc.lines) {
        doc["lines"].push_back({{"from", l.from},
                                {"to", l.to},
                                {"r", l.r},
                                {"x", l.x},
                                {"ampacity_sq", l.ampacity_sq},
                                {"has_overcurrent_protection", l.has_overcurrent_protection},
                                {"switch_state", l.closed ? "closed" : "open"},
                                {"tie", l.tie}});
    }
    doc["loads"] = json::array();
    for (const LoadSpec& ld : nc.loads) {
        const char* kind = ld.kind == LoadKind::Static          ? "static"
                           : ld.kind == LoadKind::MotorEnergized ? "motor_energized"
                                                                  : "motor_restart";
        doc["loads"].push_back({{"bus", ld.bus},
                                {"p0", ld.p0},
                                {"q0", ld.q0},
                                {"kind", kind},
                                {"kp", ld.kp},
                                {"kq", ld.kq},
                                {"priority", ld.priority},
                                {"sheddable", ld.sheddable}});
    }
    doc["dgs"] = json::array();
    for (const DgSpec& dg : nc.dgs) {
        doc["dgs"].push_back({{"bus", dg.bus},
                              {"p_max", dg.p_max},
                              {"q_min", dg.q_min},
                              {"q_max", dg.q_max},
                              {"s_max", dg.s_max}});
    }
    doc["motor"] = {{"bus", nc.motor.bus},
                    {"units", "pu"},
                    {"r_s", nc.motor.model.r_s},
                    {"x_ls", nc.motor.model.x_ls},
                    {"r_r", nc.motor.model.r_r},
                    {"x_lr", nc.motor.model.x_lr},
                    {"x_m", nc.motor.model.x_m},
                    {"h", nc.motor.model.h},
                    {"k_d", nc.motor.model.k_d},
                    {"s_base", nc.motor.s_base},
                    {"v_base", nc.motor.v_base},
                    {"mech_load",
                     {{"kind", nc.motor.mech.kind == MechLoad::Kind::Linear ? "linear" : "constant"},
                      {"t_nom", nc.motor.mech.t_nom}}}};
    doc["protection_curves"] = json::array();
    for (const ProtectionCurve& c : nc.curves) {
        json jc;
        jc["kind"] = c.kind == CurveKind::Undervoltage ? "undervoltage" : "overcurrent";
        jc["samples"] = json::array();
        for (const auto& [t, v] : c.samples) jc["samples"].push_back({t, v});
        doc["protection_curves"].push_back(std::move(jc));
    }
    doc["weights"] = {{"w_re", nc.weights.w_re}, {"w_op", nc.weights.w_op}};
    return doc.dump(2) + "\n";
}

RadialOrder radial_order(const NetworkCase& nc) {
    const size_t nb = nc.buses.size();
    const size_t nl = nc.lines.size();
    RadialOrder ro;
    ro.parent_line.assign(nb, -1);
    ro.parent_bus.assign(nb, -1);
    ro.child_lines.assign(nb, {});
    ro.depth.assign(nb, 0);
    ro.up_bus.assign(nl, -1);
    ro.down_bus.assign(nl, -1);

    std::vector<std::vector<std::pair<int, int>>> adj(nb);  // (neighbor bus, line idx)
    for (size_t li = 0; li < nl; ++li) {
        if (!nc.lines[li].closed) continue;
        const int a = nc.bus_index(nc.lines[li].from);
        const int b = nc.bus_index(nc.lines[li].to);
        adj[a].emplace_back(b, static_cast<int>(li));
        adj[b].emplace_back(a, static_cast<int>(li));
    }

    // DFS preorder: a line is appended when its downstream bus is popped, so
    // every line's subtree occupies a contiguous block of the order.
    std::vector<bool> seen(nb, false);
    std::vector<int> stack = {nc.substation};
    seen[nc.substation] = true;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        if (ro.parent_line[u] >= 0) ro.line_order.push_back(ro.parent_line[u]);
        std::vector<int> kids;
        for (const auto& [v, li] : adj[u]) {
            if (seen[v]) continue;
            seen[v] = true;
            ro.parent_bus[v] = u;
            ro.parent_line[v] = li;
            ro.depth[v] = ro.depth[u] + 1;
            ro.up_bus[li] = u;
            ro.down_bus[li] = v;
            ro.child_lines[u].push_back(li);
            kids.push_back(v);
        }
        for (auto it = kids.rbegin(); it != kids.rend(); ++it) stack.push_back(*it);
    }
    return ro;
}

}  // namespace reaccel

#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "reaccel/motor.hpp"
#include "reaccel/protection.hpp"

namespace reaccel {

/// Raised on malformed case documents; message carries the offending
/// field/element location.
struct CaseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Bus {
    std::string id;
    bool is_substation = false;
    bool has_undervoltage_protection = false;
    bool in_off_outage_area = false;       // resolved at load time
    bool off_outage_explicit = false;      // true when the case file pinned it
};

struct Line {
    std::string from, to;
    double r = 0.0;            // [p.u.]
    double x = 0.0;            // [p.u.]
    double ampacity_sq = 0.0;  // squared thermal current limit [p.u.^2]
    bool has_overcurrent_protection = false;
    bool closed = true;
    bool tie = false;          // the normally-open switch closed to back-feed the dead area
};

enum class LoadKind { Static, MotorEnergized, MotorRestart };

struct LoadSpec {
    std::string bus;
    double p0 = 0.0, q0 = 0.0;  // nominal powers [p.u.]
    LoadKind kind = LoadKind::Static;
    double kp = 2.0, kq = 2.0;  // exponential voltage coefficients
    double priority = 1.0;      // D_i
    bool sheddable = false;
};

struct DgSpec {
    std::string bus;
    double p_max = 0.0;
    double q_min = 0.0, q_max = 0.0;
    double s_max = 0.0;
};

/// Restart motor as it appears in the case: equivalent circuit on the
/// motor's own base plus the mechanical load on the shaft.
struct MotorSection {
    std::string bus;
    MotorModel model;   // per-unit on (s_base, v_base) below
    MechLoad mech;
    double s_base = 0.0;  // [VA]
    double v_base = 0.0;  // [V]
};

struct Weights {
    double w_re = 1.0;
    double w_op = 1e-4;
};

struct NetworkCase {
    double s_base = 0.0;          // [VA]
    double v_base = 0.0;          // [V]
    double v_substation_sq = 1.0; // [p.u.^2]
    std::string scenario_id;
    std::string scenario_description;

    std::vector<Bus> buses;
    std::vector<Line> lines;
    std::vector<LoadSpec> loads;
    std::vector<DgSpec> dgs;
    MotorSection motor;
    std::vector<ProtectionCurve> curves;
    Weights weights;

    // resolved at load time
    int substation = -1;   // bus index
    int motor_bus = -1;    // bus index of the restart motor
    int motor_load = -1;   // index into loads of the motor_restart entry

    int bus_index(const std::string& id) const;
    /// Power-base ratio motor/system; motor-base quantities scale by this
    /// when they enter network rows.
    double motor_scale() const { return motor.s_base / s_base; }
    const ProtectionCurve* curve(CurveKind kind) const;
    bool has_protected_nodes() const;
    bool has_protected_lines() const;
};

/// Parent/child structure of the closed-line spanning tree rooted at the
/// substation. Lines are reported in an order where every line's downstream
/// subtree is contiguous (DFS preorder).
struct RadialOrder {
    std::vector<int> line_order;              // indices into case.lines (closed only)
    std::vector<int> parent_line;             // per bus, -1 at the root
    std::vector<int> parent_bus;              // per bus, -1 at the root
    std::vector<std::vector<int>> child_lines;  // per bus
    std::vector<int> up_bus, down_bus;        // per line: orientation towards the root
    std::vector<int> depth;                   // per bus
};

NetworkCase load_case(const std::string& text);
NetworkCase load_case_file(const std::string& path);
std::string serialize_case(const NetworkCase& nc);

RadialOrder radial_order(const NetworkCase& nc);

/// Shipped defaults for cases that configure protected devices but no curves.
ProtectionCurve default_curve(CurveKind kind);

}  // namespace reaccel

#pragma once

#include <complex>
#include <string>
#include <vector>

#include "reaccel/network.hpp"
#include "reaccel/restoration.hpp"

namespace reaccel {

struct SimConfig {
    double dt = 1e-3;       // integration step [s]
    double t_end = 20.0;    // horizon [s]
    enum class Integrator { Rk4, Trapezoidal };
    Integrator integrator = Integrator::Rk4;
    double steady_slip_rate = 1e-4;  // |dS/dt| threshold for steady state
    double steady_window = 0.2;      // [s]
    double stall_slip_rate = 1e-5;   // slip-decrease-rate threshold for stall
    double stall_window = 0.5;       // [s]
    bool detect_events = true;       // terminate on steady state / stall / trip
    int max_sweep_iters = 200;
    double sweep_tol = 1e-10;
};

struct SnapshotError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Phasor solution of the network at one frozen slip value.
struct PhasorState {
    std::vector<std::complex<double>> v_bus;
    std::vector<std::complex<double>> i_line;  // towards the downstream bus, 0 for open lines
    int sweeps = 0;
};

/// Backward/forward sweep with exact exponential loads, the restart motor as
/// a slip-dependent impedance, and DGs as constant-PQ injections.
PhasorState network_snapshot(const NetworkCase& nc, const RadialOrder& order,
                             const std::vector<int>& load_status, double slip,
                             const std::vector<std::pair<double, double>>& dg_pq,
                             const SimConfig& cfg = {});

/// Active-power mismatch of a snapshot: injections - loads - losses [p.u.].
double snapshot_power_residual(const NetworkCase& nc, const RadialOrder& order,
                               const PhasorState& ps, const std::vector<int>& load_status,
                               double slip, const std::vector<std::pair<double, double>>& dg_pq);

struct SimEvent {
    double t = 0.0;
    std::string kind;    // energization | steady_state | stall | trip | end_of_horizon
    std::string detail;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<double> slip;
    std::vector<double> v_motor;  // magnitude [p.u.]
    std::vector<double> t_ele, t_load;  // torques [p.u.]
    std::vector<std::string> line_labels;  // protected lines
    std::vector<std::vector<double>> i_line;  // [protected line][sample]
    std::vector<std::string> bus_labels;   // protected buses
    std::vector<std::vector<double>> v_bus;   // [protected bus][sample]
    std::vector<SimEvent> events;
    bool stalled = false, tripped = false, steady = false, horizon = false;

    double final_slip() const { return slip.empty() ? 1.0 : slip.back(); }
    /// first time the slip reaches s (linear interpolation), -1 if never
    double time_at_slip(double s) const;
    /// linear interpolation of a channel at time tq (clamped to the ends)
    static double sample(const std::vector<double>& t, const std::vector<double>& y, double tq);
};

Trajectory simulate_start(const NetworkCase& nc, const RestorationPlan& plan,
                          const SimConfig& cfg = {});

struct MarginEntry {
    std::string where;
    double margin = kInf;   // magnitude margin, negative = violation
    double at_time = 0.0;
};

struct MarginReport {
    std::vector<MarginEntry> nodes, lines;
    double min_node_margin = kInf;
    double min_line_margin = kInf;
    bool any_trip = false;
};

MarginReport verify_protection(const Trajectory& traj, const NetworkCase& nc);

struct DeviationReport {
    std::vector<double> v_dev_rel;     // per step, motor-node voltage magnitude
    std::vector<double> i_dev_rel;     // per step, worst protected-line current
    std::vector<double> t_arr_plan, t_arr_sim, t_dev_rel;  // arrival alignment per step
    double max_v_dev = 0.0;
    double max_t_dev = 0.0;
    bool partial = false;  // trajectory ended before the last grid slip
};

DeviationReport compare_with_plan(const Trajectory& traj, const RestorationPlan& plan,
                                  const NetworkCase& nc);

void write_trajectory_csv(const Trajectory& traj, std::ostream& os);
void write_event_log(const Trajectory& traj, std::ostream& os);

}  // namespace reaccel

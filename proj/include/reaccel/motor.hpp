#pragma once

#include <string>
#include <vector>

namespace reaccel {

/// Single-cage induction motor equivalent circuit, all reactances at rated
/// frequency, per-unit on the motor's own base. Torque base is chosen so
/// that per-unit air-gap power equals per-unit torque at synchronous speed.
struct MotorModel {
    double r_s = 0.0;   // stator resistance
    double x_ls = 0.0;  // stator leakage reactance
    double r_r = 0.0;   // rotor resistance
    double x_lr = 0.0;  // rotor leakage reactance
    double x_m = 0.0;   // magnetizing reactance
    double h = 0.0;     // inertia constant [s]
    double k_d = 0.0;   // friction/windage torque coefficient [p.u.]

    void validate(const std::string& where) const;
};

/// Mechanical torque on the shaft. The linear kind is zero at standstill and
/// t_nom at synchronous speed; the constant kind is t_nom everywhere.
struct MechLoad {
    enum class Kind { Linear, Constant };
    Kind kind = Kind::Linear;
    double t_nom = 0.0;
};

/// Stator-side Thevenin reduction seen from the rotor terminals.
/// v_gain maps squared stator voltage to squared Thevenin voltage.
struct TheveninParams {
    double v_gain = 0.0;
    double r_th = 0.0;
    double x_th = 0.0;
};

/// Uniform descending slip grid: steps[0] = 1, steps[k] = 1 - k*delta_s,
/// ending one step above the stable operating slip s_end.
struct SlipGrid {
    std::vector<double> steps;
    double delta_s = 0.0;
    double s_end = 0.0;

    int k_max() const { return static_cast<int>(steps.size()); }
};

/// Everything the restoration problem needs about the motor at one slip
/// step: electrical torque is torque_gain * (squared terminal voltage) and
/// the inverse step length is inv_dt_gain * (accelerating torque).
struct StepCoeffs {
    int k = 0;              // 1-based step index
    double slip = 0.0;      // S_k
    double torque_gain = 0.0;  // c_k
    double r_t = 0.0, x_t = 0.0;  // motor input impedance at S_k
    double t_mech = 0.0;    // mechanical torque at S_k
    double friction = 0.0;  // K_D * (1 - S_k)
    double inv_dt_gain = 0.0;  // 1 / (2 H dS)
};

TheveninParams thevenin_params(const MotorModel& m);
double torque_gain(const MotorModel& m, double slip);
std::pair<double, double> input_impedance(const MotorModel& m, double slip);
double mech_torque(const MechLoad& load, double slip);

/// Stable equilibrium slip where electrical torque at fixed squared voltage
/// v_sq balances the load torque, found by bisection below the breakdown
/// slip. Throws if the motor cannot start at v_sq.
double equilibrium_slip(const MotorModel& m, const MechLoad& load, double v_sq);

double breakdown_slip(const MotorModel& m);

/// Grid with k_max uniform steps from standstill to one step above the
/// equilibrium slip at nominal voltage.
SlipGrid make_grid(const MotorModel& m, const MechLoad& load, int k_max);
SlipGrid make_grid_to(double s_end, int k_max);

std::vector<StepCoeffs> step_coeffs(const MotorModel& m, const MechLoad& load,
                                    const SlipGrid& grid);

}  // namespace reaccel

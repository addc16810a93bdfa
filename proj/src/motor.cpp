#include "reaccel/motor.hpp"

#include <cmath>
#include <stdexcept>
#include <tuple>

namespace reaccel {

void MotorModel::validate(const std::string& where) const {
    if (!(x_ls > 0.0 && x_lr > 0.0 && x_m > 0.0))
        throw std::runtime_error(where + ": motor reactances must be > 0");
    if (r_s < 0.0 || r_r < 0.0)
        throw std::runtime_error(where + ": motor resistances must be >= 0");
    if (!(h > 0.0)) throw std::runtime_error(where + ": motor inertia H must be > 0");
    if (k_d < 0.0) throw std::runtime_error(where + ": motor K_D must be >= 0");
}

TheveninParams thevenin_params(const MotorModel& m) {
    // Exact reduction of V * jXm / (Rs + j(Xls+Xm)) and
    // jXm (Rs + jXls) / (Rs + j(Xls+Xm)).
    const double den = m.r_s * m.r_s + (m.x_ls + m.x_m) * (m.x_ls + m.x_m);
    TheveninParams th;
    th.v_gain = m.x_m * m.x_m / den;
    th.r_th = m.r_s * m.x_m * m.x_m / den;
    th.x_th = m.x_m * (m.r_s * m.r_s + m.x_ls * (m.x_ls + m.x_m)) / den;
    return th;
}

double torque_gain(const MotorModel& m, double slip) {
    if (!(slip > 0.0)) throw std::invalid_argument("torque_gain: slip must be > 0");
    const TheveninParams th = thevenin_params(m);
    const double rrs = m.r_r / slip;
    const double den = (rrs + th.r_th) * (rrs + th.r_th) + (m.x_lr + th.x_th) * (m.x_lr + th.x_th);
    return th.v_gain * rrs / den;
}

std::pair<double, double> input_impedance(const MotorModel& m, double slip) {
    if (!(slip > 0.0)) throw std::invalid_argument("input_impedance: slip must be > 0");
    // Zin = Rs + jXls + jXm (Rr/s + jXlr) / (Rr/s + j(Xlr + Xm))
    const double a = m.r_r / slip;      // rotor branch = a + j x_lr
    const double db_re = a;
    const double db_im = m.x_lr + m.x_m;
    const double den = db_re * db_re + db_im * db_im;
    // jXm (a + jXlr) = -Xm Xlr + j Xm a
    const double num_re = -m.x_m * m.x_lr;
    const double num_im = m.x_m * a;
    const double zr = (num_re * db_re + num_im * db_im) / den;
    const double zi = (num_im * db_re - num_re * db_im) / den;
    return {m.r_s + zr, m.x_ls + zi};
}

double mech_torque(const MechLoad& load, double slip) {
    if (slip < 0.0 || slip > 1.0)
        throw std::invalid_argument("mech_torque: slip out of [0,1]");
    return load.kind == MechLoad::Kind::Linear ? load.t_nom * (1.0 - slip) : load.t_nom;
}

double breakdown_slip(const MotorModel& m) {
    const TheveninParams th = thevenin_params(m);
    return m.r_r / std::hypot(th.r_th, m.x_lr + th.x_th);
}

double equilibrium_slip(const MotorModel& m, const MechLoad& load, double v_sq) {
    auto margin = [&](double s) {
        return torque_gain(m, s) * v_sq - mech_torque(load, s) - m.k_d * (1.0 - s);
    };
    const double s_bd = breakdown_slip(m);
    double hi = std::min(1.0, s_bd);  // accelerating side
    if (margin(hi) <= 0.0)
        throw std::runtime_error("equilibrium_slip: no accelerating torque even at breakdown slip");
    double lo = 1e-6;
    if (margin(lo) >= 0.0) return lo;  // load torque negligible; treat as near-synchronous
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        (margin(mid) > 0.0 ? hi : lo) = mid;
    }
    return 0.5 * (lo + hi);
}

SlipGrid make_grid_to(double s_end, int k_max) {
    if (k_max < 1) throw std::invalid_argument("make_grid_to: k_max must be >= 1");
    if (!(s_end > 0.0 && s_end < 1.0))
        throw std::invalid_argument("make_grid_to: s_end must be in (0,1)");
    SlipGrid g;
    g.s_end = s_end;
    g.delta_s = (1.0 - s_end) / k_max;
    g.steps.resize(k_max);
    for (int k = 0; k < k_max; ++k) g.steps[k] = 1.0 - k * g.delta_s;
    return g;
}

SlipGrid make_grid(const MotorModel& m, const MechLoad& load, int k_max) {
    return make_grid_to(equilibrium_slip(m, load, 1.0), k_max);
}

std::vector<StepCoeffs> step_coeffs(const MotorModel& m, const MechLoad& load,
                                    const SlipGrid& grid) {
    std::vector<StepCoeffs> out;
    out.reserve(grid.steps.size());
    const double inv_dt_gain = 1.0 / (2.0 * m.h * grid.delta_s);
    for (size_t k = 0; k < grid.steps.size(); ++k) {
        StepCoeffs sc;
        sc.k = static_cast<int>(k) + 1;
        sc.slip = grid.steps[k];
        sc.torque_gain = torque_gain(m, sc.slip);
        std::tie(sc.r_t, sc.x_t) = input_impedance(m, sc.slip);
        sc.t_mech = mech_torque(load, sc.slip);
        sc.friction = m.k_d * (1.0 - sc.slip);
        sc.inv_dt_gain = inv_dt_gain;
        out.push_back(sc);
    }
    return out;
}

}  // namespace reaccel

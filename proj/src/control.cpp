#include "softarm/control.hpp"

#include <algorithm>
#include <cmath>

#include "softarm/errors.hpp"

namespace softarm::control {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

// PI with output clamp and conditional integration. The integral state holds
// the raw error integral; its contribution gain*integral is capped as well.
double pi_step(double error, double& integral, double kp, double ki, double dt,
               double out_limit, double int_contrib_limit) {
    double u_unsat = kp * error + ki * integral;
    const bool saturated = (u_unsat > out_limit && error > 0.0) ||
                           (u_unsat < -out_limit && error < 0.0);
    if (!saturated) {
        integral += error * dt;
        if (ki > 0.0) {
            const double cap = int_contrib_limit / ki;
            integral = std::clamp(integral, -cap, cap);
        }
    }
    double u = kp * error + ki * integral;
    return std::clamp(u, -out_limit, out_limit);
}

}  // namespace

void Gains::validate() const {
    if (kp < 0.0 || ki < 0.0 || kt_p < 0.0 || kt_i < 0.0) {
        throw ConfigError("Gains: all gains must be >= 0");
    }
    if (!(p_bar >= 1.0)) {
        throw ConfigError("Gains: p_bar must be >= p_atm (1.0 bar)");
    }
    if (!(u_limit > 0.0) || !(outer_int_limit > 0.0) || !(inner_int_limit > 0.0)) {
        throw ConfigError("Gains: saturation limits must be > 0");
    }
}

AxisEffort position_pi(const kinematics::Orientation& setpoint,
                       const kinematics::Orientation& measured, ControllerState& st,
                       const Gains& gains, double dt) {
    AxisEffort u;
    u.u_alpha = pi_step(setpoint.alpha - measured.alpha, st.outer_integral[0], gains.kp,
                        gains.ki, dt, gains.u_limit, gains.outer_int_limit);
    u.u_beta = pi_step(setpoint.beta - measured.beta, st.outer_integral[1], gains.kp,
                       gains.ki, dt, gains.u_limit, gains.outer_int_limit);
    return u;
}

std::array<double, 2> align_to_actuators(double u_alpha, double u_beta) {
    const double p_ab = -u_alpha / kSqrt3 - u_beta;
    const double p_bc = 2.0 * u_alpha / kSqrt3;
    return {p_ab, p_bc};
}

PressureSetpoints allocate(double p_ab_sp, double p_bc_sp, double p_bar) {
    // Offsets relative to actuator B: c_A = p_AB, c_B = 0, c_C = -p_BC.
    // Subtracting their min reproduces the three max expressions while only
    // the A/C corner cases incur an addition.
    const double cmin = std::min({p_ab_sp, 0.0, -p_bc_sp});
    PressureSetpoints sp;
    sp.a = p_bar + (p_ab_sp - cmin);
    sp.b = p_bar + (0.0 - cmin);
    sp.c = p_bar + (-p_bc_sp - cmin);
    return sp;
}

PressureSetpoints clamp_setpoints(const PressureSetpoints& sp, double p_bar, double p_max) {
    PressureSetpoints out = sp;
    const double top = std::max({out.a, out.b, out.c});
    if (top > p_max) {
        const double shift = top - p_max;
        out.a -= shift;
        out.b -= shift;
        out.c -= shift;
    }
    out.a = std::max(out.a, p_bar);
    out.b = std::max(out.b, p_bar);
    out.c = std::max(out.c, p_bar);
    return out;
}

std::array<double, 3> pressure_pi(const PressureSetpoints& sp,
                                  const std::array<double, 3>& measured,
                                  ControllerState& st, const Gains& gains, double dt) {
    const std::array<double, 3> setpoints{sp.a, sp.b, sp.c};
    std::array<double, 3> u{};
    for (int i = 0; i < 3; ++i) {
        u[i] = pi_step(setpoints[i] - measured[i], st.inner_integral[i], gains.kt_p,
                       gains.kt_i, dt, 1.0, gains.inner_int_limit);
    }
    return u;
}

}  // namespace softarm::control

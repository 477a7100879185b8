#pragma once

#include <array>

#include "softarm/kinematics.hpp"

namespace softarm::control {

// Outer position PI gains, inner pressure PI gains, and the common lower
// pressure level p_bar that floors the allocation.
struct Gains {
    double kp = 0.015;          // bar/deg
    double ki = 0.05;           // bar/(deg s)
    double kt_p = 5.0;          // cmd/bar
    double kt_i = 20.0;         // cmd/(bar s)
    double p_bar = 1.02;        // bar
    double u_limit = 0.45;      // |u_alpha|, |u_beta| cap (bar)
    double outer_int_limit = 0.16;  // cap on K_I * integral contribution (bar)
    double inner_int_limit = 1.0;   // cap on Kt_I * integral contribution (cmd)

    void validate() const;
};

struct ControllerState {
    std::array<double, 2> outer_integral{0.0, 0.0};  // deg*s, alpha/beta
    std::array<double, 3> inner_integral{0.0, 0.0, 0.0};  // bar*s, A/B/C

    void reset() {
        outer_integral = {0.0, 0.0};
        inner_integral = {0.0, 0.0, 0.0};
    }
};

struct AxisEffort {
    double u_alpha = 0.0;  // bar
    double u_beta = 0.0;   // bar
};

struct PressureSetpoints {
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

// Two decoupled PIs on the orientation error. Output clamped to +-u_limit
// with conditional integration (the integrator freezes while the output is
// saturated in the error's direction) plus a hard cap on its contribution.
AxisEffort position_pi(const kinematics::Orientation& setpoint,
                       const kinematics::Orientation& measured, ControllerState& st,
                       const Gains& gains, double dt);

// Axis-space efforts to inter-actuator pressure-difference setpoints:
// p_AB = -u_alpha/sqrt(3) - u_beta, p_BC = 2 u_alpha/sqrt(3).
std::array<double, 2> align_to_actuators(double u_alpha, double u_beta);

// Max-based allocation of the two difference setpoints onto three absolute
// pressures with min exactly p_bar:
//   p_A = max{p, p+p_AB, p+p_AB+p_BC}
//   p_B = max{p, p+p_BC, p-p_AB}
//   p_C = max{p, -p_BC+p, p-p_AB-p_BC}
// computed so that p_A-p_B = p_AB and p_B-p_C = p_BC hold without extra
// round-off beyond the single p_AB+p_BC sum.
PressureSetpoints allocate(double p_ab_sp, double p_bc_sp, double p_bar);

// Ceiling guard used after allocate(): if the largest setpoint exceeds p_max,
// all three are shifted down together (differences preserved), then floored
// at p_bar, which sacrifices the smallest differences last.
PressureSetpoints clamp_setpoints(const PressureSetpoints& sp, double p_bar, double p_max);

// Three independent PIs on the pressure errors; outputs are valve commands
// clamped to [-1, 1], same anti-windup scheme as the outer loop.
std::array<double, 3> pressure_pi(const PressureSetpoints& sp,
                                  const std::array<double, 3>& measured,
                                  ControllerState& st, const Gains& gains, double dt);

}  // namespace softarm::control

#pragma once

#include <array>

namespace softarm::plant {

inline constexpr double kPAtm = 1.0;  // bar
inline constexpr double kPMax = 1.5;  // bar

// Orientation, angular rates and the three actuator pressures. Angles in
// degrees, pressures in bar, always clamped to [p_atm, p_max].
struct ArmState {
    double alpha = 0.0;
    double beta = 0.0;
    double alpha_dot = 0.0;
    double beta_dot = 0.0;
    std::array<double, 3> p{kPAtm, kPAtm, kPAtm};  // A, B, C
};

struct PlantParams {
    double tau_p = 0.05;  // s, pressure time constant
    double k_v = 0.5;     // bar, steady-state overpressure per unit valve command
    double J = 0.005;     // joint inertia (deg-normalized units)
    double d = 0.11;      // damping
    double k_t = 115.0;   // torque per bar of aligned pressure difference
    double k_s = 1.2;     // stiffness per bar of total overpressure
    double dt = 1e-3;     // s, physics step
    std::array<double, 3> phi_deg{0.0, 120.0, 240.0};  // actuator azimuths

    // Elongation/lateral-deformation model feeding the synthetic cameras.
    double e0 = 0.3;
    double c_p = 1.0;  // 1/bar
    double c_a = 0.4;
    double c_l = 0.3;

    void validate() const;
};

struct Torque {
    double tau_alpha = 0.0;
    double tau_beta = 0.0;
};

// Per-actuator axial elongation (clamped to [0, 1]) and lateral deformation.
struct Deformation {
    std::array<double, 3> elongation{};
    std::array<double, 3> lateral{};
};

// First-order pressure dynamics with leak to atmosphere, explicit Euler:
// p_dot = (k_v * u - (p - p_atm)) / tau_p. Commands are clamped to [-1, 1],
// pressures to [p_atm, p_max].
void pressure_step(ArmState& state, const std::array<double, 3>& u_valve,
                   const PlantParams& params, double dt);

// (tau_alpha, tau_beta) = k_t * G * p with
// G = [[0, sqrt(3)/2, -sqrt(3)/2], [-1, 1/2, 1/2]]; the exact inverse of the
// controller's alignment + allocation, so equal pressures give zero torque.
Torque torque_from_pressures(const std::array<double, 3>& p, const PlantParams& params);

// Semi-implicit Euler on J*th_dd = tau - k_s*(sum p - 3 p_atm)*th - d*th_dot,
// independently for alpha and beta. Stiffness grows with total overpressure.
void dynamics_step(ArmState& state, const PlantParams& params, double dt);

// e_i = clamp(e0 + c_p (p_i - p_atm) + c_a (sin(phi_i) a_n - cos(phi_i) b_n), 0, 1)
// l_i = c_l (cos(phi_i) a_n + sin(phi_i) b_n)
// with (a_n, b_n) = (alpha, beta) / 30 deg.
Deformation actuator_elongation(const ArmState& state, const PlantParams& params);

}  // namespace softarm::plant

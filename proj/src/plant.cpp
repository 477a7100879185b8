#include "softarm/plant.hpp"

#include <algorithm>
#include <cmath>

#include "softarm/errors.hpp"
#include "softarm/kinematics.hpp"

namespace softarm::plant {

namespace {
constexpr double kHalfSqrt3 = 0.8660254037844386;
}

void PlantParams::validate() const {
    if (!(tau_p > 0.0) || !(J > 0.0) || !(d > 0.0) || !(k_t > 0.0) || !(k_s > 0.0) ||
        !(dt > 0.0) || !(k_v > 0.0)) {
        throw ConfigError("PlantParams: tau_p, k_v, J, d, k_t, k_s, dt must all be > 0");
    }
}

void pressure_step(ArmState& state, const std::array<double, 3>& u_valve,
                   const PlantParams& params, double dt) {
    for (int i = 0; i < 3; ++i) {
        const double u = std::clamp(u_valve[i], -1.0, 1.0);
        const double p_dot = (params.k_v * u - (state.p[i] - kPAtm)) / params.tau_p;
        state.p[i] = std::clamp(state.p[i] + dt * p_dot, kPAtm, kPMax);
    }
}

Torque torque_from_pressures(const std::array<double, 3>& p, const PlantParams& params) {
    Torque t;
    t.tau_alpha = params.k_t * kHalfSqrt3 * (p[1] - p[2]);
    t.tau_beta = params.k_t * (-p[0] + 0.5 * p[1] + 0.5 * p[2]);
    return t;
}

void dynamics_step(ArmState& state, const PlantParams& params, double dt) {
    const Torque tau = torque_from_pressures(state.p, params);
    const double overpressure = (state.p[0] - kPAtm) + (state.p[1] - kPAtm) + (state.p[2] - kPAtm);
    const double stiffness = params.k_s * overpressure;

    const double alpha_dd =
        (tau.tau_alpha - stiffness * state.alpha - params.d * state.alpha_dot) / params.J;
    state.alpha_dot += dt * alpha_dd;
    state.alpha += dt * state.alpha_dot;

    const double beta_dd =
        (tau.tau_beta - stiffness * state.beta - params.d * state.beta_dot) / params.J;
    state.beta_dot += dt * beta_dd;
    state.beta += dt * state.beta_dot;
}

Deformation actuator_elongation(const ArmState& state, const PlantParams& params) {
    const double a_n = state.alpha / 30.0;
    const double b_n = state.beta / 30.0;
    Deformation d;
    for (int i = 0; i < 3; ++i) {
        const double phi = kinematics::deg_to_rad(params.phi_deg[i]);
        const double s = std::sin(phi);
        const double c = std::cos(phi);
        const double e =
            params.e0 + params.c_p * (state.p[i] - kPAtm) + params.c_a * (s * a_n - c * b_n);
        d.elongation[i] = std::clamp(e, 0.0, 1.0);
        d.lateral[i] = params.c_l * (c * a_n + s * b_n);
    }
    return d;
}

}  // namespace softarm::plant

#include "softarm/kinematics.hpp"

#include <cmath>
#include <string>

#include "softarm/errors.hpp"

namespace softarm::kinematics {

namespace {

constexpr double kClampTol = 1e-9;

// asin argument with round-off tolerance at the workspace boundary. Evaluated
// on the magnitude with the sign copied back, which makes the extraction
// exactly odd (libm asin is not).
double checked_asin(double arg, const char* which) {
    if (!std::isfinite(arg) || std::fabs(arg) > 1.0 + kClampTol) {
        throw DomainError(std::string("angles_from_tip: asin argument for ") + which +
                          " is " + std::to_string(arg) +
                          ", outside [-1, 1]; tip not on the reachable sphere");
    }
    const double mag = std::min(std::fabs(arg), 1.0);
    return std::copysign(std::asin(mag), arg);
}

}  // namespace

void Calibration::validate() const {
    if (!(R > 0.0) || !std::isfinite(R) || !std::isfinite(x0) || !std::isfinite(y0) ||
        !std::isfinite(z0)) {
        throw ConfigError("Calibration: R must be > 0 and all fields finite");
    }
}

Orientation angles_from_tip(double x, double y, const Calibration& calib) {
    calib.validate();
    const double alpha_rad = checked_asin(-(y - calib.y0) / calib.R, "alpha");
    const double cos_alpha = std::cos(alpha_rad);
    if (std::fabs(cos_alpha) < 1e-9) {
        throw DegenerateError("angles_from_tip: |cos(alpha)| < 1e-9, beta undefined");
    }
    const double beta_rad = checked_asin((x - calib.x0) / (calib.R * cos_alpha), "beta");
    return {rad_to_deg(alpha_rad), rad_to_deg(beta_rad)};
}

TipPosition tip_from_angles(const Orientation& o, const Calibration& calib) {
    calib.validate();
    if (!(std::fabs(o.alpha) < 90.0) || !(std::fabs(o.beta) < 90.0)) {
        throw DomainError("tip_from_angles: |alpha| and |beta| must be < 90 deg");
    }
    const double a = deg_to_rad(o.alpha);
    const double b = deg_to_rad(o.beta);
    TipPosition tip;
    tip.y = calib.y0 - calib.R * std::sin(a);
    tip.x = calib.x0 + calib.R * std::cos(a) * std::sin(b);
    tip.z = calib.z0 + calib.R * std::cos(a) * std::cos(b);
    return tip;
}

}  // namespace softarm::kinematics

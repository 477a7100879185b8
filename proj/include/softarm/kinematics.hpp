#pragma once

namespace softarm::kinematics {

inline constexpr double kPi = 3.14159265358979323846;

inline double deg_to_rad(double deg) { return deg * (kPi / 180.0); }
inline double rad_to_deg(double rad) { return rad * (180.0 / kPi); }

// Pivot-point coordinates and movable-link radius. z0 only matters for the
// 3-D inverse; the angle extraction uses x and y alone.
struct Calibration {
    double x0 = 0.0;  // m
    double y0 = 0.0;  // m
    double z0 = 0.0;  // m
    double R = 0.25;  // m, > 0

    void validate() const;
};

// Extrinsic Euler angles of the movable link, in degrees.
struct Orientation {
    double alpha = 0.0;
    double beta = 0.0;
};

struct TipPosition {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
};

// alpha = asin(-(y - y0)/R), beta = asin((x - x0)/(R cos alpha)), both in
// degrees. Arguments within 1e-9 past +-1 are clamped; beyond that the tip is
// outside the reachable sphere and a DomainError is thrown. DegenerateError
// if |cos alpha| < 1e-9.
Orientation angles_from_tip(double x, double y, const Calibration& calib);

// Closed-form inverse: y = y0 - R sin(a), x = x0 + R cos(a) sin(b),
// z = z0 + R cos(a) cos(b). Requires |alpha|, |beta| < 90 deg.
TipPosition tip_from_angles(const Orientation& o, const Calibration& calib);

}  // namespace softarm::kinematics

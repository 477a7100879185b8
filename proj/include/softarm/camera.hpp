#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "softarm/plant.hpp"

namespace softarm::camera {

inline constexpr int kNativeH = 480;
inline constexpr int kNativeW = 640;
inline constexpr int kOutH = 120;
inline constexpr int kOutW = 160;

// Placement and pattern geometry of one bellow-interior camera. The pattern
// model is a stack of concentric cushion rings plus a dot ring from the top
// layer, lit by an LED with radial falloff.
struct CameraConfig {
    double eta = 0.12;            // camera offset from the opening center, fraction of width
    double rho_deg = 25.0;        // camera tilt
    int n_rings = 11;             // inter-cushion rings (12 cushions)
    double dot_diameter_px = 6.0; // at native resolution
    int dot_count = 24;
    double led_intensity = 0.22;

    // Projection model constants.
    double r_base_frac = 0.62;    // outermost ring radius at e = 0, fraction of height
    double ring_shrink = 2.2;     // s in r_k(e) = r_base / (1 + s e k / n)
    double r_cut_frac = 0.389;    // rings below this apparent radius are occluded
    double dot_r0_frac = 0.30;    // dot ring radius at e = 0
    double dot_shrink = 1.5;
    double lateral_gain = 0.25;   // center shift per unit lateral deformation
    double persp_strength = 1.0;  // scales the tan(rho) foreshortening
    double ring_sigma_px = 2.2;   // ring line width (Gaussian profile)
    double background = 0.08;     // dark fabric albedo
    double falloff = 1.2;         // radial illumination falloff

    void validate() const;
};

// Additive pixel noise and per-frame brightness jitter, both derived from the
// seed alone so identical seeds give bit-identical frames.
struct NoiseConfig {
    double pixel_sigma = 0.02;
    double brightness_jitter = 0.05;
    std::uint64_t seed = 0;

    void validate() const;
};

// One grayscale frame, row-major, values in [-1, 1].
struct Frame {
    int height = 0;
    int width = 0;
    std::vector<float> pixels;

    float at(int y, int x) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
};

// Three channels (actuators A, B, C) of kOutH x kOutW pixels, contiguous.
struct FrameStack {
    std::array<Frame, 3> channels;
};

// Apparent radii of all n_rings rings at elongation e, in native pixels,
// k = 1..n (strictly decreasing in e for every k).
std::vector<double> ring_radii(double e, const CameraConfig& cfg);

// Number of rings whose apparent radius is still above the occlusion cutoff;
// non-increasing in e.
int visible_ring_count(double e, const CameraConfig& cfg);

// Pattern center in native pixels: offset eta along the image u-axis, lateral
// deformation displaces along v, so negating l mirrors the center about the
// offset axis.
std::array<double, 2> pattern_center(double e, double l, const CameraConfig& cfg);

// Renders one camera at native resolution, applies noise, downsamples to
// kOutH x kOutW and normalizes to [-1, 1]. Pure function of (e, l, cfg, noise).
Frame render(double e, double l, const CameraConfig& cfg, const NoiseConfig& noise);

// Bilinear reduction (half-pixel-centre convention). Input values and output
// values share the same range; input dims must be exactly kNativeH x kNativeW.
std::vector<double> downsample_bilinear(const std::vector<double>& native, int src_h,
                                        int src_w, int dst_h, int dst_w);

// Elongation/lateral deformation from the plant, one render per actuator.
// Per-camera noise seeds are derived from noise.seed and the channel index.
FrameStack render_all(const plant::ArmState& state, const plant::PlantParams& params,
                      const std::array<CameraConfig, 3>& cfgs, const NoiseConfig& noise);

}  // namespace softarm::camera

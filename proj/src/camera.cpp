#include "softarm/camera.hpp"

#include <algorithm>
#include <cmath>

#include "softarm/errors.hpp"
#include "softarm/kinematics.hpp"
#include "softarm/parallel.hpp"
#include "softarm/rng.hpp"

namespace softarm::camera {

namespace {

constexpr double kTwoPi = 2.0 * kinematics::kPi;

double ring_radius(double e, int k, const CameraConfig& cfg) {
    const double r_base = cfg.r_base_frac * kNativeH;
    return r_base / (1.0 + cfg.ring_shrink * e * static_cast<double>(k) / cfg.n_rings);
}

}  // namespace

void CameraConfig::validate() const {
    if (!(eta >= 0.0 && eta < 0.5)) throw ConfigError("CameraConfig: eta must be in [0, 0.5)");
    if (!(led_intensity >= 0.0 && led_intensity <= 1.0)) {
        throw ConfigError("CameraConfig: led_intensity must be in [0, 1]");
    }
    if (n_rings < 1) throw ConfigError("CameraConfig: n_rings must be >= 1");
    if (!(dot_diameter_px > 0.0) || dot_count < 1) {
        throw ConfigError("CameraConfig: dot pattern must be non-empty");
    }
    if (!(r_base_frac > r_cut_frac) || !(r_cut_frac > 0.0)) {
        throw ConfigError("CameraConfig: need r_base_frac > r_cut_frac > 0");
    }
    if (!(ring_shrink > 0.0) || !(ring_sigma_px > 0.0)) {
        throw ConfigError("CameraConfig: ring_shrink and ring_sigma_px must be > 0");
    }
}

void NoiseConfig::validate() const {
    if (pixel_sigma < 0.0 || brightness_jitter < 0.0) {
        throw ConfigError("NoiseConfig: sigmas must be >= 0");
    }
}

std::vector<double> ring_radii(double e, const CameraConfig& cfg) {
    std::vector<double> radii(cfg.n_rings);
    for (int k = 1; k <= cfg.n_rings; ++k) {
        radii[k - 1] = ring_radius(e, k, cfg);
    }
    return radii;
}

int visible_ring_count(double e, const CameraConfig& cfg) {
    const double r_cut = cfg.r_cut_frac * kNativeH;
    int count = 0;
    for (int k = 1; k <= cfg.n_rings; ++k) {
        if (ring_radius(e, k, cfg) >= r_cut) ++count;
    }
    return count;
}

std::array<double, 2> pattern_center(double /*e*/, double l, const CameraConfig& cfg) {
    const double cu = (0.5 + cfg.eta) * kNativeW;
    const double cv = 0.5 * kNativeH + cfg.lateral_gain * l * kNativeH;
    return {cu, cv};
}

std::vector<double> downsample_bilinear(const std::vector<double>& native, int src_h,
                                        int src_w, int dst_h, int dst_w) {
    if (src_h != kNativeH || src_w != kNativeW ||
        native.size() != static_cast<std::size_t>(src_h) * src_w) {
        throw DimensionError("downsample_bilinear: input must be exactly " +
                             std::to_string(kNativeH) + "x" + std::to_string(kNativeW));
    }
    std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w);
    const double sy = static_cast<double>(src_h) / dst_h;
    const double sx = static_cast<double>(src_w) / dst_w;
    for (int i = 0; i < dst_h; ++i) {
        const double fy = (i + 0.5) * sy - 0.5;
        int y0 = static_cast<int>(std::floor(fy));
        const double wy = fy - y0;
        const int y1 = std::min(y0 + 1, src_h - 1);
        y0 = std::max(y0, 0);
        for (int j = 0; j < dst_w; ++j) {
            const double fx = (j + 0.5) * sx - 0.5;
            int x0 = static_cast<int>(std::floor(fx));
            const double wx = fx - x0;
            const int x1 = std::min(x0 + 1, src_w - 1);
            x0 = std::max(x0, 0);
            const double top = native[static_cast<std::size_t>(y0) * src_w + x0] * (1.0 - wx) +
                               native[static_cast<std::size_t>(y0) * src_w + x1] * wx;
            const double bot = native[static_cast<std::size_t>(y1) * src_w + x0] * (1.0 - wx) +
                               native[static_cast<std::size_t>(y1) * src_w + x1] * wx;
            out[static_cast<std::size_t>(i) * dst_w + j] = top * (1.0 - wy) + bot * wy;
        }
    }
    return out;
}

Frame render(double e, double l, const CameraConfig& cfg, const NoiseConfig& noise) {
    cfg.validate();
    noise.validate();
    e = std::clamp(e, 0.0, 1.0);

    const auto center = pattern_center(e, l, cfg);
    const double cu = center[0];
    const double cv = center[1];
    const double r_base = cfg.r_base_frac * kNativeH;
    const int visible = visible_ring_count(e, cfg);
    const double shrink = cfg.ring_shrink * e;  // rings coincide at r_base when ~0
    const double sigma = cfg.ring_sigma_px;
    const double ring_gate = 3.0 * sigma;
    const double inv_2s2 = 1.0 / (2.0 * sigma * sigma);

    const double dot_r = cfg.dot_r0_frac * kNativeH / (1.0 + cfg.dot_shrink * e);
    const double dot_sigma = cfg.dot_diameter_px / 4.0;
    const double dot_gate = 3.0 * dot_sigma;
    const double dot_step = kTwoPi / cfg.dot_count;
    const double inv_2d2 = 1.0 / (2.0 * dot_sigma * dot_sigma);

    const double cos_rho = std::cos(kinematics::deg_to_rad(cfg.rho_deg));
    const double persp = cfg.persp_strength * std::tan(kinematics::deg_to_rad(cfg.rho_deg));

    // Per-frame brightness jitter, counter 0 of the frame's noise stream.
    double led = cfg.led_intensity;
    if (noise.brightness_jitter > 0.0) {
        led *= std::max(0.0, 1.0 + noise.brightness_jitter * gaussian_at(noise.seed, 0));
    }

    std::vector<double> native(static_cast<std::size_t>(kNativeH) * kNativeW);
    std::vector<double> du2(kNativeW);
    for (int x = 0; x < kNativeW; ++x) {
        const double du = x - cu;
        du2[x] = du * du;
    }

    parallel_for(0, kNativeH, [&](std::size_t row) {
        const int y = static_cast<int>(row);
        const double dv_raw = y - cv;
        // Tilt foreshortening: top of the image is compressed, bottom stretched.
        const double dv = dv_raw * (1.0 + persp * dv_raw / kNativeH) / cos_rho;
        const double dv2 = dv * dv;
        double* out_row = native.data() + row * kNativeW;

        for (int x = 0; x < kNativeW; ++x) {
            const double r = std::sqrt(du2[x] + dv2);
            double pattern = 0.0;

            // Nearest visible cushion ring.
            double d_ring;
            if (shrink < 1e-12) {
                d_ring = std::fabs(r - r_base);
            } else if (r >= r_base) {
                d_ring = r - r_base;
            } else {
                const double k_cont = cfg.n_rings * (r_base / r - 1.0) / shrink;
                const int k = std::clamp(static_cast<int>(std::lround(k_cont)), 1, visible);
                d_ring = std::fabs(r - ring_radius(e, k, cfg));
            }
            if (d_ring < ring_gate && visible > 0) {
                pattern = std::exp(-d_ring * d_ring * inv_2s2);
            }

            // Dot ring from the top layer.
            if (std::fabs(r - dot_r) < dot_gate + dot_r * dot_step * 0.5) {
                const double theta = std::atan2(dv, x - cu);
                const double theta_n = std::round(theta / dot_step) * dot_step;
                const double px = dot_r * std::cos(theta_n);
                const double py = dot_r * std::sin(theta_n);
                const double ddx = (x - cu) - px;
                const double ddy = dv - py;
                const double d2 = ddx * ddx + ddy * ddy;
                if (d2 < dot_gate * dot_gate) {
                    pattern = std::max(pattern, std::exp(-d2 * inv_2d2));
                }
            }

            const double illum = led / (1.0 + cfg.falloff * (r / kNativeH) * (r / kNativeH));
            double v = illum * (cfg.background + (1.0 - cfg.background) * pattern);

            if (noise.pixel_sigma > 0.0) {
                const std::uint64_t counter = 1 + row * kNativeW + static_cast<std::uint64_t>(x);
                v += noise.pixel_sigma * gaussian_at(noise.seed, counter);
            }
            out_row[x] = std::clamp(v, 0.0, 1.0);
        }
    });

    const std::vector<double> small =
        downsample_bilinear(native, kNativeH, kNativeW, kOutH, kOutW);

    Frame frame;
    frame.height = kOutH;
    frame.width = kOutW;
    frame.pixels.resize(small.size());
    for (std::size_t i = 0; i < small.size(); ++i) {
        frame.pixels[i] = static_cast<float>(2.0 * small[i] - 1.0);
    }
    return frame;
}

FrameStack render_all(const plant::ArmState& state, const plant::PlantParams& params,
                      const std::array<CameraConfig, 3>& cfgs, const NoiseConfig& noise) {
    const plant::Deformation def = plant::actuator_elongation(state, params);
    FrameStack stack;
    for (int i = 0; i < 3; ++i) {
        NoiseConfig cam_noise = noise;
        cam_noise.seed = hash_combine(noise.seed, static_cast<std::uint64_t>(i));
        stack.channels[i] = render(def.elongation[i], def.lateral[i], cfgs[i], cam_noise);
    }
    return stack;
}

}  // namespace softarm::camera

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "softarm/camera.hpp"
#include "softarm/errors.hpp"
#include "softarm/rng.hpp"

using namespace softarm;
using namespace softarm::camera;

namespace {
const CameraConfig kCfg{};

double stack_l2(const FrameStack& a, const FrameStack& b) {
    double sq = 0.0;
    for (int c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < a.channels[c].pixels.size(); ++i) {
            const double d = a.channels[c].pixels[i] - b.channels[c].pixels[i];
            sq += d * d;
        }
    }
    return std::sqrt(sq);
}
}  // namespace

TEST_CASE("render is deterministic for a fixed seed") {
    NoiseConfig noise;
    noise.pixel_sigma = 0.03;
    noise.brightness_jitter = 0.05;
    noise.seed = 987654321;
    const Frame a = render(0.4, 0.1, kCfg, noise);
    const Frame b = render(0.4, 0.1, kCfg, noise);
    REQUIRE(a.pixels.size() == b.pixels.size());
    CHECK(a.pixels == b.pixels);

    noise.seed = 987654322;
    const Frame c = render(0.4, 0.1, kCfg, noise);
    CHECK(a.pixels != c.pixels);
}

TEST_CASE("visible ring count decreases as the actuator expands") {
    CHECK(visible_ring_count(0.9, kCfg) <= visible_ring_count(0.1, kCfg));
    CHECK(visible_ring_count(0.9, kCfg) < kCfg.n_rings);
    CHECK(visible_ring_count(0.0, kCfg) == kCfg.n_rings);
    int prev = visible_ring_count(0.0, kCfg);
    for (int i = 1; i <= 20; ++i) {
        const int count = visible_ring_count(i / 20.0, kCfg);
        REQUIRE(count <= prev);
        prev = count;
    }
}

TEST_CASE("mean apparent ring radius strictly decreases in elongation") {
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 20; ++i) {
        const double e = 0.02 + 0.96 * i / 19.0;
        const auto radii = ring_radii(e, kCfg);
        REQUIRE(radii.size() == static_cast<std::size_t>(kCfg.n_rings));
        const double mean = std::accumulate(radii.begin(), radii.end(), 0.0) / radii.size();
        REQUIRE(mean < prev);
        prev = mean;
    }
}

TEST_CASE("lateral deformation mirrors the pattern center about the offset axis") {
    for (double l : {0.05, 0.13, 0.4}) {
        const auto plus = pattern_center(0.3, l, kCfg);
        const auto minus = pattern_center(0.3, -l, kCfg);
        CHECK(plus[0] == minus[0]);  // offset axis component unchanged
        CHECK(plus[1] - 0.5 * kNativeH == -(minus[1] - 0.5 * kNativeH));
    }
}

TEST_CASE("downsample preserves constants") {
    std::vector<double> native(static_cast<std::size_t>(kNativeH) * kNativeW, 0.5);
    const auto small = downsample_bilinear(native, kNativeH, kNativeW, kOutH, kOutW);
    REQUIRE(small.size() == static_cast<std::size_t>(kOutH) * kOutW);
    for (double v : small) REQUIRE(v == 0.5);
}

TEST_CASE("downsample output extrema are bounded by input extrema") {
    std::vector<double> native(static_cast<std::size_t>(kNativeH) * kNativeW);
    std::uint64_t s = 55;
    double lo = 1e9, hi = -1e9;
    for (double& v : native) {
        s = splitmix64(s);
        v = u64_to_unit(s);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const auto small = downsample_bilinear(native, kNativeH, kNativeW, kOutH, kOutW);
    for (double v : small) {
        REQUIRE(v >= lo);
        REQUIRE(v <= hi);
    }
}

TEST_CASE("downsample of a 2x2-block checkerboard is uniform mid-value") {
    std::vector<double> native(static_cast<std::size_t>(kNativeH) * kNativeW);
    for (int y = 0; y < kNativeH; ++y) {
        for (int x = 0; x < kNativeW; ++x) {
            native[static_cast<std::size_t>(y) * kNativeW + x] =
                ((y / 2 + x / 2) % 2 == 0) ? 1.0 : 0.0;
        }
    }
    const auto small = downsample_bilinear(native, kNativeH, kNativeW, kOutH, kOutW);
    // each output taps rows 4i+1, 4i+2 and columns 4j+1, 4j+2 with weight 1/4,
    // which always covers two bright and two dark block cells
    for (double v : small) REQUIRE(v == 0.5);
}

TEST_CASE("downsample rejects wrong input dimensions") {
    std::vector<double> wrong(100 * 100, 0.0);
    CHECK_THROWS_AS(downsample_bilinear(wrong, 100, 100, kOutH, kOutW), DimensionError);
}

TEST_CASE("frame values stay inside [-1, 1] even with heavy noise") {
    NoiseConfig noise;
    noise.pixel_sigma = 0.5;
    noise.brightness_jitter = 0.5;
    noise.seed = 31;
    const Frame f = render(0.6, -0.2, kCfg, noise);
    for (float v : f.pixels) {
        REQUIRE(v >= -1.0f);
        REQUIRE(v <= 1.0f);
    }
}

TEST_CASE("config validation rejects out-of-range values") {
    CameraConfig bad = kCfg;
    bad.eta = 0.6;
    CHECK_THROWS_AS(render(0.5, 0.0, bad, {}), ConfigError);
    bad = kCfg;
    bad.led_intensity = 1.5;
    CHECK_THROWS_AS(render(0.5, 0.0, bad, {}), ConfigError);
    bad = kCfg;
    bad.n_rings = 0;
    CHECK_THROWS_AS(render(0.5, 0.0, bad, {}), ConfigError);
}

TEST_CASE("render_all: symmetric upright state gives identical channels") {
    plant::ArmState st;
    st.p = {1.02, 1.02, 1.02};
    plant::PlantParams params;
    NoiseConfig noise;  // noise off isolates the geometry
    noise.pixel_sigma = 0.0;
    noise.brightness_jitter = 0.0;
    const FrameStack stack = render_all(st, params, {kCfg, kCfg, kCfg}, noise);
    CHECK(stack.channels[0].pixels == stack.channels[1].pixels);
    CHECK(stack.channels[1].pixels == stack.channels[2].pixels);
}

TEST_CASE("render_all: pure alpha tilt moves channels B and C oppositely") {
    plant::PlantParams params;
    plant::ArmState upright;
    upright.p = {1.02, 1.02, 1.02};
    plant::ArmState tilted = upright;
    tilted.alpha = 25.0;

    const auto upright_def = plant::actuator_elongation(upright, params);
    const auto tilted_def = plant::actuator_elongation(tilted, params);
    // elongation term of channel A is untouched by alpha (sin 0 = 0)
    CHECK(tilted_def.elongation[0] == doctest::Approx(upright_def.elongation[0]));
    CHECK(tilted_def.elongation[1] - upright_def.elongation[1] ==
          doctest::Approx(-(tilted_def.elongation[2] - upright_def.elongation[2]))
              .epsilon(1e-12));

    NoiseConfig noise;
    noise.pixel_sigma = 0.0;
    noise.brightness_jitter = 0.0;
    const FrameStack a = render_all(upright, params, {kCfg, kCfg, kCfg}, noise);
    const FrameStack b = render_all(tilted, params, {kCfg, kCfg, kCfg}, noise);
    CHECK(stack_l2(a, b) > 0.0);
}

TEST_CASE("noise-free frame stacks are pairwise distinct over the workspace grid") {
    plant::PlantParams params;
    NoiseConfig noise;
    noise.pixel_sigma = 0.0;
    noise.brightness_jitter = 0.0;
    const std::array<CameraConfig, 3> cams{kCfg, kCfg, kCfg};

    const int n = 13;
    std::vector<FrameStack> stacks;
    stacks.reserve(n * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            plant::ArmState st;
            st.alpha = -30.0 + 60.0 * i / (n - 1);
            st.beta = -30.0 + 60.0 * j / (n - 1);
            st.p = {1.02, 1.02, 1.02};
            stacks.push_back(render_all(st, params, cams, noise));
        }
    }
    double min_dist = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < stacks.size(); ++a) {
        for (std::size_t b = a + 1; b < stacks.size(); ++b) {
            min_dist = std::min(min_dist, stack_l2(stacks[a], stacks[b]));
        }
    }
    CHECK(min_dist > 0.0);
}

#pragma once

#include <cstdint>
#include <string>

#include "softarm/camera.hpp"
#include "softarm/control.hpp"
#include "softarm/kinematics.hpp"
#include "softarm/plant.hpp"
#include "softarm/tinynet.hpp"

namespace softarm::config {

// Every constant of a run, aggregated from a flat key = value text file.
// Unknown or duplicate keys and malformed values are rejected.
struct RunConfig {
    kinematics::Calibration calib;
    plant::PlantParams plant;
    camera::CameraConfig camera;
    camera::NoiseConfig noise;
    control::Gains gains;

    // loop rates (Hz); position and logging must divide the physics rate
    int physics_hz = 1000;
    int position_hz = 50;
    int sensing_hz = 30;
    int log_hz = 10;

    // data collection
    int grid_rows = 7;
    int grid_cols = 7;
    double dwell_s = 4.0;
    double grid_range_deg = 30.0;
    double grid_offset_deg = 0.0;
    int sample_rate_hz = 10;
    std::uint64_t collect_seed = 12345;

    tinynet::TrainConfig train;

    // closed-loop experiment scenarios
    double sine_amplitude_deg = 20.0;
    double sine_period_s = 12.0;
    double run_duration_s = 60.0;
    std::uint64_t run_seed = 777;

    void validate() const;
};

RunConfig load_file(const std::string& path);

// Applies the SOFTARM_SEED environment override (when set) to every seed
// field; returns true if an override was applied.
bool apply_seed_override(RunConfig& cfg);

}  // namespace softarm::config

#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "softarm/config.hpp"
#include "softarm/dataset.hpp"
#include "softarm/tinynet.hpp"

namespace softarm::pipeline {

enum class FeedbackSource { kGroundTruth, kCnn };

struct TickCounts {
    std::uint64_t physics = 0;
    std::uint64_t position = 0;
    std::uint64_t sensing = 0;
    std::uint64_t logging = 0;
};

struct RunSummary {
    double rmse_alpha_deg = 0.0;     // prediction vs truth, at sensing updates
    double rmse_beta_deg = 0.0;
    double rmse_combined_deg = 0.0;
    double tracking_rmse_deg = 0.0;  // truth vs setpoint, at position ticks
    TickCounts ticks;
    std::uint64_t seed = 0;
};

struct RunResult {
    std::vector<dataset::LogRow> log;
    RunSummary summary;
    // prediction and truth sampled at every sensing update, for repeatability
    // comparisons between runs
    std::vector<std::array<double, 2>> predictions;
    std::vector<std::array<double, 2>> truths;
};

using SetpointFn = std::function<kinematics::Orientation(double t)>;

// Inference stand-in for tests: receives the rendered stack and the true
// state, returns the prediction used as feedback.
using SensingOverride =
    std::function<std::array<double, 2>(const camera::FrameStack&, const plant::ArmState&)>;

// Deterministic fixed-step schedule on the physics grid: pressure PI + plant
// every tick, position PI every physics/position ticks using the latest held
// feedback, sensing on a Bresenham schedule (33/34-tick alternation at
// 1000/30 Hz), logging at the log rate. Feedback is the plant state for
// kGroundTruth or the network prediction on quantized rendered frames for
// kCnn (zero-order hold in between). Throws DivergenceError if an angle
// leaves [-90, 90] deg or goes non-finite.
RunResult run_closed_loop(const config::RunConfig& cfg, const SetpointFn& setpoint,
                          FeedbackSource src, const tinynet::Network* model,
                          double duration_s, std::uint64_t seed,
                          const SensingOverride& sensing_override = {});

// Phase-offset sinusoids on both axes (beta lags alpha by a quarter period),
// with a one-period amplitude ramp-in.
RunResult run_sine_tracking(const config::RunConfig& cfg, FeedbackSource src,
                            const tinynet::Network* model);

struct StepsResult {
    RunResult first;
    RunResult second;
    double inter_rep_deviation_rms = 0.0;  // RMS difference of predictions
};

// Fixed step-and-ramp script on both axes, executed twice with distinct noise
// seeds to probe repeatability.
StepsResult run_steps_ramps(const config::RunConfig& cfg, FeedbackSource src,
                            const tinynet::Network* model);

struct EvalReport {
    double rmse_alpha_deg = 0.0;
    double rmse_beta_deg = 0.0;
    double rmse_combined_deg = 0.0;
    // pooled residual histogram over both axes, 40 bins covering [-5, 5] deg,
    // out-of-range residuals land in the edge bins
    std::array<std::uint64_t, 40> histogram{};
    std::size_t samples = 0;
};

EvalReport evaluate(const tinynet::Network& net, const tinynet::SampleSource& data,
                    int threads = 0);

// Closed-loop data collection on ground-truth feedback over a serpentine
// setpoint grid; writes a dataset file and returns the sample count.
// grid_override (rows, cols) and dwell/minutes let the CLI reshape the run:
// when minutes > 0 the grid is sized to fill that duration instead.
struct CollectOptions {
    int grid_rows = 0;     // 0 = use config
    int grid_cols = 0;
    double dwell_s = 0.0;  // 0 = use config
    double minutes = 0.0;  // > 0 overrides the grid sizing
    std::uint64_t seed = 0;  // 0 = use config collect seed
};

std::uint64_t collect_dataset(const config::RunConfig& cfg, const CollectOptions& opts,
                              const std::string& out_path);

void write_summary_json(const RunSummary& summary, const std::string& path);

}  // namespace softarm::pipeline

#include "softarm/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "softarm/errors.hpp"
#include "softarm/parallel.hpp"
#include "softarm/rng.hpp"

namespace softarm::pipeline {

namespace {

// Camera ADC emulation: rendered floats are quantized to u8 exactly like the
// dataset writer stores them, then normalized back, so runtime inference sees
// the same value grid the network was trained on.
void stack_to_net_input(const camera::FrameStack& stack, std::span<double> dst) {
    std::size_t j = 0;
    for (const camera::Frame& ch : stack.channels) {
        for (float v : ch.pixels) {
            dst[j++] = dataset::normalize_pixel(dataset::quantize_pixel(v));
        }
    }
}

void quantize_stack(const camera::FrameStack& stack, std::vector<std::uint8_t>& dst) {
    dst.resize(dataset::kPixelsPerSample);
    std::size_t j = 0;
    for (const camera::Frame& ch : stack.channels) {
        for (float v : ch.pixels) dst[j++] = dataset::quantize_pixel(v);
    }
}

void check_divergence(const plant::ArmState& state, double t) {
    if (!std::isfinite(state.alpha) || !std::isfinite(state.beta) ||
        std::fabs(state.alpha) > 90.0 || std::fabs(state.beta) > 90.0) {
        throw DivergenceError("simulation diverged at t = " + std::to_string(t) +
                              " s (alpha = " + std::to_string(state.alpha) +
                              ", beta = " + std::to_string(state.beta) + ")");
    }
}

struct SampleHook {
    std::uint64_t every_ticks = 0;  // 0 disables sampling
    std::function<void(std::uint64_t sample_idx, double t, const plant::ArmState&)> fn;
};

RunResult run_loop(const config::RunConfig& cfg, const SetpointFn& setpoint,
                   FeedbackSource src, const tinynet::Network* model, double duration_s,
                   std::uint64_t seed, const SensingOverride& sensing_override,
                   const SampleHook& sample_hook) {
    cfg.validate();
    if (src == FeedbackSource::kCnn && model == nullptr && !sensing_override) {
        throw ConfigError("run: CNN feedback requires a loaded model");
    }
    if (!(duration_s > 0.0)) throw ConfigError("run: duration must be > 0");

    const double dt = 1.0 / cfg.physics_hz;
    const std::uint64_t total_ticks =
        static_cast<std::uint64_t>(std::llround(duration_s * cfg.physics_hz));
    const std::uint64_t position_every = static_cast<std::uint64_t>(cfg.physics_hz / cfg.position_hz);
    const std::uint64_t log_every = static_cast<std::uint64_t>(cfg.physics_hz / cfg.log_hz);
    const double position_dt = static_cast<double>(position_every) * dt;

    plant::ArmState state;
    control::ControllerState ctrl;
    control::PressureSetpoints pressure_sp{cfg.gains.p_bar, cfg.gains.p_bar, cfg.gains.p_bar};
    control::AxisEffort effort;

    const std::array<camera::CameraConfig, 3> cams{cfg.camera, cfg.camera, cfg.camera};
    tinynet::Workspace ws;
    std::vector<double> net_input(tinynet::NetworkSpec::kInputSize);

    std::array<double, 2> held_pred{0.0, 0.0};
    std::uint64_t next_sense_tick = 0;
    std::uint64_t sense_idx = 0;

    RunResult res;
    res.summary.seed = seed;
    double pred_sq_a = 0.0, pred_sq_b = 0.0;
    double track_sq = 0.0;

    for (std::uint64_t tick = 0; tick < total_ticks; ++tick) {
        const double t = static_cast<double>(tick) * dt;

        if (tick == next_sense_tick) {
            if (src == FeedbackSource::kGroundTruth) {
                held_pred = {state.alpha, state.beta};
            } else {
                camera::NoiseConfig frame_noise = cfg.noise;
                frame_noise.seed = hash_combine(seed, sense_idx);
                const camera::FrameStack stack =
                    camera::render_all(state, cfg.plant, cams, frame_noise);
                if (sensing_override) {
                    held_pred = sensing_override(stack, state);
                } else {
                    stack_to_net_input(stack, net_input);
                    held_pred = tinynet::forward(*model, std::span<const double>(net_input), ws);
                }
            }
            const double ea = held_pred[0] - state.alpha;
            const double eb = held_pred[1] - state.beta;
            pred_sq_a += ea * ea;
            pred_sq_b += eb * eb;
            res.predictions.push_back(held_pred);
            res.truths.push_back({state.alpha, state.beta});
            res.summary.ticks.sensing += 1;
            sense_idx += 1;
            next_sense_tick = sense_idx * static_cast<std::uint64_t>(cfg.physics_hz) /
                              static_cast<std::uint64_t>(cfg.sensing_hz);
        }

        kinematics::Orientation sp{};
        if (tick % position_every == 0) {
            sp = setpoint(t);
            kinematics::Orientation meas{held_pred[0], held_pred[1]};
            effort = control::position_pi(sp, meas, ctrl, cfg.gains, position_dt);
            const auto diff = control::align_to_actuators(effort.u_alpha, effort.u_beta);
            pressure_sp = control::clamp_setpoints(
                control::allocate(diff[0], diff[1], cfg.gains.p_bar), cfg.gains.p_bar,
                plant::kPMax);
            const double ta = sp.alpha - state.alpha;
            const double tb = sp.beta - state.beta;
            track_sq += ta * ta + tb * tb;
            res.summary.ticks.position += 1;
        } else {
            sp = setpoint(t);
        }

        const auto valves = control::pressure_pi(pressure_sp, state.p, ctrl, cfg.gains, dt);

        if (tick % log_every == 0) {
            dataset::LogRow row;
            row.t = t;
            row.alpha_gt = state.alpha;
            row.beta_gt = state.beta;
            row.alpha_pred = held_pred[0];
            row.beta_pred = held_pred[1];
            row.alpha_sp = sp.alpha;
            row.beta_sp = sp.beta;
            row.p_a = state.p[0];
            row.p_b = state.p[1];
            row.p_c = state.p[2];
            row.u_alpha = effort.u_alpha;
            row.u_beta = effort.u_beta;
            res.log.push_back(row);
            res.summary.ticks.logging += 1;
        }

        if (sample_hook.every_ticks != 0 && tick % sample_hook.every_ticks == 0) {
            sample_hook.fn(tick / sample_hook.every_ticks, t, state);
        }

        plant::pressure_step(state, valves, cfg.plant, dt);
        plant::dynamics_step(state, cfg.plant, dt);
        res.summary.ticks.physics += 1;
        check_divergence(state, t + dt);
    }

    const double n_sense = static_cast<double>(std::max<std::uint64_t>(res.summary.ticks.sensing, 1));
    const double n_pos = static_cast<double>(std::max<std::uint64_t>(res.summary.ticks.position, 1));
    res.summary.rmse_alpha_deg = std::sqrt(pred_sq_a / n_sense);
    res.summary.rmse_beta_deg = std::sqrt(pred_sq_b / n_sense);
    res.summary.rmse_combined_deg = std::sqrt((pred_sq_a + pred_sq_b) / (2.0 * n_sense));
    res.summary.tracking_rmse_deg = std::sqrt(track_sq / (2.0 * n_pos));
    return res;
}

}  // namespace

RunResult run_closed_loop(const config::RunConfig& cfg, const SetpointFn& setpoint,
                          FeedbackSource src, const tinynet::Network* model,
                          double duration_s, std::uint64_t seed,
                          const SensingOverride& sensing_override) {
    return run_loop(cfg, setpoint, src, model, duration_s, seed, sensing_override, {});
}

RunResult run_sine_tracking(const config::RunConfig& cfg, FeedbackSource src,
                            const tinynet::Network* model) {
    const double amp = cfg.sine_amplitude_deg;
    const double period = cfg.sine_period_s;
    const SetpointFn sines = [amp, period](double t) {
        const double envelope = std::min(t / period, 1.0);
        const double phase = 2.0 * kinematics::kPi * t / period;
        kinematics::Orientation sp;
        sp.alpha = envelope * amp * std::sin(phase);
        sp.beta = envelope * amp * std::sin(phase - kinematics::kPi / 2.0);
        return sp;
    };
    return run_closed_loop(cfg, sines, src, model, cfg.run_duration_s, cfg.run_seed);
}

namespace {

struct ScriptSegment {
    double t_end;
    double alpha, beta;
    bool ramp;  // ramp from the previous segment's targets instead of stepping
};

// Step-and-ramp script covering both axes, 38 s.
constexpr std::array<ScriptSegment, 10> kStepScript{{
    {3.0, 0.0, 0.0, false},
    {7.0, 15.0, 0.0, false},
    {11.0, -20.0, 0.0, false},
    {15.0, 20.0, 0.0, true},
    {19.0, 20.0, 10.0, false},
    {23.0, 0.0, -15.0, false},
    {27.0, 0.0, 20.0, true},
    {31.0, -10.0, -10.0, false},
    {35.0, 12.0, 18.0, false},
    {38.0, 0.0, 0.0, false},
}};

kinematics::Orientation step_script_at(double t) {
    double prev_a = 0.0, prev_b = 0.0, prev_end = 0.0;
    for (const ScriptSegment& seg : kStepScript) {
        if (t < seg.t_end) {
            if (!seg.ramp) return {seg.alpha, seg.beta};
            const double f = (t - prev_end) / (seg.t_end - prev_end);
            return {prev_a + f * (seg.alpha - prev_a), prev_b + f * (seg.beta - prev_b)};
        }
        prev_a = seg.alpha;
        prev_b = seg.beta;
        prev_end = seg.t_end;
    }
    return {0.0, 0.0};
}

}  // namespace

StepsResult run_steps_ramps(const config::RunConfig& cfg, FeedbackSource src,
                            const tinynet::Network* model) {
    const double duration = kStepScript.back().t_end;
    StepsResult out;
    out.first = run_closed_loop(cfg, step_script_at, src, model, duration,
                                hash_combine(cfg.run_seed, 1));
    out.second = run_closed_loop(cfg, step_script_at, src, model, duration,
                                 hash_combine(cfg.run_seed, 2));
    const std::size_t n = std::min(out.first.predictions.size(), out.second.predictions.size());
    double sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double da = out.first.predictions[i][0] - out.second.predictions[i][0];
        const double db = out.first.predictions[i][1] - out.second.predictions[i][1];
        sq += da * da + db * db;
    }
    out.inter_rep_deviation_rms = n > 0 ? std::sqrt(sq / (2.0 * static_cast<double>(n))) : 0.0;
    return out;
}

EvalReport evaluate(const tinynet::Network& net, const tinynet::SampleSource& data,
                    int threads) {
    const std::size_t n = data.size();
    if (n == 0) throw EmptyDatasetError("evaluate: dataset is empty");
    if (threads <= 0) threads = default_thread_count();

    std::vector<tinynet::Workspace> slots(threads);
    std::vector<std::array<double, 2>> residuals(n);
    parallel_for_slotted(0, n, threads, [&](std::size_t slot, std::size_t i) {
        tinynet::Workspace& ws = slots[slot];
        data.fill_input(i, ws.input);
        const auto pred = tinynet::forward(net, std::span<const double>(ws.input), ws);
        const auto tgt = data.label(i);
        residuals[i] = {pred[0] - tgt[0], pred[1] - tgt[1]};
    });

    EvalReport rep;
    rep.samples = n;
    double sq_a = 0.0, sq_b = 0.0;
    for (const auto& r : residuals) {
        sq_a += r[0] * r[0];
        sq_b += r[1] * r[1];
        for (double v : r) {
            const int bin = std::clamp(static_cast<int>(std::floor((v + 5.0) / 0.25)), 0, 39);
            rep.histogram[static_cast<std::size_t>(bin)] += 1;
        }
    }
    rep.rmse_alpha_deg = std::sqrt(sq_a / static_cast<double>(n));
    rep.rmse_beta_deg = std::sqrt(sq_b / static_cast<double>(n));
    rep.rmse_combined_deg = std::sqrt((sq_a + sq_b) / (2.0 * static_cast<double>(n)));
    return rep;
}

std::uint64_t collect_dataset(const config::RunConfig& cfg, const CollectOptions& opts,
                              const std::string& out_path) {
    config::RunConfig run_cfg = cfg;
    run_cfg.validate();

    int rows = opts.grid_rows > 0 ? opts.grid_rows : cfg.grid_rows;
    int cols = opts.grid_cols > 0 ? opts.grid_cols : cfg.grid_cols;
    const double dwell = opts.dwell_s > 0.0 ? opts.dwell_s : cfg.dwell_s;
    const std::uint64_t seed = opts.seed != 0 ? opts.seed : cfg.collect_seed;

    double duration;
    if (opts.minutes > 0.0) {
        const int n_points = static_cast<int>(std::ceil(opts.minutes * 60.0 / dwell));
        rows = std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(n_points)))));
        cols = (n_points + rows - 1) / rows;
        duration = opts.minutes * 60.0;
    } else {
        duration = static_cast<double>(rows) * cols * dwell;
    }
    if (rows < 1 || cols < 1) throw ConfigError("collect: grid must be at least 1x1");

    const double range = cfg.grid_range_deg;
    const double offset = cfg.grid_offset_deg;
    auto grid_value = [range, offset](int i, int count) {
        if (count == 1) return offset;
        return offset - range + 2.0 * range * static_cast<double>(i) / (count - 1);
    };

    // Serpentine traversal: row-major with every other row reversed, which
    // keeps consecutive setpoint jumps small.
    const SetpointFn grid_fn = [=](double t) {
        const int idx = std::min(static_cast<int>(t / dwell), rows * cols - 1);
        const int row = idx / cols;
        int col = idx % cols;
        if (row % 2 == 1) col = cols - 1 - col;
        return kinematics::Orientation{grid_value(row, rows), grid_value(col, cols)};
    };

    const std::uint64_t sample_every =
        static_cast<std::uint64_t>(cfg.physics_hz / cfg.sample_rate_hz);
    const std::uint64_t expected =
        static_cast<std::uint64_t>(std::llround(duration * cfg.physics_hz)) == 0
            ? 0
            : (static_cast<std::uint64_t>(std::llround(duration * cfg.physics_hz)) +
               sample_every - 1) /
                  sample_every;

    std::string metadata = "grid=" + std::to_string(rows) + "x" + std::to_string(cols) +
                           " dwell_s=" + std::to_string(dwell) +
                           " rate_hz=" + std::to_string(cfg.sample_rate_hz) +
                           " range_deg=" + std::to_string(range) +
                           " offset_deg=" + std::to_string(offset);
    dataset::DatasetWriter writer(out_path, expected, seed, metadata);

    const std::array<camera::CameraConfig, 3> cams{cfg.camera, cfg.camera, cfg.camera};
    std::vector<std::uint8_t> pixel_buf;
    SampleHook hook;
    hook.every_ticks = sample_every;
    hook.fn = [&](std::uint64_t sample_idx, double t, const plant::ArmState& state) {
        camera::NoiseConfig frame_noise = cfg.noise;
        frame_noise.seed = hash_combine(seed, sample_idx);
        const camera::FrameStack stack = camera::render_all(state, cfg.plant, cams, frame_noise);
        quantize_stack(stack, pixel_buf);
        writer.append(pixel_buf, static_cast<float>(state.alpha),
                      static_cast<float>(state.beta), t);
    };

    run_loop(run_cfg, grid_fn, FeedbackSource::kGroundTruth, nullptr, duration, seed, {}, hook);
    writer.finish();
    return expected;
}

void write_summary_json(const RunSummary& summary, const std::string& path) {
    nlohmann::json j;
    j["rmse_alpha_deg"] = summary.rmse_alpha_deg;
    j["rmse_beta_deg"] = summary.rmse_beta_deg;
    j["rmse_combined_deg"] = summary.rmse_combined_deg;
    j["tracking_rmse_deg"] = summary.tracking_rmse_deg;
    j["ticks"] = summary.ticks.physics;
    j["seed"] = summary.seed;
    j["tick_counts"] = {{"physics", summary.ticks.physics},
                        {"position", summary.ticks.position},
                        {"sensing", summary.ticks.sensing},
                        {"logging", summary.ticks.logging}};
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("write_summary_json: cannot open " + path);
    f << j.dump(2) << "\n";
    if (!f) throw IoError("write_summary_json: write failure on " + path);
}

}  // namespace softarm::pipeline

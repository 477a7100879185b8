#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "softarm/config.hpp"
#include "softarm/dataset.hpp"
#include "softarm/errors.hpp"
#include "softarm/pipeline.hpp"
#include "softarm/tinynet.hpp"

namespace {

using namespace softarm;

constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNonFiniteLoss = 4;
constexpr int kExitDivergence = 5;

// Relative output paths land under SOFTARM_OUTDIR when it is set.
std::string resolve_out(const std::string& path) {
    const char* outdir = std::getenv("SOFTARM_OUTDIR");
    if (outdir == nullptr || path.empty() || std::filesystem::path(path).is_absolute()) {
        return path;
    }
    return (std::filesystem::path(outdir) / path).string();
}

config::RunConfig load_config(const std::string& path) {
    config::RunConfig cfg = config::load_file(path);
    if (config::apply_seed_override(cfg)) {
        std::cerr << "note: SOFTARM_SEED override active\n";
    }
    return cfg;
}

void parse_grid(const std::string& spec, int& rows, int& cols) {
    const auto x = spec.find('x');
    if (x == std::string::npos) throw ConfigError("--grid expects ROWSxCOLS, e.g. 7x7");
    try {
        rows = std::stoi(spec.substr(0, x));
        cols = std::stoi(spec.substr(x + 1));
    } catch (const std::exception&) {
        throw ConfigError("--grid expects ROWSxCOLS, e.g. 7x7");
    }
    if (rows < 1 || cols < 1) throw ConfigError("--grid dimensions must be >= 1");
}

int cmd_collect(const std::string& config_path, const std::string& out,
                const std::string& grid, double dwell, double minutes,
                std::uint64_t seed) {
    config::RunConfig cfg = load_config(config_path);
    pipeline::CollectOptions opts;
    if (!grid.empty()) parse_grid(grid, opts.grid_rows, opts.grid_cols);
    opts.dwell_s = dwell;
    opts.minutes = minutes;
    opts.seed = seed;
    const std::string out_path = resolve_out(out);
    const std::uint64_t n = pipeline::collect_dataset(cfg, opts, out_path);
    const double duration =
        static_cast<double>(n) / static_cast<double>(cfg.sample_rate_hz);
    std::printf("wrote %llu samples (%.1f s of simulated time) to %s\n",
                static_cast<unsigned long long>(n), duration, out_path.c_str());
    return 0;
}

int cmd_train(const std::string& config_path, const std::string& data_path,
              const std::string& val_path, const std::string& out, int epochs_override) {
    config::RunConfig cfg = load_config(config_path);
    if (epochs_override >= 0) cfg.train.epochs = epochs_override;

    const dataset::Dataset train_set = dataset::Dataset::load(data_path);
    std::optional<dataset::Dataset> val_set;
    if (!val_path.empty()) val_set = dataset::Dataset::load(val_path);

    tinynet::Network net = tinynet::Network::random_init(cfg.train.shuffle_seed);
    const auto history =
        tinynet::train(net, train_set, val_set ? &*val_set : nullptr, cfg.train);

    for (const auto& ep : history) {
        if (!std::isfinite(ep.train_mse) ||
            (val_set && !std::isfinite(ep.val_mse))) {
            std::cerr << "error: non-finite loss at epoch " << ep.epoch << "\n";
            return kExitNonFiniteLoss;
        }
    }

    const std::string out_path = resolve_out(out);
    tinynet::save(net, out_path);

    const std::string loss_path = out_path + ".loss.csv";
    std::ofstream loss_csv(loss_path, std::ios::trunc);
    if (!loss_csv) throw IoError("cannot open " + loss_path);
    loss_csv << "epoch,train_mse_deg2,val_mse_deg2\n";
    char line[160];
    for (const auto& ep : history) {
        std::snprintf(line, sizeof(line), "%d,%.17g,%.17g\n", ep.epoch, ep.train_mse,
                      ep.val_mse);
        loss_csv << line;
    }

    const tinynet::SampleSource& eval_src =
        val_set ? static_cast<const tinynet::SampleSource&>(*val_set) : train_set;
    const auto report = pipeline::evaluate(net, eval_src, cfg.train.threads);
    std::printf("model: %s (%zu parameters)\n", out_path.c_str(),
                tinynet::Network::param_count());
    std::printf("loss history: %s\n", loss_path.c_str());
    std::printf("final combined RMSE [deg]: %.4f (%s set)\n", report.rmse_combined_deg,
                val_set ? "validation" : "training");
    return 0;
}

int cmd_evaluate(const std::string& model_path, const std::string& data_path) {
    const tinynet::Network net = tinynet::load(model_path);
    const dataset::Dataset data = dataset::Dataset::load(data_path);
    const auto rep = pipeline::evaluate(net, data);
    std::printf("samples: %zu\n", rep.samples);
    std::printf("rmse_alpha_deg: %.4f\n", rep.rmse_alpha_deg);
    std::printf("rmse_beta_deg: %.4f\n", rep.rmse_beta_deg);
    std::printf("rmse_combined_deg: %.4f\n", rep.rmse_combined_deg);
    std::printf("residual histogram [-5 deg, 5 deg], 0.25 deg bins:\n");
    for (int i = 0; i < 40; ++i) {
        if (rep.histogram[i] == 0) continue;
        std::printf("  [%+.2f, %+.2f): %llu\n", -5.0 + 0.25 * i, -5.0 + 0.25 * (i + 1),
                    static_cast<unsigned long long>(rep.histogram[i]));
    }
    return 0;
}

int cmd_run(const std::string& config_path, const std::string& model_path,
            const std::string& feedback, const std::string& scenario,
            const std::string& out_dir) {
    config::RunConfig cfg = load_config(config_path);

    pipeline::FeedbackSource src;
    if (feedback == "truth") {
        src = pipeline::FeedbackSource::kGroundTruth;
    } else if (feedback == "cnn") {
        src = pipeline::FeedbackSource::kCnn;
    } else {
        throw ConfigError("--feedback must be 'truth' or 'cnn'");
    }
    std::optional<tinynet::Network> net;
    if (src == pipeline::FeedbackSource::kCnn) {
        if (model_path.empty()) throw ConfigError("--feedback cnn requires --model");
        net = tinynet::load(model_path);
    }

    const std::string dir = resolve_out(out_dir);
    std::filesystem::create_directories(dir);
    const auto in_dir = [&dir](const std::string& name) {
        return (std::filesystem::path(dir) / name).string();
    };

    if (scenario == "sine") {
        const auto res = pipeline::run_sine_tracking(cfg, src, net ? &*net : nullptr);
        dataset::export_csv(res.log, in_dir("run_log.csv"));
        pipeline::write_summary_json(res.summary, in_dir("summary.json"));
        std::printf("scenario: sine (amplitude %.1f deg, period %.1f s, %.0f s)\n",
                    cfg.sine_amplitude_deg, cfg.sine_period_s, cfg.run_duration_s);
        std::printf("prediction rmse_alpha_deg: %.4f\n", res.summary.rmse_alpha_deg);
        std::printf("prediction rmse_beta_deg: %.4f\n", res.summary.rmse_beta_deg);
        std::printf("prediction rmse_combined_deg: %.4f\n", res.summary.rmse_combined_deg);
        std::printf("tracking rmse_deg: %.4f\n", res.summary.tracking_rmse_deg);
    } else if (scenario == "steps") {
        const auto res = pipeline::run_steps_ramps(cfg, src, net ? &*net : nullptr);
        dataset::export_csv(res.first.log, in_dir("run_log_rep1.csv"));
        dataset::export_csv(res.second.log, in_dir("run_log_rep2.csv"));
        pipeline::write_summary_json(res.first.summary, in_dir("summary.json"));
        std::printf("scenario: steps+ramps, two repetitions\n");
        std::printf("rep1 prediction rmse alpha/beta [deg]: %.4f / %.4f\n",
                    res.first.summary.rmse_alpha_deg, res.first.summary.rmse_beta_deg);
        std::printf("rep2 prediction rmse alpha/beta [deg]: %.4f / %.4f\n",
                    res.second.summary.rmse_alpha_deg, res.second.summary.rmse_beta_deg);
        std::printf("inter-repetition prediction deviation rms [deg]: %.4f\n",
                    res.inter_rep_deviation_rms);
        std::printf("rep1 tracking rmse_deg: %.4f\n", res.first.summary.tracking_rmse_deg);
    } else {
        throw ConfigError("--scenario must be 'steps' or 'sine'");
    }
    std::printf("logs written to %s\n", dir.c_str());
    return 0;
}

int cmd_inspect(const std::string& model_path, const std::string& data_path) {
    if (model_path.empty() == data_path.empty()) {
        throw ConfigError("inspect needs exactly one of --model or --data");
    }
    if (!model_path.empty()) {
        const tinynet::Network net = tinynet::load(model_path);
        std::printf("%zu parameters\n", tinynet::Network::param_count());
        const char* names[] = {"conv1", "conv2", "conv3", "dense1", "dense2"};
        int i = 0;
        for (const auto& l : tinynet::Network::layers()) {
            if (l.role == tinynet::LayerView::Role::kConv) {
                std::printf("  %s: conv %dx%dx%dx%d + %d bias -> %zu params\n", names[i],
                            l.out_n, l.in_n, l.kh, l.kw, l.out_n, l.param_count());
            } else {
                std::printf("  %s: dense %dx%d + %d bias -> %zu params\n", names[i], l.out_n,
                            l.in_n, l.out_n, l.param_count());
            }
            ++i;
        }
        std::printf("feature maps: 4x24x32, 8x6x8, 16x3x4\n");
    } else {
        const dataset::Dataset ds = dataset::Dataset::load(data_path);
        std::printf("samples: %zu\n", ds.size());
        std::printf("dims: 3x120x160 u8\n");
        std::printf("seed: %llu\n", static_cast<unsigned long long>(ds.seed()));
        std::printf("metadata: %s\n", ds.metadata().c_str());
        if (ds.size() > 0) {
            std::printf("t range: [%.3f, %.3f] s\n", ds.timestamp(0),
                        ds.timestamp(ds.size() - 1));
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"softarm: simulated spherical soft-arm with vision-based proprioception"};
    app.require_subcommand(1);

    std::string config_path, out, grid, data_path, val_path, model_path, feedback = "truth",
                               scenario = "sine";
    double dwell = 0.0, minutes = 0.0;
    std::uint64_t seed = 0;
    int epochs_override = -1;

    auto* collect = app.add_subcommand("collect", "record a dataset from the simulated arm");
    collect->add_option("--config", config_path, "run configuration file")->required();
    collect->add_option("--out", out, "output dataset path")->required();
    collect->add_option("--grid", grid, "setpoint grid ROWSxCOLS (default from config)");
    collect->add_option("--dwell", dwell, "dwell time per setpoint [s]");
    collect->add_option("--minutes", minutes, "size the grid for this many minutes instead");
    collect->add_option("--seed", seed, "override the collection seed");

    auto* train = app.add_subcommand("train", "train the angle regressor on a dataset");
    train->add_option("--config", config_path, "run configuration file")->required();
    train->add_option("--data", data_path, "training dataset")->required();
    train->add_option("--val", val_path, "validation dataset");
    train->add_option("--out", out, "output model path")->required();
    train->add_option("--epochs", epochs_override, "override the configured epoch count");

    auto* evaluate = app.add_subcommand("evaluate", "report RMSE of a model on a dataset");
    evaluate->add_option("--model", model_path, "model file")->required();
    evaluate->add_option("--data", data_path, "dataset file")->required();

    auto* run = app.add_subcommand("run", "closed-loop tracking experiment");
    run->add_option("--config", config_path, "run configuration file")->required();
    run->add_option("--model", model_path, "model file (required for --feedback cnn)");
    run->add_option("--feedback", feedback, "feedback source: truth | cnn");
    run->add_option("--scenario", scenario, "setpoint scenario: steps | sine");
    run->add_option("--out", out, "output directory")->required();

    auto* inspect = app.add_subcommand("inspect", "print model or dataset structure");
    inspect->add_option("--model", model_path, "model file");
    inspect->add_option("--data", data_path, "dataset file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitConfig;
    }

    try {
        if (collect->parsed()) return cmd_collect(config_path, out, grid, dwell, minutes, seed);
        if (train->parsed()) return cmd_train(config_path, data_path, val_path, out, epochs_override);
        if (evaluate->parsed()) return cmd_evaluate(model_path, data_path);
        if (run->parsed()) return cmd_run(config_path, model_path, feedback, scenario, out);
        if (inspect->parsed()) return cmd_inspect(model_path, data_path);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << "\n";
        return kExitDivergence;
    } catch (const FormatError& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return kExitIo;
    } catch (const IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

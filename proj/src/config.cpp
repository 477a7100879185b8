#include "softarm/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>

#include "softarm/errors.hpp"

namespace softarm::config {

namespace {

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument("trailing garbage");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: key '" + key + "' expects a number, got '" + value + "'");
    }
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config: key '" + key + "' expects an integer, got '" + value + "'");
    }
    return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
    if (ec != std::errc() || ptr != value.data() + value.size()) {
        throw ConfigError("config: key '" + key + "' expects an unsigned integer, got '" +
                          value + "'");
    }
    return v;
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

std::map<std::string, Setter> build_registry() {
    std::map<std::string, Setter> reg;
    auto add_d = [&reg](const std::string& key, auto accessor) {
        reg[key] = [accessor](RunConfig& c, const std::string& k, const std::string& v) {
            accessor(c) = parse_double(k, v);
        };
    };
    auto add_i = [&reg](const std::string& key, auto accessor) {
        reg[key] = [accessor](RunConfig& c, const std::string& k, const std::string& v) {
            accessor(c) = static_cast<int>(parse_int(k, v));
        };
    };
    auto add_u = [&reg](const std::string& key, auto accessor) {
        reg[key] = [accessor](RunConfig& c, const std::string& k, const std::string& v) {
            accessor(c) = parse_u64(k, v);
        };
    };

    add_d("calib.x0", [](RunConfig& c) -> double& { return c.calib.x0; });
    add_d("calib.y0", [](RunConfig& c) -> double& { return c.calib.y0; });
    add_d("calib.z0", [](RunConfig& c) -> double& { return c.calib.z0; });
    add_d("calib.R", [](RunConfig& c) -> double& { return c.calib.R; });

    add_d("plant.tau_p", [](RunConfig& c) -> double& { return c.plant.tau_p; });
    add_d("plant.k_v", [](RunConfig& c) -> double& { return c.plant.k_v; });
    add_d("plant.J", [](RunConfig& c) -> double& { return c.plant.J; });
    add_d("plant.d", [](RunConfig& c) -> double& { return c.plant.d; });
    add_d("plant.k_t", [](RunConfig& c) -> double& { return c.plant.k_t; });
    add_d("plant.k_s", [](RunConfig& c) -> double& { return c.plant.k_s; });
    add_d("plant.e0", [](RunConfig& c) -> double& { return c.plant.e0; });
    add_d("plant.c_p", [](RunConfig& c) -> double& { return c.plant.c_p; });
    add_d("plant.c_a", [](RunConfig& c) -> double& { return c.plant.c_a; });
    add_d("plant.c_l", [](RunConfig& c) -> double& { return c.plant.c_l; });

    add_d("camera.eta", [](RunConfig& c) -> double& { return c.camera.eta; });
    add_d("camera.rho_deg", [](RunConfig& c) -> double& { return c.camera.rho_deg; });
    add_i("camera.n_rings", [](RunConfig& c) -> int& { return c.camera.n_rings; });
    add_d("camera.dot_diameter_px",
          [](RunConfig& c) -> double& { return c.camera.dot_diameter_px; });
    add_i("camera.dot_count", [](RunConfig& c) -> int& { return c.camera.dot_count; });
    add_d("camera.led_intensity",
          [](RunConfig& c) -> double& { return c.camera.led_intensity; });
    add_d("camera.r_base_frac", [](RunConfig& c) -> double& { return c.camera.r_base_frac; });
    add_d("camera.ring_shrink", [](RunConfig& c) -> double& { return c.camera.ring_shrink; });
    add_d("camera.r_cut_frac", [](RunConfig& c) -> double& { return c.camera.r_cut_frac; });
    add_d("camera.dot_r0_frac", [](RunConfig& c) -> double& { return c.camera.dot_r0_frac; });
    add_d("camera.dot_shrink", [](RunConfig& c) -> double& { return c.camera.dot_shrink; });
    add_d("camera.lateral_gain",
          [](RunConfig& c) -> double& { return c.camera.lateral_gain; });
    add_d("camera.persp_strength",
          [](RunConfig& c) -> double& { return c.camera.persp_strength; });
    add_d("camera.ring_sigma_px",
          [](RunConfig& c) -> double& { return c.camera.ring_sigma_px; });
    add_d("camera.background", [](RunConfig& c) -> double& { return c.camera.background; });
    add_d("camera.falloff", [](RunConfig& c) -> double& { return c.camera.falloff; });

    add_d("noise.pixel_sigma", [](RunConfig& c) -> double& { return c.noise.pixel_sigma; });
    add_d("noise.brightness_jitter",
          [](RunConfig& c) -> double& { return c.noise.brightness_jitter; });
    add_u("noise.seed", [](RunConfig& c) -> std::uint64_t& { return c.noise.seed; });

    add_d("control.kp", [](RunConfig& c) -> double& { return c.gains.kp; });
    add_d("control.ki", [](RunConfig& c) -> double& { return c.gains.ki; });
    add_d("control.kt_p", [](RunConfig& c) -> double& { return c.gains.kt_p; });
    add_d("control.kt_i", [](RunConfig& c) -> double& { return c.gains.kt_i; });
    add_d("control.p_bar", [](RunConfig& c) -> double& { return c.gains.p_bar; });
    add_d("control.u_limit", [](RunConfig& c) -> double& { return c.gains.u_limit; });
    add_d("control.outer_int_limit",
          [](RunConfig& c) -> double& { return c.gains.outer_int_limit; });
    add_d("control.inner_int_limit",
          [](RunConfig& c) -> double& { return c.gains.inner_int_limit; });

    add_i("rates.physics_hz", [](RunConfig& c) -> int& { return c.physics_hz; });
    add_i("rates.position_hz", [](RunConfig& c) -> int& { return c.position_hz; });
    add_i("rates.sensing_hz", [](RunConfig& c) -> int& { return c.sensing_hz; });
    add_i("rates.log_hz", [](RunConfig& c) -> int& { return c.log_hz; });

    add_i("collect.grid_rows", [](RunConfig& c) -> int& { return c.grid_rows; });
    add_i("collect.grid_cols", [](RunConfig& c) -> int& { return c.grid_cols; });
    add_d("collect.dwell_s", [](RunConfig& c) -> double& { return c.dwell_s; });
    add_d("collect.range_deg", [](RunConfig& c) -> double& { return c.grid_range_deg; });
    add_d("collect.grid_offset_deg",
          [](RunConfig& c) -> double& { return c.grid_offset_deg; });
    add_i("collect.rate_hz", [](RunConfig& c) -> int& { return c.sample_rate_hz; });
    add_u("collect.seed", [](RunConfig& c) -> std::uint64_t& { return c.collect_seed; });

    add_d("train.lr", [](RunConfig& c) -> double& { return c.train.lr; });
    add_i("train.batch", [](RunConfig& c) -> int& { return c.train.batch; });
    add_i("train.epochs", [](RunConfig& c) -> int& { return c.train.epochs; });
    add_d("train.weight_decay", [](RunConfig& c) -> double& { return c.train.weight_decay; });
    add_d("train.beta1", [](RunConfig& c) -> double& { return c.train.beta1; });
    add_d("train.beta2", [](RunConfig& c) -> double& { return c.train.beta2; });
    add_d("train.eps", [](RunConfig& c) -> double& { return c.train.eps; });
    add_u("train.seed", [](RunConfig& c) -> std::uint64_t& { return c.train.shuffle_seed; });
    add_i("train.threads", [](RunConfig& c) -> int& { return c.train.threads; });

    add_d("run.sine_amplitude_deg",
          [](RunConfig& c) -> double& { return c.sine_amplitude_deg; });
    add_d("run.sine_period_s", [](RunConfig& c) -> double& { return c.sine_period_s; });
    add_d("run.duration_s", [](RunConfig& c) -> double& { return c.run_duration_s; });
    add_u("run.seed", [](RunConfig& c) -> std::uint64_t& { return c.run_seed; });

    return reg;
}

}  // namespace

void RunConfig::validate() const {
    calib.validate();
    plant.validate();
    camera.validate();
    noise.validate();
    gains.validate();
    train.validate();
    if (physics_hz <= 0 || position_hz <= 0 || sensing_hz <= 0 || log_hz <= 0) {
        throw ConfigError("config: all rates must be > 0");
    }
    if (physics_hz % position_hz != 0) {
        throw ConfigError("config: rates.position_hz must divide rates.physics_hz");
    }
    if (physics_hz % log_hz != 0) {
        throw ConfigError("config: rates.log_hz must divide rates.physics_hz");
    }
    if (sensing_hz > physics_hz) {
        throw ConfigError("config: rates.sensing_hz cannot exceed rates.physics_hz");
    }
    if (grid_rows < 1 || grid_cols < 1) {
        throw ConfigError("config: collect grid must be at least 1x1");
    }
    if (!(grid_range_deg > 0.0) || grid_range_deg > 30.0) {
        throw ConfigError("config: collect.range_deg must be in (0, 30]");
    }
    if (std::fabs(grid_offset_deg) + grid_range_deg > 30.0) {
        throw ConfigError("config: offset grid must stay within [-30, 30] deg");
    }
    if (!(dwell_s > 0.0)) throw ConfigError("config: collect.dwell_s must be > 0");
    if (sample_rate_hz <= 0 || physics_hz % sample_rate_hz != 0) {
        throw ConfigError("config: collect.rate_hz must divide rates.physics_hz");
    }
    if (!(sine_amplitude_deg >= 0.0) || sine_amplitude_deg > 30.0) {
        throw ConfigError("config: run.sine_amplitude_deg must be in [0, 30]");
    }
    if (!(sine_period_s > 0.0) || !(run_duration_s > 0.0)) {
        throw ConfigError("config: run durations must be > 0");
    }
}

RunConfig load_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("config: cannot open " + path);

    static const std::map<std::string, Setter> registry = build_registry();
    RunConfig cfg;
    std::set<std::string> seen;

    std::string line;
    int line_no = 0;
    while (std::getline(f, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: line " + std::to_string(line_no) +
                              " is not of the form key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = registry.find(key);
        if (it == registry.end()) {
            throw ConfigError("config: unknown key '" + key + "' on line " +
                              std::to_string(line_no));
        }
        if (!seen.insert(key).second) {
            throw ConfigError("config: duplicate key '" + key + "' on line " +
                              std::to_string(line_no));
        }
        it->second(cfg, key, value);
    }
    cfg.validate();
    return cfg;
}

bool apply_seed_override(RunConfig& cfg) {
    const char* env = std::getenv("SOFTARM_SEED");
    if (env == nullptr) return false;
    const std::uint64_t seed = parse_u64("SOFTARM_SEED", env);
    cfg.noise.seed = seed;
    cfg.collect_seed = seed;
    cfg.train.shuffle_seed = seed;
    cfg.run_seed = seed;
    return true;
}

}  // namespace softarm::config

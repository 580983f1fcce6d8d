#pragma once

// Run configuration: a flat `key = value` text file with dotted keys,
// optionally overridden from the command line.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace qisim::cli {

using KeyValues = std::map<std::string, std::string>;

struct SourceConfig {
    double gamma_hz = 5e6;
    std::string pump_kind = "gaussian";
    std::optional<double> T_p_s = 30e-9;
    std::optional<double> sigma_hz;
};

// Unset optionals are fitted.
struct EitConfig {
    double od = 55.0;
    double rabi_hz = 12.6e6;
    double gamma_ge_hz = 2.87e6;
    std::optional<double> gamma_s_hz;
    double length_m = 4e-3;
    double eta0 = 0.2;
    std::optional<double> tau_mem_s;
    std::string decay_shape = "gaussian";
    double ramp_s = 2e-9;
};

struct ChannelConfig {
    double eta_U = 1.0;
    double eta_D = 1.0;
    double phase_jitter_rad = 0.2243994752564138; // 2 pi / 28
    std::optional<double> background_b;
    double V_src = 1.0;
    double g0 = 20.0;
    std::size_t mc_samples = 10000;
};

struct GridConfig {
    std::size_t n_freq = 512;
    double freq_span_factor = 40.0;
    std::size_t n_time = 512;
    double time_span_factor = 10.0;
};

struct FitTargets {
    double eit_window_hz = 5.5e6;
    double curve_visibility = 0.81;
    double storage_time_s = 200e-9;
    double g13_threshold = 5.0;
    double g13_time_s = 2e-6;
};

struct SweepConfig {
    std::vector<double> sigma_hz;
    std::vector<double> T_p_s;
    std::vector<double> timedist_T_p_s;
    double jitter_s = 0.0;
    std::vector<std::string> store_states;
    std::vector<double> store_times_s;
    std::vector<double> bell_times_s;
    double g13_t_max_s = 5e-6;
    std::size_t g13_points = 201;
};

struct OutputConfig {
    std::string directory = "qisim_out";
    std::vector<std::string> formats;
};

struct RunConfig {
    std::uint64_t seed = 20240611;
    SourceConfig source;
    EitConfig eit;
    ChannelConfig channel;
    GridConfig grids;
    FitTargets fit;
    SweepConfig sweep;
    OutputConfig output;

    // Canonical sorted `key = value` text of every effective setting.
    std::string echo;
};

// Every recognised key with its default value text.
const KeyValues& default_values();

// Parses `key = value` lines; '#' starts a comment. Throws ConfigError.
KeyValues parse_key_values(const std::string& text, const std::string& origin);

// `key=value` from the command line.
std::pair<std::string, std::string> parse_override(const std::string& text);

// Defaults <- file <- overrides <- QISIM_SEED, then validated.
RunConfig build_config(const KeyValues& file_values, const KeyValues& overrides);

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides);

} // namespace qisim::cli

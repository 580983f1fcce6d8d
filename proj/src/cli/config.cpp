#include "qisim/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

#include "qisim/errors.hpp"

namespace qisim::cli {

namespace {

std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s)
{
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(item);
    }
    return out;
}

class Reader {
public:
    explicit Reader(const KeyValues& values) : values_(values) {}

    const std::string& text(const std::string& key) const { return values_.at(key); }

    double number(const std::string& key) const { return parse_number(key, text(key)); }

    std::optional<double> number_or(const std::string& key, const std::string& unset_token) const
    {
        if (text(key) == unset_token)
            return std::nullopt;
        return number(key);
    }

    std::size_t count(const std::string& key) const
    {
        const double v = number(key);
        if (v < 0.0 || v != std::floor(v) || v > 1e9)
            throw ConfigError(key + ": expected a non-negative integer, got '" + text(key) + "'");
        return static_cast<std::size_t>(v);
    }

    std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : split_list(text(key)))
            out.push_back(parse_number(key, item));
        return out;
    }

    std::vector<std::string> words(const std::string& key) const { return split_list(text(key)); }

private:
    static double parse_number(const std::string& key, const std::string& s)
    {
        double v = 0.0;
        const auto* end = s.data() + s.size();
        const auto res = std::from_chars(s.data(), end, v);
        if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v))
            throw ConfigError(key + ": expected a number, got '" + s + "'");
        return v;
    }

    const KeyValues& values_;
};

void require(bool ok, const std::string& message)
{
    if (!ok)
        throw ConfigError(message);
}

} // namespace

const KeyValues& default_values()
{
    static const KeyValues values = {
        {"seed", "20240611"},
        {"source.gamma_hz", "5e6"},
        {"source.pump_kind", "gaussian"},
        {"source.T_p_s", "30e-9"},
        {"source.sigma_hz", "none"},
        {"eit.od", "55"},
        {"eit.rabi_hz", "12.6e6"},
        {"eit.gamma_ge_hz", "2.87e6"},
        {"eit.gamma_s_hz", "fit"},
        {"eit.length_m", "4e-3"},
        {"eit.eta0", "0.2"},
        {"eit.tau_mem_s", "fit"},
        {"eit.decay_shape", "gaussian"},
        {"eit.ramp_s", "2e-9"},
        {"channel.eta_U", "1"},
        {"channel.eta_D", "1"},
        {"channel.phase_jitter_rad", "0.2243994752564138"},
        {"channel.background_b", "fit"},
        {"channel.V_src", "1"},
        {"channel.g0", "20"},
        {"channel.mc_samples", "10000"},
        {"grids.n_freq", "512"},
        {"grids.freq_span_factor", "40"},
        {"grids.n_time", "512"},
        {"grids.time_span_factor", "10"},
        {"fit.eit_window_hz", "5.5e6"},
        {"fit.curve_visibility", "0.81"},
        {"fit.storage_time_s", "200e-9"},
        {"fit.g13_threshold", "5"},
        {"fit.g13_time_s", "2e-6"},
        {"sweep.sigma_hz", "12.5e6, 3.7e6, 1e9"},
        {"sweep.T_p_s", "30e-9, 100e-9"},
        {"sweep.timedist_T_p_s", "30e-9, 100e-9"},
        {"sweep.jitter_s", "0"},
        {"sweep.store_states", "H, V, +, -, R, L"},
        {"sweep.store_times_s", "200e-9"},
        {"sweep.bell_times_s", "0, 200e-9, 1e-6"},
        {"sweep.g13_t_max_s", "5e-6"},
        {"sweep.g13_points", "201"},
        {"output.directory", "qisim_out"},
        {"output.formats", "csv, json, svg"},
    };
    return values;
}

KeyValues parse_key_values(const std::string& text, const std::string& origin)
{
    KeyValues out;
    std::stringstream ss(text);
    std::string line;
    int number = 0;
    while (std::getline(ss, line)) {
        ++number;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        const std::string where = origin + ":" + std::to_string(number);
        if (eq == std::string::npos)
            throw ConfigError(where + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw ConfigError(where + ": empty key or value");
        if (!out.emplace(key, value).second)
            throw ConfigError(where + ": duplicate key '" + key + "'");
    }
    return out;
}

std::pair<std::string, std::string> parse_override(const std::string& text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos)
        throw ConfigError("override '" + text + "' is not key=value");
    auto key = trim(text.substr(0, eq));
    auto value = trim(text.substr(eq + 1));
    if (key.empty() || value.empty())
        throw ConfigError("override '" + text + "' has an empty key or value");
    return {key, value};
}

RunConfig build_config(const KeyValues& file_values, const KeyValues& overrides)
{
    KeyValues merged = default_values();
    for (const auto* layer : {&file_values, &overrides})
        for (const auto& [key, value] : *layer) {
            if (!merged.count(key))
                throw ConfigError("unknown key '" + key + "'");
            merged[key] = value;
        }
    if (const char* env = std::getenv("QISIM_SEED"); env != nullptr && *env != '\0')
        merged["seed"] = env;

    const Reader r(merged);
    RunConfig c;

    const double seed = r.number("seed");
    require(seed >= 0.0 && seed == std::floor(seed) && seed < 1.8e19, "seed must be a non-negative integer");
    c.seed = static_cast<std::uint64_t>(seed);

    c.source.gamma_hz = r.number("source.gamma_hz");
    c.source.pump_kind = r.text("source.pump_kind");
    c.source.T_p_s = r.number_or("source.T_p_s", "none");
    c.source.sigma_hz = r.number_or("source.sigma_hz", "none");
    require(c.source.gamma_hz > 0.0, "source.gamma_hz must be positive");
    require(c.source.pump_kind == "gaussian" || c.source.pump_kind == "flat_limit" ||
                c.source.pump_kind == "delta_limit",
            "source.pump_kind must be gaussian, flat_limit or delta_limit");
    if (c.source.pump_kind == "gaussian")
        require(c.source.T_p_s.has_value() != c.source.sigma_hz.has_value(),
                "set exactly one of source.T_p_s and source.sigma_hz (use 'none' to unset)");
    if (c.source.T_p_s)
        require(*c.source.T_p_s > 0.0, "source.T_p_s must be positive");
    if (c.source.sigma_hz)
        require(*c.source.sigma_hz > 0.0, "source.sigma_hz must be positive");

    c.eit.od = r.number("eit.od");
    c.eit.rabi_hz = r.number("eit.rabi_hz");
    c.eit.gamma_ge_hz = r.number("eit.gamma_ge_hz");
    c.eit.gamma_s_hz = r.number_or("eit.gamma_s_hz", "fit");
    c.eit.length_m = r.number("eit.length_m");
    c.eit.eta0 = r.number("eit.eta0");
    c.eit.tau_mem_s = r.number_or("eit.tau_mem_s", "fit");
    c.eit.decay_shape = r.text("eit.decay_shape");
    c.eit.ramp_s = r.number("eit.ramp_s");
    require(c.eit.od > 0.0, "eit.od must be positive");
    require(c.eit.rabi_hz >= 0.0, "eit.rabi_hz must be >= 0");
    require(c.eit.gamma_ge_hz > 0.0, "eit.gamma_ge_hz must be positive");
    require(!c.eit.gamma_s_hz || *c.eit.gamma_s_hz >= 0.0, "eit.gamma_s_hz must be >= 0 or 'fit'");
    require(c.eit.length_m > 0.0, "eit.length_m must be positive");
    require(c.eit.eta0 > 0.0 && c.eit.eta0 <= 1.0, "eit.eta0 must lie in (0, 1]");
    require(!c.eit.tau_mem_s || *c.eit.tau_mem_s > 0.0, "eit.tau_mem_s must be positive or 'fit'");
    require(c.eit.decay_shape == "gaussian" || c.eit.decay_shape == "exponential",
            "eit.decay_shape must be gaussian or exponential");
    require(c.eit.ramp_s > 0.0, "eit.ramp_s must be positive");

    c.channel.eta_U = r.number("channel.eta_U");
    c.channel.eta_D = r.number("channel.eta_D");
    c.channel.phase_jitter_rad = r.number("channel.phase_jitter_rad");
    c.channel.background_b = r.number_or("channel.background_b", "fit");
    c.channel.V_src = r.number("channel.V_src");
    c.channel.g0 = r.number("channel.g0");
    c.channel.mc_samples = r.count("channel.mc_samples");
    require(c.channel.eta_U >= 0.0 && c.channel.eta_U <= 1.0, "channel.eta_U must lie in [0, 1]");
    require(c.channel.eta_D >= 0.0 && c.channel.eta_D <= 1.0, "channel.eta_D must lie in [0, 1]");
    require(c.channel.eta_U + c.channel.eta_D > 0.0, "at least one rail must transmit");
    require(c.channel.phase_jitter_rad >= 0.0, "channel.phase_jitter_rad must be >= 0");
    require(!c.channel.background_b || *c.channel.background_b >= 0.0,
            "channel.background_b must be >= 0 or 'fit'");
    require(c.channel.V_src >= 0.0 && c.channel.V_src <= 1.0, "channel.V_src must lie in [0, 1]");
    require(c.channel.g0 > 1.0, "channel.g0 must exceed 1");

    c.grids.n_freq = r.count("grids.n_freq");
    c.grids.freq_span_factor = r.number("grids.freq_span_factor");
    c.grids.n_time = r.count("grids.n_time");
    c.grids.time_span_factor = r.number("grids.time_span_factor");
    require(c.grids.n_freq >= 8 && c.grids.n_freq % 2 == 0, "grids.n_freq must be even and >= 8");
    require(c.grids.n_time >= 8, "grids.n_time must be >= 8");
    require(c.grids.freq_span_factor > 0.0, "grids.freq_span_factor must be positive");
    require(c.grids.time_span_factor > 0.0, "grids.time_span_factor must be positive");

    c.fit.eit_window_hz = r.number("fit.eit_window_hz");
    c.fit.curve_visibility = r.number("fit.curve_visibility");
    c.fit.storage_time_s = r.number("fit.storage_time_s");
    c.fit.g13_threshold = r.number("fit.g13_threshold");
    c.fit.g13_time_s = r.number("fit.g13_time_s");
    require(c.fit.eit_window_hz > 0.0, "fit.eit_window_hz must be positive");
    require(c.fit.curve_visibility > 0.0 && c.fit.curve_visibility < 1.0, "fit.curve_visibility must lie in (0, 1)");
    require(c.fit.storage_time_s >= 0.0, "fit.storage_time_s must be >= 0");
    require(c.fit.g13_threshold > 1.0 && c.fit.g13_threshold < c.channel.g0,
            "fit.g13_threshold must lie in (1, channel.g0)");
    require(c.fit.g13_time_s > 0.0, "fit.g13_time_s must be positive");

    c.sweep.sigma_hz = r.numbers("sweep.sigma_hz");
    c.sweep.T_p_s = r.numbers("sweep.T_p_s");
    c.sweep.timedist_T_p_s = r.numbers("sweep.timedist_T_p_s");
    c.sweep.jitter_s = r.number("sweep.jitter_s");
    c.sweep.store_states = r.words("sweep.store_states");
    c.sweep.store_times_s = r.numbers("sweep.store_times_s");
    c.sweep.bell_times_s = r.numbers("sweep.bell_times_s");
    c.sweep.g13_t_max_s = r.number("sweep.g13_t_max_s");
    c.sweep.g13_points = r.count("sweep.g13_points");
    for (double t : c.sweep.timedist_T_p_s)
        require(t > 0.0, "sweep.timedist_T_p_s entries must be positive");
    require(c.sweep.jitter_s >= 0.0, "sweep.jitter_s must be >= 0");
    static const std::set<std::string> labels = {"H", "V", "+", "-", "R", "L"};
    for (const auto& s : c.sweep.store_states)
        require(labels.count(s) == 1, "sweep.store_states: unknown state '" + s + "'");
    for (const auto* list : {&c.sweep.store_times_s, &c.sweep.bell_times_s})
        for (double t : *list)
            require(t >= 0.0, "storage times must be >= 0");
    require(c.sweep.g13_t_max_s > 0.0, "sweep.g13_t_max_s must be positive");
    require(c.sweep.g13_points >= 2, "sweep.g13_points must be >= 2");

    c.output.directory = r.text("output.directory");
    c.output.formats = r.words("output.formats");
    for (const auto& f : c.output.formats)
        require(f == "csv" || f == "json" || f == "svg", "output.formats: unknown format '" + f + "'");

    merged["seed"] = std::to_string(c.seed);
    for (const auto& [key, value] : merged)
        c.echo += key + " = " + value + "\n";
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides)
{
    KeyValues file_values;
    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in)
            throw ConfigError("cannot read config file '" + path + "'");
        std::stringstream buffer;
        buffer << in.rdbuf();
        file_values = parse_key_values(buffer.str(), path);
    }
    KeyValues over;
    for (const auto& item : overrides) {
        auto [key, value] = parse_override(item);
        over[key] = value;
    }
    return build_config(file_values, over);
}

} // namespace qisim::cli

#include "qisim/cli/commands.hpp"

#include <cmath>
#include <cstdio>
#include <future>
#include <map>
#include <type_traits>

#include "qisim/biphoton.hpp"
#include "qisim/cli/plot.hpp"
#include "qisim/errors.hpp"
#include "qisim/spectral.hpp"
#include "qisim/units.hpp"

namespace qisim::cli {

namespace {

using cplx = std::complex<double>;

// Sweep points run as independent tasks; results come back in order.
template <typename F>
auto parallel_map(std::size_t n, F&& f)
{
    using R = std::invoke_result_t<F&, std::size_t>;
    std::vector<std::future<R>> futures;
    futures.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        futures.push_back(std::async(std::launch::async, f, i));
    std::vector<R> out;
    out.reserve(n);
    for (auto& fu : futures)
        out.push_back(fu.get());
    return out;
}

std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

double pulse_duration_from_sigma_hz(double sigma_hz)
{
    return std::sqrt(2.0 * std::log(2.0)) / (kPi * sigma_hz);
}

Json number_or_null(double v)
{
    return std::isfinite(v) ? Json(v) : Json(nullptr);
}

spectral::CavityLine source_line(const RunConfig& c)
{
    return spectral::CavityLine(hz_to_rad(c.source.gamma_hz));
}

spectral::JointSpectralAmplitude make_jsa(const RunConfig& c, const spectral::PumpSpectrum& pump,
                                          std::size_t n_freq)
{
    const auto line = source_line(c);
    const auto grid = spectral::default_grid(line, pump, n_freq, c.grids.freq_span_factor);
    return spectral::build_jsa(grid, line, pump);
}

biphoton::SignalFilter storage_filter(const eit::EitMedium& medium)
{
    const double delay = eit::group_delay(medium).seconds;
    return [medium, delay](double d) { return eit::transmission(d, medium) * std::exp(cplx(0.0, -d * delay)); };
}

const std::map<std::string, std::string>& state_names()
{
    static const std::map<std::string, std::string> names = {
        {"H", "H"}, {"V", "V"}, {"+", "plus"}, {"-", "minus"}, {"R", "R"}, {"L", "L"}};
    return names;
}

} // namespace

qubit::EtaOfT Model::eta() const
{
    return [d = decay](double t) { return d(t); };
}

Model resolve_model(const RunConfig& c)
{
    Model m;
    m.medium.optical_depth = c.eit.od;
    m.medium.rabi_control = hz_to_rad(c.eit.rabi_hz);
    m.medium.gamma_ge = hz_to_rad(c.eit.gamma_ge_hz);
    m.medium.gamma_s = c.eit.gamma_s_hz ? hz_to_rad(*c.eit.gamma_s_hz) : 0.0;
    m.medium.length = c.eit.length_m;
    eit::validate(m.medium);
    m.window_target = hz_to_rad(c.fit.eit_window_hz);
    if (!c.eit.gamma_s_hz) {
        const auto fit = eit::fit_gamma_s(m.medium, m.window_target);
        m.medium = fit.medium;
        m.gamma_s_fitted = true;
        m.gamma_s_converged = fit.converged;
    }

    m.decay.eta0 = c.eit.eta0;
    m.decay.shape = eit::parse_decay_shape(c.eit.decay_shape);
    if (c.eit.tau_mem_s) {
        m.decay.tau = *c.eit.tau_mem_s;
    } else {
        m.decay.tau = qubit::decay_tau_for_crossing(c.channel.g0, c.fit.g13_threshold, c.fit.g13_time_s,
                                                    m.decay.shape);
        m.tau_fitted = true;
    }

    m.channel.eta_U = c.channel.eta_U;
    m.channel.eta_D = c.channel.eta_D;
    m.channel.phase_jitter_sigma = c.channel.phase_jitter_rad;
    m.source_visibility = c.channel.V_src;
    if (c.channel.background_b) {
        m.channel.background = *c.channel.background_b;
    } else {
        auto params = m.channel;
        params.storage_time = c.fit.storage_time_s;
        m.channel.background =
            qubit::fit_background(c.fit.curve_visibility, params, m.eta(), c.channel.V_src);
        m.background_fitted = true;
    }
    qubit::validate(m.channel);
    return m;
}

Json cmd_visibility(const RunConfig& c, const CommandOptions& options, OutputWriter& writer)
{
    struct Point {
        double sigma_hz = NAN;
        double T_p_s = NAN;
    };
    std::vector<Point> points;
    const bool explicit_sweep = !options.sigma_hz.empty() || !options.T_p_s.empty();
    for (double s : explicit_sweep ? options.sigma_hz : c.sweep.sigma_hz)
        points.push_back({s, s > 0.0 ? pulse_duration_from_sigma_hz(s) : NAN});
    for (double t : explicit_sweep ? options.T_p_s : c.sweep.T_p_s)
        points.push_back({t > 0.0 ? pulse_duration_from_sigma_hz(t) : NAN, t});
    if (points.empty())
        throw ConfigError("empty visibility sweep");

    struct Row {
        double visibility = NAN;
        std::string error;
    };
    const auto rows = parallel_map(points.size(), [&](std::size_t i) {
        Row row;
        try {
            if (!(points[i].sigma_hz > 0.0) || !(points[i].T_p_s > 0.0))
                throw InputError("sweep values must be positive");
            const auto pump = spectral::PumpSpectrum::gaussian(hz_to_rad(points[i].sigma_hz));
            row.visibility = biphoton::visibility(make_jsa(c, pump, c.grids.n_freq));
        } catch (const Error& e) {
            row.error = e.what();
        }
        return row;
    });

    Json summary;
    summary["command"] = "visibility";
    summary["gamma_hz"] = c.source.gamma_hz;
    summary["n_freq"] = c.grids.n_freq;
    summary["rows"] = Json::array();
    std::vector<std::vector<double>> table;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < points.size(); ++i) {
        Json r;
        r["sigma_hz"] = number_or_null(points[i].sigma_hz);
        r["T_p_s"] = number_or_null(points[i].T_p_s);
        r["visibility"] = number_or_null(rows[i].visibility);
        if (!rows[i].error.empty()) {
            r["error"] = rows[i].error;
            ++failures;
        }
        summary["rows"].push_back(r);
        table.push_back({points[i].sigma_hz, points[i].T_p_s, rows[i].visibility});
    }
    if (failures == points.size())
        throw ModelError("every visibility sweep point failed: " + rows.front().error);

    writer.write("visibility.csv", csv_table({"sigma_hz", "T_p_s", "visibility"}, table));
    writer.write("visibility.json", summary.dump(2) + "\n");

    if (writer.enabled("svg")) {
        constexpr int kCurvePoints = 20;
        const std::size_t n = std::min<std::size_t>(c.grids.n_freq, 256);
        const auto curve = parallel_map(kCurvePoints, [&](std::size_t k) {
            const double ratio = 0.1 * std::pow(100.0, static_cast<double>(k) / (kCurvePoints - 1));
            const auto pump = spectral::PumpSpectrum::gaussian(ratio * hz_to_rad(c.source.gamma_hz));
            return std::pair{ratio, biphoton::visibility(make_jsa(c, pump, n))};
        });
        plot::Series line{"V (" + std::to_string(n) + " grid)", {}, {}, "#51127c", false};
        for (const auto& [x, y] : curve) {
            line.x.push_back(x);
            line.y.push_back(y);
        }
        plot::Series marks{"sweep", {}, {}, "#fc8961", true, false};
        for (std::size_t i = 0; i < points.size(); ++i)
            if (std::isfinite(rows[i].visibility)) {
                const double ratio = points[i].sigma_hz / c.source.gamma_hz;
                if (ratio >= 0.1 && ratio <= 10.0) {
                    marks.x.push_back(ratio);
                    marks.y.push_back(rows[i].visibility);
                }
            }
        std::vector<plot::Series> series{line};
        if (!marks.x.empty())
            series.push_back(marks);
        writer.write("visibility.svg",
                     plot::line_chart(series, {"Interference visibility vs pump bandwidth", "sigma / gamma",
                                               "V", true}));
    }
    return summary;
}

Json cmd_timedist(const RunConfig& c, const Model& model, const CommandOptions& options, OutputWriter& writer)
{
    const double gamma = hz_to_rad(c.source.gamma_hz);
    const auto t_grid = biphoton::default_time_grid(gamma, c.grids.n_time, c.grids.time_span_factor);
    const double jitter = options.jitter_s.value_or(c.sweep.jitter_s);

    Json summary;
    summary["command"] = "timedist";
    std::string tag;
    std::optional<spectral::PumpSpectrum> pump;
    if (options.timedist_T_p_s || c.source.pump_kind == "gaussian") {
        double sigma = 0.0;
        if (options.timedist_T_p_s) {
            sigma = spectral::sigma_from_pulse_duration(*options.timedist_T_p_s);
            summary["T_p_s"] = *options.timedist_T_p_s;
            tag = "tp" + short_number(*options.timedist_T_p_s * 1e9) + "ns";
        } else if (c.source.T_p_s) {
            sigma = spectral::sigma_from_pulse_duration(*c.source.T_p_s);
            summary["T_p_s"] = *c.source.T_p_s;
            tag = "tp" + short_number(*c.source.T_p_s * 1e9) + "ns";
        } else {
            sigma = hz_to_rad(*c.source.sigma_hz);
            summary["T_p_s"] = pulse_duration_from_sigma_hz(*c.source.sigma_hz);
            tag = "sigma" + short_number(*c.source.sigma_hz * 1e-6) + "MHz";
        }
        summary["pump_kind"] = "gaussian";
        summary["sigma_hz"] = rad_to_hz(sigma);
        pump = spectral::PumpSpectrum::gaussian(sigma);
    } else if (c.source.pump_kind == "flat_limit") {
        summary["pump_kind"] = "flat_limit";
        tag = "flat";
        pump = spectral::PumpSpectrum::flat_limit();
    } else {
        summary["pump_kind"] = "delta_limit";
        tag = "continuous";
    }
    summary["with_storage"] = options.with_storage;
    summary["identity_filter"] = options.identity_filter;
    summary["jitter_s"] = jitter;
    summary["t_min_ns"] = t_grid.t_min() * 1e9;
    summary["t_max_ns"] = t_grid.t_max() * 1e9;
    summary["n_time"] = t_grid.size();

    std::optional<biphoton::JointTimeDistribution> dist;
    if (!pump) {
        if (options.with_storage && !options.identity_filter)
            throw UnsupportedKindError("storage filtering needs a sampled JSA; the continuous pump is analytic only");
        dist = biphoton::continuous_pump_distribution(gamma, t_grid);
        summary["pearson"] = biphoton::time_correlation(*dist);
    } else {
        const auto jsa = make_jsa(c, *pump, c.grids.n_freq);
        auto plain = biphoton::joint_time_distribution(jsa, t_grid, jitter);
        const double before = biphoton::time_correlation(plain);
        if (options.with_storage) {
            const auto filter = options.identity_filter ? biphoton::SignalFilter{} : storage_filter(model.medium);
            dist = biphoton::post_storage_distribution(jsa, filter, t_grid, jitter);
            const double after = biphoton::time_correlation(*dist);
            summary["pearson"] = after;
            summary["pearson_unfiltered"] = before;
            summary["pearson_change"] = after - before;
            if (!options.identity_filter) {
                summary["filter"] = "EIT transmission with the group delay removed";
                summary["filter_gamma_s_hz"] = rad_to_hz(model.medium.gamma_s);
                summary["filter_window_fwhm_hz"] = rad_to_hz(eit::window_fwhm(model.medium));
            }
        } else {
            dist = std::move(plain);
            summary["pearson"] = before;
        }
    }

    const std::string stem = "timedist_" + tag + (options.with_storage ? "_stored" : "");
    summary["grid_file"] = stem + ".csv";
    writer.write(stem + ".csv", grid_csv(*dist));
    writer.write(stem + ".json", summary.dump(2) + "\n");
    if (writer.enabled("svg")) {
        const std::string title = "Two-photon detection density, " + tag + (options.with_storage ? ", stored" : "");
        writer.write(stem + ".svg", plot::heatmap(dist->density(), t_grid.t_min() * 1e9, t_grid.t_max() * 1e9,
                                                  t_grid.t_min() * 1e9, t_grid.t_max() * 1e9,
                                                  {title, "t1 (ns)", "t2 (ns)", false}));
    }
    return summary;
}

Json cmd_eit(const RunConfig& c, const Model& model, OutputWriter& writer)
{
    const auto& m = model.medium;
    auto off = m;
    off.rabi_control = 0.0;

    constexpr int kSpectrumPoints = 4001;
    const double limit = hz_to_rad(40e6);
    std::vector<std::vector<double>> table;
    std::vector<double> x, on_t, off_t;
    double off_min = INFINITY;
    double off_min_at = 0.0;
    for (int k = 0; k < kSpectrumPoints; ++k) {
        const double d = -limit + 2.0 * limit * k / (kSpectrumPoints - 1);
        const double on_value = eit::intensity_transmission(d, m);
        const double off_value = eit::intensity_transmission(d, off);
        if (off_value < off_min) {
            off_min = off_value;
            off_min_at = d;
        }
        table.push_back({rad_to_hz(d), on_value, off_value});
        x.push_back(rad_to_hz(d) * 1e-6);
        on_t.push_back(on_value);
        off_t.push_back(off_value);
    }

    const double window = eit::window_fwhm(m);
    const auto delay = eit::group_delay(m);
    const double window_hz = rad_to_hz(window);

    Json summary;
    summary["command"] = "eit";
    summary["optical_depth"] = m.optical_depth;
    summary["rabi_hz"] = rad_to_hz(m.rabi_control);
    summary["gamma_ge_hz"] = rad_to_hz(m.gamma_ge);
    summary["gamma_s_hz"] = rad_to_hz(m.gamma_s);
    summary["gamma_s_fitted"] = model.gamma_s_fitted;
    summary["fit_converged"] = model.gamma_s_converged;
    summary["target_window_hz"] = rad_to_hz(model.window_target);
    summary["window_fwhm_hz"] = window_hz;
    summary["group_delay_s"] = delay.seconds;
    summary["regime_warning"] = delay.regime_warning;
    summary["delay_bandwidth_product"] = kTwoPi * window_hz * delay.seconds;
    summary["delay_bandwidth_convention"] = "2*pi*window_fwhm_hz*group_delay_s (angular)";
    summary["length_m"] = m.length;
    summary["v_g"] = delay.regime_warning ? Json(nullptr) : Json(eit::group_velocity(m));
    summary["control_off_min_transmission"] = off_min;
    summary["control_off_min_detuning_hz"] = rad_to_hz(off_min_at);

    if (!delay.regime_warning) {
        // Heralded signal photon entering 100 ns into the window. The
        // switch-off time is scanned for the largest stored fraction.
        const double dt = 0.5e-9;
        const double start = 100e-9;
        const double gamma = hz_to_rad(c.source.gamma_hz);
        eit::Pulse photon{.t0 = 0.0, .dt = dt, .samples = std::vector<cplx>(2048, cplx{0.0, 0.0})};
        for (std::size_t i = 0; i < photon.samples.size(); ++i) {
            const double t = photon.time(i) - start;
            if (t >= 0.0)
                photon.samples[i] = std::exp(-0.5 * gamma * t);
        }
        constexpr int kSwitchSteps = 41;
        eit::ControlTimeline timeline{start, c.fit.storage_time_s, c.eit.ramp_s};
        double best = -1.0;
        for (int k = 0; k < kSwitchSteps; ++k) {
            const eit::ControlTimeline trial{start + 2.0 * delay.seconds * k / (kSwitchSteps - 1),
                                             c.fit.storage_time_s, c.eit.ramp_s};
            const double stored = eit::store_and_retrieve(photon, m, trial, model.decay).stored_fraction;
            if (stored > best) {
                best = stored;
                timeline = trial;
            }
        }
        const auto report = eit::store_and_retrieve(photon, m, timeline, model.decay);
        Json storage;
        storage["pulse"] = "one-sided exponential, source linewidth";
        storage["storage_time_s"] = report.storage_time;
        storage["switch_off_s"] = timeline.on_until;
        storage["leakage_efficiency"] = report.leakage_efficiency;
        storage["retrieval_efficiency"] = report.retrieval_efficiency;
        storage["stored_fraction"] = report.stored_fraction;
        storage["absorbed_fraction"] = report.absorbed_fraction;
        storage["capacity_warning"] = report.capacity_warning;
        storage["eta0"] = model.decay.eta0;
        storage["tau_mem_s"] = model.decay.tau;
        storage["decay_shape"] = eit::to_string(model.decay.shape);
        summary["storage"] = storage;
    }

    writer.write("eit_spectrum.csv", csv_table({"detuning_hz", "transmission_control_on", "transmission_control_off"}, table));
    writer.write("eit.json", summary.dump(2) + "\n");
    if (writer.enabled("svg"))
        writer.write("eit_spectrum.svg",
                     plot::line_chart({{"control on", x, on_t, "#51127c", false},
                                       {"control off", x, off_t, "#fc8961", false}},
                                      {"Probe transmission", "detuning (MHz)", "|t|^2", false}));
    return summary;
}

Json cmd_store(const RunConfig& c, const Model& model, const CommandOptions& options, OutputWriter& writer)
{
    const auto labels = options.states.empty() ? c.sweep.store_states : options.states;
    const auto times = options.times_s.empty() ? c.sweep.store_times_s : options.times_s;
    for (const auto& l : labels)
        if (!state_names().count(l))
            throw ConfigError("unknown state '" + l + "'");
    if (times.empty() || labels.empty())
        throw ConfigError("store needs at least one state and one storage time");

    const auto& all = qubit::six_states();
    auto state_of = [&](const std::string& label) {
        for (const auto& [name, state] : all)
            if (label == name)
                return state;
        throw InputError("unknown state '" + label + "'");
    };

    Json summary;
    summary["command"] = "store";
    summary["background_b"] = model.channel.background;
    summary["background_fitted"] = model.background_fitted;
    summary["phase_jitter_rad"] = model.channel.phase_jitter_sigma;
    summary["mc_samples"] = c.channel.mc_samples;
    summary["seed"] = c.seed;
    summary["rows"] = Json::array();

    std::vector<double> first_values;
    for (std::size_t ti = 0; ti < times.size(); ++ti) {
        auto params = model.channel;
        params.storage_time = times[ti];
        const auto battery = qubit::six_state_battery(params, model.eta());

        Json row;
        row["t_s"] = times[ti];
        row["effective_background"] = qubit::effective_background(params, model.eta());
        Json fid;
        double sum = 0.0;
        for (const auto& l : labels)
            for (const auto& s : battery.states)
                if (s.label == l) {
                    fid[state_names().at(l)] = s.fidelity;
                    sum += s.fidelity;
                    if (ti == 0)
                        first_values.push_back(s.fidelity);
                }
        row["fidelity"] = fid;
        row["average"] = sum / static_cast<double>(labels.size());

        if (c.channel.mc_samples > 0) {
            const auto sampled = parallel_map(labels.size(), [&](std::size_t k) {
                std::mt19937_64 rng(c.seed + 1000003ULL * ti + k);
                const auto in = state_of(labels[k]);
                const auto out = qubit::memory_channel_sampled(qubit::QubitDensity::pure(in), params, model.eta(),
                                                               rng, c.channel.mc_samples);
                return qubit::fidelity(in, out);
            });
            Json mc;
            double mc_sum = 0.0;
            for (std::size_t k = 0; k < labels.size(); ++k) {
                mc[state_names().at(labels[k])] = sampled[k];
                mc_sum += sampled[k];
            }
            row["sampled_fidelity"] = mc;
            row["sampled_average"] = mc_sum / static_cast<double>(labels.size());
        }
        summary["rows"].push_back(row);
    }

    writer.write("store.json", summary.dump(2) + "\n");
    if (writer.enabled("svg"))
        writer.write("store.svg", plot::bar_chart(labels, first_values,
                                                  {"State fidelity after " + short_number(times[0] * 1e9) +
                                                       " ns storage",
                                                   "input state", "fidelity", false},
                                                  0.5, 1.0));
    return summary;
}

Json cmd_bell(const RunConfig& c, const Model& model, const CommandOptions& options, OutputWriter& writer)
{
    const auto times = options.times_s.empty() ? c.sweep.bell_times_s : options.times_s;
    const auto source = qubit::werner_state(model.source_visibility);
    const auto angles = qubit::standard_chsh_angles();
    const auto convention = qubit::AnalyzerConvention::minus;

    Json summary;
    summary["command"] = "bell";
    summary["convention"] = "minus (flying analyser angle mirrored)";
    summary["angles_deg"] = {0.0, 45.0, 22.5, 67.5};
    summary["V_src"] = model.source_visibility;
    summary["background_b"] = model.channel.background;
    summary["rows"] = Json::array();
    for (double t : times) {
        Json row;
        row["t_s"] = t;
        double S = 0.0;
        if (t == 0.0) {
            row["local"] = true;
            S = qubit::chsh_S(source, angles, convention);
        } else {
            auto params = model.channel;
            params.storage_time = t;
            row["local"] = false;
            S = qubit::chsh_S(qubit::memory_channel_on_signal(source, params, model.eta()), angles, convention);
        }
        row["S"] = S;
        row["violated"] = S > 2.0;
        summary["rows"].push_back(row);
    }

    auto params = model.channel;
    params.storage_time = c.fit.storage_time_s;
    const auto stored = qubit::memory_channel_on_signal(source, params, model.eta());
    const auto thetas = qubit::half_turn_sweep();
    const auto curve_h = qubit::correlation_curve(stored, qubit::FlyingBasis::H, thetas);
    const auto curve_p = qubit::correlation_curve(stored, qubit::FlyingBasis::plus, thetas);
    summary["curve_storage_time_s"] = c.fit.storage_time_s;
    summary["curve_visibility_H"] = qubit::curve_visibility(curve_h);
    summary["curve_visibility_plus"] = qubit::curve_visibility(curve_p);

    std::vector<std::vector<double>> table;
    std::vector<double> deg;
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        deg.push_back(thetas[i] * 180.0 / kPi);
        table.push_back({deg.back(), curve_h[i], curve_p[i]});
    }
    writer.write("bell.json", summary.dump(2) + "\n");
    writer.write("bell_curve.csv", csv_table({"theta_deg", "coincidence_H", "coincidence_plus"}, table));
    if (writer.enabled("svg"))
        writer.write("bell_curve.svg",
                     plot::line_chart({{"flying H", deg, curve_h, "#51127c", false},
                                       {"flying +", deg, curve_p, "#fc8961", false}},
                                      {"Polarisation correlation after " + short_number(c.fit.storage_time_s * 1e9) +
                                           " ns",
                                       "signal analyser angle (deg)", "normalised coincidence", false}));
    return summary;
}

Json cmd_g13(const RunConfig& c, const Model& model, const CommandOptions& options, OutputWriter& writer)
{
    std::vector<double> times = options.times_s;
    if (times.empty())
        for (std::size_t i = 0; i < c.sweep.g13_points; ++i)
            times.push_back(c.sweep.g13_t_max_s * static_cast<double>(i) / static_cast<double>(c.sweep.g13_points - 1));

    const double g0 = c.channel.g0;
    const auto eta = model.eta();
    std::vector<std::vector<double>> table;
    std::vector<double> t_us, g_values;
    for (double t : times) {
        const double g = qubit::g13_decay_model(t, g0, eta);
        table.push_back({t, g, qubit::alpha_quality(g)});
        t_us.push_back(t * 1e6);
        g_values.push_back(g);
    }
    const double t_max = std::max(c.sweep.g13_t_max_s, *std::max_element(times.begin(), times.end()));
    const auto crossing = qubit::crossing_time(g0, c.fit.g13_threshold, eta, t_max);

    Json summary;
    summary["command"] = "g13";
    summary["g0"] = g0;
    summary["alpha_at_zero"] = qubit::alpha_quality(g0);
    summary["threshold"] = c.fit.g13_threshold;
    summary["tau_mem_s"] = model.decay.tau;
    summary["tau_fitted"] = model.tau_fitted;
    summary["decay_shape"] = eit::to_string(model.decay.shape);
    summary["crossing_time_s"] = crossing ? Json(*crossing) : Json(nullptr);
    summary["alpha_at_crossing"] =
        crossing ? Json(qubit::alpha_quality(qubit::g13_decay_model(*crossing, g0, eta))) : Json(nullptr);

    writer.write("g13.csv", csv_table({"t_s", "g13", "alpha"}, table));
    writer.write("g13.json", summary.dump(2) + "\n");
    if (writer.enabled("svg")) {
        const std::vector<double> thr(t_us.size(), c.fit.g13_threshold);
        writer.write("g13.svg", plot::line_chart({{"g13", t_us, g_values, "#51127c", false},
                                                  {"threshold", t_us, thr, "#fc8961", false}},
                                                 {"Cross correlation vs storage time", "storage time (us)", "g13",
                                                  false}));
    }
    return summary;
}

namespace {

class Grader {
public:
    explicit Grader(std::vector<CheckResult>& out) : out_(out) {}

    void abs(const std::string& name, double value, double target, double tol)
    {
        out_.push_back({name, value, target, tol, "abs", std::isfinite(value) && std::abs(value - target) <= tol});
    }
    void rel(const std::string& name, double value, double target, double tol)
    {
        out_.push_back({name, value, target, tol, "rel",
                        std::isfinite(value) && std::abs(value - target) <= tol * std::abs(target)});
    }
    void below(const std::string& name, double value, double limit)
    {
        out_.push_back({name, value, limit, 0.0, "below", std::isfinite(value) && value < limit});
    }
    void above(const std::string& name, double value, double limit)
    {
        out_.push_back({name, value, limit, 0.0, "above", std::isfinite(value) && value > limit});
    }
    void truth(const std::string& name, bool value)
    {
        out_.push_back({name, value ? 1.0 : 0.0, 1.0, 0.0, "true", value});
    }

private:
    std::vector<CheckResult>& out_;
};

double get(const Json& j, const char* key)
{
    return j.contains(key) && j[key].is_number() ? j[key].get<double>() : NAN;
}

bool near(double a, double b) { return std::abs(a - b) <= 1e-9 * std::abs(b); }

} // namespace

Json cmd_reproduce_all(const RunConfig& c, OutputWriter& writer, std::vector<CheckResult>& checks)
{
    Grader grade(checks);
    const Model model = resolve_model(c);
    const CommandOptions none;
    Json summary;
    summary["command"] = "reproduce-all";

    const Json vis = cmd_visibility(c, none, writer);
    for (const auto& row : vis["rows"]) {
        const double s = get(row, "sigma_hz");
        const double v = get(row, "visibility");
        if (near(s, 12.5e6))
            grade.abs("visibility.sigma_12.5MHz", v, 0.97, 0.01);
        else if (near(s, 3.7e6))
            grade.abs("visibility.sigma_3.7MHz", v, 0.80, 0.02);
        else if (near(s, 1e9))
            grade.above("visibility.sigma_1GHz", v, 0.999);
    }
    summary["visibility"] = vis;

    summary["timedist"] = Json::array();
    for (double tp : c.sweep.timedist_T_p_s) {
        CommandOptions o;
        o.timedist_T_p_s = tp;
        const Json plain = cmd_timedist(c, model, o, writer);
        o.with_storage = true;
        const Json stored = cmd_timedist(c, model, o, writer);
        const double r0 = get(plain, "pearson");
        const double r1 = get(stored, "pearson");
        if (near(tp, 100e-9)) {
            grade.above("timedist.tp100ns.pearson", r0, 0.3);
            grade.truth("timedist.tp100ns.storage_lowers_pearson", r1 < r0);
        } else if (near(tp, 30e-9)) {
            grade.below("timedist.tp30ns.pearson", r0, 0.15);
            grade.below("timedist.tp30ns.storage_pearson_change", std::abs(r1 - r0), 0.05);
        }
        summary["timedist"].push_back(plain);
        summary["timedist"].push_back(stored);
    }

    const Json e = cmd_eit(c, model, writer);
    grade.truth("eit.gamma_s_fit_converged", model.gamma_s_converged);
    grade.rel("eit.window_fwhm_hz", get(e, "window_fwhm_hz"), 5.5e6, 0.10);
    grade.rel("eit.group_delay_s", get(e, "group_delay_s"), 200e-9, 0.10);
    grade.rel("eit.delay_bandwidth_product", get(e, "delay_bandwidth_product"), 7.0, 0.15);
    grade.rel("eit.control_off_min_transmission", get(e, "control_off_min_transmission"),
              std::exp(-c.eit.od), 1e-6);
    grade.rel("eit.v_g", get(e, "v_g"), 2e4, 0.10);
    summary["eit"] = e;

    const Json st = cmd_store(c, model, none, writer);
    static const std::map<std::string, double> reference = {
        {"H", 0.954}, {"V", 0.989}, {"plus", 0.909}, {"minus", 0.889}, {"R", 0.920}, {"L", 0.881}};
    for (const auto& row : st["rows"]) {
        if (!near(get(row, "t_s"), 200e-9))
            continue;
        for (const auto& [name, target] : reference)
            if (row["fidelity"].contains(name))
                grade.abs("store.fidelity_" + name, row["fidelity"][name].get<double>(), target, 0.04);
        grade.abs("store.average", get(row, "average"), 0.924, 0.03);
    }
    summary["store"] = st;

    const Json b = cmd_bell(c, model, none, writer);
    for (const auto& row : b["rows"]) {
        const double t = get(row, "t_s");
        grade.truth("bell.violated_t" + short_number(t * 1e9) + "ns", row["violated"].get<bool>());
        if (near(t, 1e-6))
            grade.abs("bell.S_1us", get(row, "S"), 2.28, 0.17);
    }
    {
        auto params = model.channel;
        params.storage_time = 1e-6;
        const double s_low = qubit::chsh_S(
            qubit::memory_channel_on_signal(qubit::werner_state(0.70), params, model.eta()),
            qubit::standard_chsh_angles(), qubit::AnalyzerConvention::minus);
        grade.truth("bell.source_visibility_0.70_not_violated", s_low <= 2.0);
    }
    summary["bell"] = b;

    const Json g = cmd_g13(c, model, none, writer);
    grade.rel("g13.crossing_time_s", get(g, "crossing_time_s"), 2e-6, 0.10);
    grade.abs("g13.alpha_at_crossing", get(g, "alpha_at_crossing"), 1.0, 1e-9);
    summary["g13"] = g;

    Json report = Json::array();
    bool all = true;
    for (const auto& ch : checks) {
        report.push_back({{"name", ch.name}, {"value", number_or_null(ch.value)}, {"target", ch.target},
                          {"tolerance", ch.tolerance}, {"rule", ch.rule}, {"passed", ch.passed}});
        all = all && ch.passed;
    }
    Json out;
    out["all_passed"] = all;
    out["checks"] = report;
    writer.write("checks.json", out.dump(2) + "\n");
    summary["all_passed"] = all;
    return summary;
}

int run_command(const std::string& command, const RunConfig& config, const CommandOptions& options,
                std::ostream& log)
{
    OutputWriter writer(config.output.directory, config.output.formats);
    int code = kExitOk;
    try {
        if (command == "visibility") {
            cmd_visibility(config, options, writer);
        } else if (command == "reproduce-all") {
            std::vector<CheckResult> checks;
            cmd_reproduce_all(config, writer, checks);
            for (const auto& ch : checks)
                if (!ch.passed) {
                    log << "check failed: " << ch.name << " value=" << format_double(ch.value)
                        << " target=" << format_double(ch.target) << " rule=" << ch.rule
                        << " tolerance=" << format_double(ch.tolerance) << "\n";
                    code = kExitCheck;
                }
        } else {
            const Model model = resolve_model(config);
            if (command == "timedist") {
                if (options.with_storage && !options.identity_filter && !model.gamma_s_converged)
                    log << "warning: EIT window fit did not converge; filtering with gamma_s = "
                        << format_double(rad_to_hz(model.medium.gamma_s)) << " Hz\n";
                cmd_timedist(config, model, options, writer);
            } else if (command == "eit") {
                cmd_eit(config, model, writer);
                if (!model.gamma_s_converged) {
                    log << "fit failure: no gamma_s >= 0 gives a " << format_double(config.fit.eit_window_hz)
                        << " Hz window; outputs use the closest medium (gamma_s = "
                        << format_double(rad_to_hz(model.medium.gamma_s)) << " Hz)\n";
                    code = kExitModel;
                }
            } else if (command == "store") {
                cmd_store(config, model, options, writer);
            } else if (command == "bell") {
                cmd_bell(config, model, options, writer);
            } else if (command == "g13") {
                cmd_g13(config, model, options, writer);
            } else {
                throw ConfigError("unknown command '" + command + "'");
            }
        }
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const Error& e) {
        log << "error: " << e.what() << "\n";
        writer.write_manifest(command, config.echo);
        return kExitModel;
    }
    writer.write_manifest(command, config.echo);
    return code;
}

} // namespace qisim::cli

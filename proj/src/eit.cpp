#include "qisim/eit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <mutex>

#include <boost/math/tools/roots.hpp>
#include <fftw3.h>

#include "qisim/errors.hpp"
#include "qisim/units.hpp"

namespace qisim::eit {

namespace {

using cplx = std::complex<double>;

constexpr double kMaxEdgeMass = 0.01;

// FFTW planning is not thread safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex()
{
    static std::mutex m;
    return m;
}

class FftPlan {
public:
    FftPlan(std::vector<cplx>& buffer, int sign)
    {
        std::lock_guard lock(fftw_planner_mutex());
        auto* data = reinterpret_cast<fftw_complex*>(buffer.data());
        plan_ = fftw_plan_dft_1d(static_cast<int>(buffer.size()), data, data, sign, FFTW_ESTIMATE);
    }
    ~FftPlan()
    {
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan_);
    }
    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    void execute() const { fftw_execute(plan_); }

private:
    fftw_plan plan_;
};

std::size_t padded_length(std::size_t n)
{
    std::size_t len = 1;
    while (len < 2 * n)
        len <<= 1;
    return len;
}

// Angular frequency of FFT bin k on a length-N grid with step dt.
double bin_frequency(std::size_t k, std::size_t n, double dt)
{
    const auto signed_k = k < n / 2 ? static_cast<double>(k)
                                    : static_cast<double>(k) - static_cast<double>(n);
    return kTwoPi * signed_k / (static_cast<double>(n) * dt);
}

// X(d) = sum_j x_j exp(+i d t_j) dt, zero padded to `len` samples.
std::vector<cplx> forward_spectrum(const Pulse& pulse, std::size_t len)
{
    std::vector<cplx> buf(len, cplx{0.0, 0.0});
    std::copy(pulse.samples.begin(), pulse.samples.end(), buf.begin());
    FftPlan plan(buf, FFTW_BACKWARD);
    plan.execute();
    return buf;
}

double spectrum_edge_fraction(const std::vector<cplx>& spectrum)
{
    const std::size_t n = spectrum.size();
    const auto edge_start = static_cast<std::size_t>(std::floor(0.45 * static_cast<double>(n)));
    double edge = 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t dist = k < n / 2 ? k : n - k;
        const double w = std::norm(spectrum[k]);
        total += w;
        if (dist >= edge_start)
            edge += w;
    }
    return total > 0.0 ? edge / total : 0.0;
}

double logistic(double x)
{
    return 0.5 * (1.0 + std::tanh(0.5 * x));
}

void require(bool ok, const char* message)
{
    if (!ok)
        throw InputError(message);
}

} // namespace

void validate(const EitMedium& m)
{
    require(std::isfinite(m.optical_depth) && m.optical_depth > 0.0, "optical depth must be > 0");
    require(std::isfinite(m.rabi_control) && m.rabi_control >= 0.0, "control Rabi frequency must be >= 0");
    require(std::isfinite(m.gamma_ge) && m.gamma_ge > 0.0, "gamma_ge must be > 0");
    require(std::isfinite(m.gamma_s) && m.gamma_s >= 0.0, "gamma_s must be >= 0");
    require(std::isfinite(m.length) && m.length > 0.0, "medium length must be > 0");
}

EitMedium reference_medium(double gamma_s)
{
    return EitMedium{
        .optical_depth = 55.0,
        .rabi_control = hz_to_rad(12.6e6),
        .gamma_ge = hz_to_rad(2.87e6),
        .gamma_s = gamma_s,
        .length = 4e-3,
    };
}

cplx log_transmission(double delta, const EitMedium& m)
{
    if (!std::isfinite(delta))
        throw InputError("detuning must be finite");
    const cplx spin(m.gamma_s, -delta);
    const cplx optical(m.gamma_ge, -delta);
    const double coupling = 0.25 * m.rabi_control * m.rabi_control;
    // spin / (optical * spin + coupling), continued to spin = 0
    cplx response;
    if (spin != 0.0)
        response = 1.0 / (optical + coupling / spin);
    else
        response = coupling > 0.0 ? cplx(0.0) : 1.0 / optical;
    return -0.5 * m.optical_depth * m.gamma_ge * response;
}

cplx transmission(double delta, const EitMedium& m)
{
    validate(m);
    return std::exp(log_transmission(delta, m));
}

double intensity_transmission(double delta, const EitMedium& m)
{
    return std::norm(transmission(delta, m));
}

double window_fwhm(const EitMedium& m)
{
    validate(m);
    if (m.rabi_control <= 0.0)
        throw ModelError("no control field: there is no transparency window");
    const double half = 0.5 * intensity_transmission(0.0, m);
    if (!(half > 0.0))
        throw ModelError("zero on-resonance transmission");

    auto excess = [&](double d) { return intensity_transmission(d, m) - half; };
    const double scale = 0.25 * m.rabi_control * m.rabi_control / m.gamma_ge + m.gamma_s;
    const double limit = 1e3 * (m.rabi_control + m.gamma_ge);
    double lo = 0.0;
    double hi = 1e-6 * scale;
    while (excess(hi) > 0.0) {
        lo = hi;
        hi *= 1.05;
        if (hi > limit)
            throw ModelError("transmission never falls to half its resonant value");
    }
    std::uintmax_t iterations = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        excess, lo, hi, boost::math::tools::eps_tolerance<double>(48), iterations);
    return a + b; // 2 * midpoint
}

DelayEstimate group_delay(const EitMedium& m)
{
    validate(m);
    if (m.rabi_control <= 0.0)
        throw ContractError("group delay requires a control field");
    double step;
    try {
        step = 1e-4 * window_fwhm(m);
    } catch (const ModelError&) {
        step = 1e-6 * 0.25 * m.rabi_control * m.rabi_control / m.gamma_ge;
    }
    const double slope =
        (log_transmission(step, m).imag() - log_transmission(-step, m).imag()) / (2.0 * step);
    return DelayEstimate{.seconds = slope, .regime_warning = !(slope > 0.0)};
}

double group_velocity(const EitMedium& m)
{
    const auto delay = group_delay(m);
    if (delay.regime_warning)
        throw ModelError("non-positive group delay: no slow light");
    return m.length / delay.seconds;
}

GammaSFit fit_gamma_s(const EitMedium& base, double target_fwhm)
{
    validate(base);
    if (!(target_fwhm > 0.0))
        throw InputError("target window must be positive");

    auto width_at = [&](double gs) {
        EitMedium m = base;
        m.gamma_s = gs;
        try {
            return window_fwhm(m);
        } catch (const ModelError&) {
            return 0.0;
        }
    };
    auto result = [&](double gs, bool converged) {
        GammaSFit fit;
        fit.medium = base;
        fit.medium.gamma_s = gs;
        fit.target_fwhm = target_fwhm;
        fit.achieved_fwhm = width_at(gs);
        fit.converged = converged;
        return fit;
    };

    // The window only narrows as gamma_s grows.
    const double at_zero = width_at(0.0) - target_fwhm;
    if (at_zero < 0.0)
        return result(0.0, false);
    if (at_zero == 0.0)
        return result(0.0, true);

    double lo = 0.0;
    double hi = 1e-3 * base.gamma_ge;
    while (width_at(hi) - target_fwhm > 0.0) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e2 * base.gamma_ge)
            return result(lo, false);
    }
    std::uintmax_t iterations = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        [&](double gs) { return width_at(gs) - target_fwhm; }, lo, hi,
        boost::math::tools::eps_tolerance<double>(40), iterations);
    const double gs = 0.5 * (a + b);
    auto fit = result(gs, true);
    fit.converged = std::abs(fit.achieved_fwhm - target_fwhm) <= 1e-6 * target_fwhm;
    return fit;
}

double Pulse::energy() const
{
    double e = 0.0;
    for (const auto& x : samples)
        e += std::norm(x);
    return e * dt;
}

double Pulse::duration() const
{
    double peak = 0.0;
    for (const auto& x : samples)
        peak = std::max(peak, std::norm(x));
    if (!(peak > 0.0))
        return 0.0;
    std::size_t first = samples.size();
    std::size_t last = 0;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (std::norm(samples[i]) > 0.01 * peak) {
            first = std::min(first, i);
            last = i;
        }
    return static_cast<double>(last - first) * dt;
}

double Pulse::peak_time() const
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < samples.size(); ++i)
        if (std::norm(samples[i]) > std::norm(samples[best]))
            best = i;
    return time(best);
}

Pulse gaussian_pulse(double intensity_fwhm, double center, double dt, std::size_t n)
{
    require(intensity_fwhm > 0.0 && dt > 0.0 && n > 0, "invalid gaussian pulse parameters");
    // |x|^2 = exp(-4 ln2 t^2 / fwhm^2)  =>  x = exp(-2 ln2 t^2 / fwhm^2)
    const double k = 2.0 * std::log(2.0) / (intensity_fwhm * intensity_fwhm);
    Pulse p{.t0 = 0.0, .dt = dt, .samples = std::vector<cplx>(n)};
    for (std::size_t i = 0; i < n; ++i) {
        const double t = p.time(i) - center;
        p.samples[i] = std::exp(-k * t * t);
    }
    return p;
}

Pulse exponential_pulse(double gamma, double dt, std::size_t n)
{
    require(gamma > 0.0 && dt > 0.0 && n > 0, "invalid exponential pulse parameters");
    Pulse p{.t0 = 0.0, .dt = dt, .samples = std::vector<cplx>(n)};
    for (std::size_t i = 0; i < n; ++i)
        p.samples[i] = std::exp(-0.5 * gamma * p.time(i));
    return p;
}

Pulse apply_transfer(const Pulse& pulse, const TransferFunction& transfer)
{
    require(pulse.dt > 0.0 && !pulse.samples.empty(), "empty pulse");
    const std::size_t len = padded_length(pulse.samples.size());
    std::vector<cplx> buf = forward_spectrum(pulse, len);
    for (std::size_t k = 0; k < len; ++k)
        buf[k] *= transfer(bin_frequency(k, len, pulse.dt));

    FftPlan inverse(buf, FFTW_FORWARD);
    inverse.execute();
    Pulse out{.t0 = pulse.t0, .dt = pulse.dt, .samples = std::vector<cplx>(pulse.samples.size())};
    const double norm = 1.0 / static_cast<double>(len);
    for (std::size_t i = 0; i < out.samples.size(); ++i)
        out.samples[i] = buf[i] * norm;
    return out;
}

Pulse propagate(const Pulse& pulse, const EitMedium& medium)
{
    validate(medium);
    require(pulse.dt > 0.0 && !pulse.samples.empty(), "empty pulse");
    if (medium.rabi_control > 0.0) {
        double window_hz = 0.0;
        try {
            window_hz = rad_to_hz(window_fwhm(medium));
        } catch (const ModelError&) {
        }
        if (window_hz > 0.0 && 1.0 / pulse.dt < 8.0 * window_hz)
            throw ResolutionError("sampling rate below 4x Nyquist of the transparency window");
    }
    const double edge = spectrum_edge_fraction(forward_spectrum(pulse, padded_length(pulse.samples.size())));
    if (edge >= kMaxEdgeMass)
        throw ResolutionError("aliasing: pulse spectrum reaches the sampling band edge");
    return apply_transfer(pulse, [&](double d) { return transmission(d, medium); });
}

DecayShape parse_decay_shape(const std::string& text)
{
    if (text == "exponential")
        return DecayShape::exponential;
    if (text == "gaussian")
        return DecayShape::gaussian;
    throw InputError("unknown decay shape '" + text + "'");
}

std::string to_string(DecayShape shape)
{
    return shape == DecayShape::exponential ? "exponential" : "gaussian";
}

double MemoryDecay::operator()(double t) const
{
    const double x = t / tau;
    return shape == DecayShape::exponential ? eta0 * std::exp(-x) : eta0 * std::exp(-x * x);
}

StorageReport store_and_retrieve(const Pulse& pulse, const EitMedium& medium,
                                 const ControlTimeline& timeline, const MemoryDecay& decay)
{
    validate(medium);
    require(timeline.on_until >= 0.0 && timeline.off_duration >= 0.0 && timeline.ramp > 0.0,
            "invalid control timeline");
    require(decay.eta0 >= 0.0 && decay.eta0 <= 1.0 && decay.tau > 0.0, "invalid memory decay");
    const double input_energy = pulse.energy();
    require(input_energy > 0.0, "input pulse carries no energy");

    const auto delay = group_delay(medium);
    if (delay.regime_warning)
        throw ModelError("no slow light: group delay is not positive");
    const double tau_d = delay.seconds;

    // Window long enough for everything that exits within three delays of
    // switch-off (the late branch decays inside it).
    const double horizon = std::max(pulse.time(pulse.samples.size() - 1), timeline.on_until) +
                           3.0 * tau_d + 20.0 * timeline.ramp;
    const auto n_ext = static_cast<std::size_t>(std::ceil((horizon - pulse.t0) / pulse.dt)) + 1;
    Pulse input = pulse;
    if (n_ext > input.samples.size())
        input.samples.resize(n_ext, cplx{0.0, 0.0});
    const Pulse through = propagate(input, medium);

    auto switched_off = [&](double t) { return logistic((t - timeline.on_until) / timeline.ramp); };

    double leaked = 0.0;
    double stored = 0.0;
    double late = 0.0;
    double transmitted = 0.0;
    std::vector<double> leak_weight(through.samples.size());
    std::vector<double> store_weight(through.samples.size());
    for (std::size_t i = 0; i < through.samples.size(); ++i) {
        const double t = through.time(i);
        const double off = switched_off(t);
        // Exiting after t means having entered after t - tau_d.
        const double entered_late = switched_off(t - tau_d);
        const double e = std::norm(through.samples[i]) * through.dt;
        leak_weight[i] = 1.0 - off;
        store_weight[i] = off * (1.0 - entered_late);
        leaked += leak_weight[i] * e;
        stored += store_weight[i] * e;
        late += off * entered_late * e;
        transmitted += e;
    }

    const double t_s = timeline.off_duration;
    const double eta = decay(t_s);
    const double retrieved = eta * stored;

    const auto shift = static_cast<std::size_t>(std::llround(t_s / through.dt));
    Pulse output{.t0 = through.t0, .dt = through.dt,
                 .samples = std::vector<cplx>(through.samples.size() + shift, cplx{0.0, 0.0})};
    for (std::size_t i = 0; i < through.samples.size(); ++i) {
        output.samples[i] += std::sqrt(leak_weight[i]) * through.samples[i];
        output.samples[i + shift] += std::sqrt(eta * store_weight[i]) * through.samples[i];
    }

    StorageReport report;
    report.leakage_efficiency = leaked / input_energy;
    report.retrieval_efficiency = retrieved / input_energy;
    report.stored_fraction = stored / input_energy;
    report.absorbed_fraction =
        (input_energy - transmitted + late + (1.0 - eta) * stored) / input_energy;
    report.storage_time = t_s;
    report.capacity_warning = pulse.duration() > 2.0 * tau_d;
    report.output_pulse = std::move(output);
    return report;
}

} // namespace qisim::eit

#pragma once

// Lambda-type EIT medium: transmission, slow light, and a phenomenological
// store/retrieve model built on single-pass propagation.

#include <complex>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace qisim::eit {

// Rates are angular (rad/s). gamma_ge is the optical coherence decay
// (half the excited-state linewidth); gamma_s the spin-wave decoherence.
struct EitMedium {
    double optical_depth = 0.0;
    double rabi_control = 0.0;
    double gamma_ge = 0.0;
    double gamma_s = 0.0;
    double length = 0.0; // m
};

void validate(const EitMedium& medium);

// OD 55, control Rabi frequency 2pi x 12.6 MHz, gamma_ge 2pi x 2.87 MHz
// (half the Rb D1 natural linewidth), 4 mm ensemble.
EitMedium reference_medium(double gamma_s = 0.0);

// log t(delta) = -(OD/2) g_ge (g_s - i d) / ((g_ge - i d)(g_s - i d) + Omega^2/4)
std::complex<double> log_transmission(double delta, const EitMedium& medium);
std::complex<double> transmission(double delta, const EitMedium& medium);
double intensity_transmission(double delta, const EitMedium& medium);

// Full width at half maximum (rad/s) of the |t|^2 transparency peak at zero
// detuning. Throws ModelError when no such peak exists.
double window_fwhm(const EitMedium& medium);

struct DelayEstimate {
    double seconds = 0.0;
    // Set when the slope is non-positive (window too broad for slow light).
    bool regime_warning = false;
};

// d arg t / d delta at delta = 0 by central difference.
DelayEstimate group_delay(const EitMedium& medium);

// length / group delay (m/s).
double group_velocity(const EitMedium& medium);

struct GammaSFit {
    EitMedium medium;
    double target_fwhm = 0.0;   // rad/s
    double achieved_fwhm = 0.0; // rad/s
    bool converged = false;
};

// Solves window_fwhm(gamma_s) = target over gamma_s >= 0, keeping every
// other parameter of `base`. When no gamma_s reaches the target the
// closest admissible medium is returned with converged = false.
GammaSFit fit_gamma_s(const EitMedium& base, double target_fwhm);

// Uniformly sampled complex envelope.
struct Pulse {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<std::complex<double>> samples;

    double time(std::size_t i) const { return t0 + static_cast<double>(i) * dt; }
    double energy() const;
    // Length of the interval where |x|^2 exceeds 1% of its peak.
    double duration() const;
    // Time of the intensity maximum.
    double peak_time() const;
};

// Gaussian intensity envelope with the given FWHM centred at `center`.
Pulse gaussian_pulse(double intensity_fwhm, double center, double dt, std::size_t n);

// One-sided exp(-gamma t / 2) starting at t = 0: the heralded signal photon
// of a short-pumped cavity source with linewidth gamma.
Pulse exponential_pulse(double gamma, double dt, std::size_t n);

using TransferFunction = std::function<std::complex<double>(double)>;

// Output envelope after multiplying the spectrum by `transfer` (same grid;
// energy delayed past the last sample is lost).
Pulse apply_transfer(const Pulse& pulse, const TransferFunction& transfer);

// apply_transfer with t(delta), after checking that the sampling resolves
// both the pulse spectrum and the transparency window.
Pulse propagate(const Pulse& pulse, const EitMedium& medium);

// Control field stays on until `on_until`, is off for `off_duration`,
// switching with a logistic edge of width `ramp`.
struct ControlTimeline {
    double on_until = 0.0;
    double off_duration = 0.0;
    double ramp = 1e-9;
};

enum class DecayShape { exponential, gaussian };

DecayShape parse_decay_shape(const std::string& text);
std::string to_string(DecayShape shape);

// eta(t) = eta0 exp(-t/tau) or eta0 exp(-t^2/tau^2).
struct MemoryDecay {
    double eta0 = 1.0;
    double tau = 1.0;
    DecayShape shape = DecayShape::gaussian;

    double operator()(double t) const;
};

struct StorageReport {
    double leakage_efficiency = 0.0;
    double retrieval_efficiency = 0.0;
    double stored_fraction = 0.0;   // inside the medium at switch-off
    double absorbed_fraction = 0.0; // filter loss, late arrivals, memory decay
    double storage_time = 0.0;
    bool capacity_warning = false;  // pulse longer than twice the group delay
    Pulse output_pulse;
};

StorageReport store_and_retrieve(const Pulse& pulse, const EitMedium& medium,
                                 const ControlTimeline& timeline, const MemoryDecay& decay);

} // namespace qisim::eit

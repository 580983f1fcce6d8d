#pragma once

// Pump spectra, cavity line shapes and the two-photon joint spectral
// amplitude of a cavity-enhanced down-conversion source.
//
// All frequencies are angular detunings (rad/s) from the degenerate
// centre frequency, so the optical carrier never enters the arithmetic.

#include <complex>
#include <cstddef>

#include <Eigen/Dense>

namespace qisim::spectral {

// Uniform, symmetric sampling of [-span/2, +span/2] with an even number
// of points (so 0 itself is never a sample).
class FrequencyGrid {
public:
    FrequencyGrid(double span, std::size_t n_points);

    double span() const { return span_; }
    std::size_t size() const { return n_; }
    double spacing() const { return spacing_; }
    double max_detuning() const { return 0.5 * span_; }
    double detuning(std::size_t i) const { return -0.5 * span_ + static_cast<double>(i) * spacing_; }
    Eigen::VectorXd detunings() const;

private:
    double span_;
    std::size_t n_;
    double spacing_;
};

class CavityLine {
public:
    explicit CavityLine(double gamma);
    // Full width at half maximum of |response|^2, rad/s.
    double gamma() const { return gamma_; }

private:
    double gamma_;
};

enum class PumpKind { gaussian, delta_limit, flat_limit };

class PumpSpectrum {
public:
    static PumpSpectrum gaussian(double sigma);
    static PumpSpectrum flat_limit() { return PumpSpectrum(PumpKind::flat_limit, 0.0); }
    static PumpSpectrum delta_limit() { return PumpSpectrum(PumpKind::delta_limit, 0.0); }

    PumpKind kind() const { return kind_; }
    // Standard deviation of the amplitude spectrum (rad/s); 0 for the limits.
    double sigma() const { return sigma_; }

private:
    PumpSpectrum(PumpKind kind, double sigma) : kind_(kind), sigma_(sigma) {}
    PumpKind kind_;
    double sigma_;
};

class JointSpectralAmplitude {
public:
    JointSpectralAmplitude(FrequencyGrid grid, Eigen::MatrixXcd amplitude, bool normalized);

    const FrequencyGrid& grid() const { return grid_; }
    // Row index: flying photon detuning; column index: signal photon detuning.
    const Eigen::MatrixXcd& amplitude() const { return amplitude_; }
    bool normalized() const { return normalized_; }

    // sum |psi|^2 * spacing^2
    double norm_squared() const;
    JointSpectralAmplitude normalized_copy() const;

private:
    FrequencyGrid grid_;
    Eigen::MatrixXcd amplitude_;
    bool normalized_;
};

// 1 / (delta + i gamma/2)
std::complex<double> cavity_response(double delta, const CavityLine& line);

// Gaussian: exp(-w^2 / 2 sigma^2) / (sqrt(2 pi) sigma). Flat limit: 1.
// The delta limit has no pointwise value and throws UnsupportedKindError.
double pump_amplitude(double omega_sum_detuning, const PumpSpectrum& pump);

// Pump pulse duration T_p (s) -> sigma (rad/s), reading T_p as the FWHM of
// a Gaussian temporal amplitude envelope: sigma_Hz = sqrt(2 ln 2) / (pi T_p).
double sigma_from_pulse_duration(double pulse_duration);

// Fraction of the Lorentzian |response|^2 lying beyond +half_span (one side).
double lorentzian_tail_fraction(double half_span, double gamma);

// span = span_factor * max(gamma, sigma), n_points per axis.
FrequencyGrid default_grid(const CavityLine& line, const PumpSpectrum& pump,
                           std::size_t n_points = 512, double span_factor = 40.0);

// psi(d1, d2) = r(d1) r(d2) phi(d1 + d2), L2-normalised on the grid.
JointSpectralAmplitude build_jsa(const FrequencyGrid& grid, const CavityLine& line,
                                 const PumpSpectrum& pump);

} // namespace qisim::spectral

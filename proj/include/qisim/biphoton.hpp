#pragma once

// Frequency-correlation diagnostics of a biphoton and its joint detection
// time distribution.

#include <complex>
#include <cstddef>
#include <functional>

#include <Eigen/Dense>

#include "qisim/spectral.hpp"

namespace qisim::biphoton {

using spectral::FrequencyGrid;
using spectral::JointSpectralAmplitude;

// Single-photon reduced state of the signal photon, expressed in the
// orthonormal basis of width-`spacing` box functions on the grid, so that
// trace() == 1 for a normalised JSA and purity() is the kernel integral
// of |rho(d, d')|^2.
class ReducedFrequencyState {
public:
    ReducedFrequencyState(FrequencyGrid grid, Eigen::MatrixXcd matrix);

    const FrequencyGrid& grid() const { return grid_; }
    const Eigen::MatrixXcd& matrix() const { return matrix_; }
    double trace() const;
    double purity() const;

private:
    FrequencyGrid grid_;
    Eigen::MatrixXcd matrix_;
};

class TimeGrid {
public:
    TimeGrid(double t_min, double t_max, std::size_t n_points);

    double t_min() const { return t_min_; }
    double t_max() const { return t_max_; }
    std::size_t size() const { return n_; }
    double spacing() const { return (t_max_ - t_min_) / static_cast<double>(n_ - 1); }
    double time(std::size_t i) const { return t_min_ + static_cast<double>(i) * spacing(); }

private:
    double t_min_;
    double t_max_;
    std::size_t n_;
};

// [-0.2 L, 0.8 L] with L = span_factor / gamma, i.e. [-2/gamma, 8/gamma]
// for the default factor of 10.
TimeGrid default_time_grid(double gamma, std::size_t n_points = 512, double span_factor = 10.0);

// Time grid conjugate to the frequency grid under the DFT: same number of
// points, spacing 2 pi / (n * dd), centred on zero. On this grid the
// transform is unitary (Parseval holds exactly up to rounding).
TimeGrid conjugate_time_grid(const FrequencyGrid& grid);

class JointTimeDistribution {
public:
    JointTimeDistribution(TimeGrid grid, Eigen::MatrixXd density);

    const TimeGrid& grid() const { return grid_; }
    // Row index: flying photon time t1; column index: signal photon time t2.
    const Eigen::MatrixXd& density() const { return density_; }

private:
    TimeGrid grid_;
    Eigen::MatrixXd density_;
};

// Complex transfer function applied to the signal-photon detuning axis.
using SignalFilter = std::function<std::complex<double>(double)>;

ReducedFrequencyState reduced_state(const JointSpectralAmplitude& jsa);

// V = Tr(rho^2) / (Tr rho)^2.
double visibility(const JointSpectralAmplitude& jsa);

// Singular values of the sampled amplitude matrix, descending.
Eigen::VectorXd schmidt_coefficients(const JointSpectralAmplitude& jsa);

// Fraction of |psi|^2 in cells where either detuning lies in the outer
// `edge_fraction` of the grid points (half on each side).
double edge_mass_fraction(const JointSpectralAmplitude& jsa, double edge_fraction = 0.1);

// psi(t1, t2) = int psi(d1, d2) exp(-i d1 t1 - i d2 t2) dd1 dd2 / (2 pi),
// evaluated as a direct (exact on any grid) discrete sum.
Eigen::MatrixXcd time_domain(const JointSpectralAmplitude& jsa, const TimeGrid& t_grid);

// |psi(t1, t2)|^2 normalised to a maximum of 1. A positive jitter_sigma (s)
// blurs both axes with a Gaussian detector-timing kernel first.
JointTimeDistribution joint_time_distribution(const JointSpectralAmplitude& jsa,
                                              const TimeGrid& t_grid,
                                              double jitter_sigma = 0.0);

// Same as joint_time_distribution after multiplying the signal axis of psi
// by `filter`. An empty filter is the identity.
JointTimeDistribution post_storage_distribution(const JointSpectralAmplitude& jsa,
                                                const SignalFilter& filter,
                                                const TimeGrid& t_grid,
                                                double jitter_sigma = 0.0);

// Closed forms of the two pump limits (unnormalised amplitudes).
double continuous_pump_amplitude(double gamma, double t1, double t2);
double short_pump_amplitude(double gamma, double t1, double t2);
JointTimeDistribution continuous_pump_distribution(double gamma, const TimeGrid& t_grid);
JointTimeDistribution short_pump_distribution(double gamma, const TimeGrid& t_grid);

// Pearson correlation coefficient of (t1, t2) weighted by the density.
double time_correlation(const JointTimeDistribution& dist);

} // namespace qisim::biphoton

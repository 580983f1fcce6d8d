#pragma once

// Polarisation qubits, the dual-rail memory channel and the Bell/CHSH and
// cross-correlation diagnostics of stored photons.

#include <array>
#include <complex>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "qisim/eit.hpp"

namespace qisim::qubit {

// Basis order {H, V}; two-qubit index = 2 * flying + signal.
class PolarizationState {
public:
    static PolarizationState from_amplitudes(std::complex<double> h, std::complex<double> v);
    static PolarizationState H();
    static PolarizationState V();
    static PolarizationState plus();
    static PolarizationState minus();
    static PolarizationState R();
    static PolarizationState L();
    // cos(theta)|H> + sin(theta)|V>
    static PolarizationState linear(double theta);

    const Eigen::Vector2cd& jones() const { return jones_; }

private:
    explicit PolarizationState(Eigen::Vector2cd jones) : jones_(std::move(jones)) {}
    Eigen::Vector2cd jones_;
};

class QubitDensity {
public:
    explicit QubitDensity(Eigen::Matrix2cd matrix);
    static QubitDensity pure(const PolarizationState& state);
    static QubitDensity maximally_mixed();
    const Eigen::Matrix2cd& matrix() const { return matrix_; }

private:
    Eigen::Matrix2cd matrix_;
};

class TwoQubitDensity {
public:
    explicit TwoQubitDensity(Eigen::Matrix4cd matrix);
    const Eigen::Matrix4cd& matrix() const { return matrix_; }
    // Partial trace over the flying (first) photon.
    QubitDensity signal_state() const;

private:
    Eigen::Matrix4cd matrix_;
};

// H is stored in ensemble D, V in ensemble U. eta_U / eta_D are amplitude
// transmissions of the two rails; `background` is the background-to-signal
// probability ratio at zero storage time.
struct MemoryChannelParams {
    double eta_U = 1.0;
    double eta_D = 1.0;
    double phase_jitter_sigma = 0.0; // rad, Gaussian spread of phi1 + phi2
    double background = 0.0;
    double storage_time = 0.0;       // s
};

void validate(const MemoryChannelParams& params);

// Memory efficiency versus storage time. Empty means "no decay".
using EtaOfT = std::function<double(double)>;

// The background rate is fixed while the retrieved signal follows eta(t),
// so the ratio grows as background * eta(0) / eta(t).
double effective_background(const MemoryChannelParams& params, const EtaOfT& eta);

// Rail attenuation, dephasing exp(-sigma^2/2) of the H/V coherence,
// post-selection on a retrieved photon, then white-noise admixture with
// weight b / (1 + b).
QubitDensity memory_channel(const QubitDensity& rho_in, const MemoryChannelParams& params,
                            const EtaOfT& eta = {});

// Same channel acting on the signal photon of a two-qubit state.
TwoQubitDensity memory_channel_on_signal(const TwoQubitDensity& rho_in,
                                         const MemoryChannelParams& params,
                                         const EtaOfT& eta = {});

// Monte Carlo version of memory_channel: averages over `samples` draws of
// the interferometer phase instead of using the closed-form dephasing.
QubitDensity memory_channel_sampled(const QubitDensity& rho_in, const MemoryChannelParams& params,
                                    const EtaOfT& eta, std::mt19937_64& rng, std::size_t samples);

// Choi matrix sum_ij |i><j| (x) E(|i><j|) of the channel before
// post-selection, scaled by the mean rail efficiency (trace preserving
// exactly when the rails are balanced).
Eigen::Matrix4cd channel_choi(const MemoryChannelParams& params, const EtaOfT& eta = {});

// <psi|rho|psi>
double fidelity(const PolarizationState& psi_in, const QubitDensity& rho_out);

struct StateFidelity {
    std::string label;
    double fidelity = 0.0;
};

struct SixStateResult {
    std::vector<StateFidelity> states; // H, V, +, -, R, L
    double average = 0.0;
};

const std::array<std::pair<const char*, PolarizationState>, 6>& six_states();

SixStateResult six_state_battery(const MemoryChannelParams& params, const EtaOfT& eta = {});

TwoQubitDensity bell_state();
// V |Psi+><Psi+| + (1 - V) I/4
TwoQubitDensity werner_state(double visibility);
TwoQubitDensity product_state(const PolarizationState& flying, const PolarizationState& signal);

// `minus` mirrors the flying analyser (theta1 -> -theta1), the convention
// under which (0, 45, 22.5, 67.5) degrees is optimal for Psi+.
enum class AnalyzerConvention { plus, minus };

double correlation_E(const TwoQubitDensity& rho, double theta1, double theta2,
                     AnalyzerConvention convention);

struct ChshAngles {
    double theta1 = 0.0;
    double theta1_prime = 0.0;
    double theta2 = 0.0;
    double theta2_prime = 0.0;
};

// (0, 45, 22.5, 67.5) degrees in radians.
ChshAngles standard_chsh_angles();

double chsh_S(const TwoQubitDensity& rho, const ChshAngles& angles, AnalyzerConvention convention);

enum class FlyingBasis { H, plus };

// Coincidence probability with the flying photon projected on `basis` and
// the signal on cos(theta)|H> + sin(theta)|V>, normalised to its maximum.
std::vector<double> correlation_curve(const TwoQubitDensity& rho, FlyingBasis basis,
                                      std::span<const double> thetas);

// (max - min) / (max + min) of a sampled curve.
double curve_visibility(std::span<const double> curve);

// 0 to pi in `n` equal steps (inclusive).
std::vector<double> half_turn_sweep(std::size_t n = 721);

// Finds the background b (zero storage-time reference) for which the
// |+>-basis correlation curve of a stored Werner(source_visibility) pair
// has the target visibility. Throws FitError if unreachable.
double fit_background(double target_visibility, MemoryChannelParams params, const EtaOfT& eta,
                      double source_visibility = 1.0);

struct PairStatistics {
    double p1 = 0.0;
    double p3 = 0.0;
    double p13 = 0.0;
};

void validate(const PairStatistics& stats);

// p13 / (p1 p3)
double g13(const PairStatistics& stats);

// 4 / (g13 - 1)
double alpha_quality(double g13_value);

// 1 + (g0 - 1) eta(t) / eta(0)
double g13_decay_model(double t, double g0, const EtaOfT& eta);

// Decay constant making g13_decay_model cross `threshold` at `t_cross`.
double decay_tau_for_crossing(double g0, double threshold, double t_cross, eit::DecayShape shape);

// First time in [0, t_max] where the model reaches `threshold`.
std::optional<double> crossing_time(double g0, double threshold, const EtaOfT& eta, double t_max);

} // namespace qisim::qubit

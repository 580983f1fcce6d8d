#include "qisim/spectral.hpp"

#include <cmath>
#include <string>

#include "qisim/errors.hpp"
#include "qisim/units.hpp"

namespace qisim::spectral {

namespace {

constexpr double kMaxTailFraction = 0.01;
constexpr double kMinSpanInLinewidths = 4.0;

void require_finite(double x, const char* what)
{
    if (!std::isfinite(x))
        throw InputError(std::string(what) + " must be finite");
}

} // namespace

FrequencyGrid::FrequencyGrid(double span, std::size_t n_points)
    : span_(span), n_(n_points), spacing_(0.0)
{
    require_finite(span, "grid span");
    if (n_points < 8 || n_points % 2 != 0)
        throw InputError("frequency grid needs an even number of points >= 8, got " +
                         std::to_string(n_points));
    if (span <= 0.0)
        throw InputError("frequency grid span must be positive");
    spacing_ = span / static_cast<double>(n_points - 1);
}

Eigen::VectorXd FrequencyGrid::detunings() const
{
    Eigen::VectorXd d(static_cast<Eigen::Index>(n_));
    for (std::size_t i = 0; i < n_; ++i)
        d(static_cast<Eigen::Index>(i)) = detuning(i);
    return d;
}

CavityLine::CavityLine(double gamma) : gamma_(gamma)
{
    require_finite(gamma, "cavity linewidth");
    if (gamma <= 0.0)
        throw InputError("cavity linewidth must be positive");
}

PumpSpectrum PumpSpectrum::gaussian(double sigma)
{
    require_finite(sigma, "pump sigma");
    if (sigma <= 0.0)
        throw InputError("gaussian pump needs sigma > 0");
    return PumpSpectrum(PumpKind::gaussian, sigma);
}

JointSpectralAmplitude::JointSpectralAmplitude(FrequencyGrid grid, Eigen::MatrixXcd amplitude,
                                               bool normalized)
    : grid_(grid), amplitude_(std::move(amplitude)), normalized_(normalized)
{
    const auto n = static_cast<Eigen::Index>(grid_.size());
    if (amplitude_.rows() != n || amplitude_.cols() != n)
        throw InputError("JSA matrix shape does not match its grid");
}

double JointSpectralAmplitude::norm_squared() const
{
    return amplitude_.squaredNorm() * grid_.spacing() * grid_.spacing();
}

JointSpectralAmplitude JointSpectralAmplitude::normalized_copy() const
{
    const double n2 = norm_squared();
    if (!(n2 > 0.0))
        throw ContractError("cannot normalise a zero JSA");
    return JointSpectralAmplitude(grid_, amplitude_ / std::sqrt(n2), true);
}

std::complex<double> cavity_response(double delta, const CavityLine& line)
{
    require_finite(delta, "detuning");
    return 1.0 / std::complex<double>(delta, 0.5 * line.gamma());
}

double pump_amplitude(double omega_sum_detuning, const PumpSpectrum& pump)
{
    switch (pump.kind()) {
    case PumpKind::gaussian: {
        const double s = pump.sigma();
        const double x = omega_sum_detuning / s;
        return std::exp(-0.5 * x * x) / (std::sqrt(kTwoPi) * s);
    }
    case PumpKind::flat_limit:
        return 1.0;
    case PumpKind::delta_limit:
        break;
    }
    throw UnsupportedKindError("delta-limit pump cannot be sampled pointwise; "
                               "use the analytic continuous-pump path");
}

double sigma_from_pulse_duration(double pulse_duration)
{
    require_finite(pulse_duration, "pulse duration");
    if (pulse_duration <= 0.0)
        throw InputError("pulse duration must be positive");
    const double sigma_hz = std::sqrt(2.0 * std::log(2.0)) / (kPi * pulse_duration);
    return hz_to_rad(sigma_hz);
}

double lorentzian_tail_fraction(double half_span, double gamma)
{
    return 0.5 - std::atan(2.0 * half_span / gamma) / kPi;
}

FrequencyGrid default_grid(const CavityLine& line, const PumpSpectrum& pump,
                           std::size_t n_points, double span_factor)
{
    const double width = std::max(line.gamma(), pump.sigma());
    return FrequencyGrid(span_factor * width, n_points);
}

JointSpectralAmplitude build_jsa(const FrequencyGrid& grid, const CavityLine& line,
                                 const PumpSpectrum& pump)
{
    const double half = grid.max_detuning();
    if (half < kMinSpanInLinewidths * line.gamma())
        throw ResolutionError("frequency grid must span at least +-4 gamma");
    if (pump.kind() == PumpKind::gaussian && half < kMinSpanInLinewidths * pump.sigma())
        throw ResolutionError("frequency grid must span at least +-4 sigma");
    const double tail = lorentzian_tail_fraction(half, line.gamma());
    if (tail > kMaxTailFraction)
        throw ResolutionError("frequency grid too narrow: Lorentzian tail mass " +
                              std::to_string(tail) + " beyond the grid edge");

    const auto n = static_cast<Eigen::Index>(grid.size());
    Eigen::VectorXcd response(n);
    for (Eigen::Index i = 0; i < n; ++i)
        response(i) = cavity_response(grid.detuning(static_cast<std::size_t>(i)), line);

    Eigen::MatrixXcd amp(n, n);
    // grid.detuning(i) + grid.detuning(j) is symmetric in (i, j) bit for bit,
    // so the exchange symmetry of the result is exact.
    for (Eigen::Index j = 0; j < n; ++j) {
        const double dj = grid.detuning(static_cast<std::size_t>(j));
        for (Eigen::Index i = 0; i < n; ++i) {
            const double di = grid.detuning(static_cast<std::size_t>(i));
            amp(i, j) = response(i) * response(j) * pump_amplitude(di + dj, pump);
        }
    }
    return JointSpectralAmplitude(grid, std::move(amp), false).normalized_copy();
}

} // namespace qisim::spectral

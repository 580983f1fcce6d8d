#include "qisim/qubit.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>

#include <boost/math/tools/roots.hpp>

#include "qisim/errors.hpp"
#include "qisim/units.hpp"

namespace qisim::qubit {

namespace {

using cplx = std::complex<double>;

constexpr double kHermitianTol = 1e-12;
constexpr double kTraceTol = 1e-9;
constexpr double kPsdTol = 1e-10;

template <typename Matrix>
void check_density(const Matrix& m)
{
    if (!m.allFinite())
        throw InputError("density matrix has non-finite entries");
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
        throw InputError("density matrix is not Hermitian");
    if (std::abs(m.trace().real() - 1.0) > kTraceTol || std::abs(m.trace().imag()) > kTraceTol)
        throw InputError("density matrix trace is not 1");
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPsdTol)
        throw InputError("density matrix is not positive semidefinite");
}

// |u><u| - |u_perp><u_perp| for the linear analyser at angle theta.
Eigen::Matrix2cd analyser(double theta)
{
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    Eigen::Matrix2cd o;
    o << c, s, s, -c;
    return o;
}

Eigen::Matrix4cd kron(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b)
{
    Eigen::Matrix4cd out;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            out.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return out;
}

Eigen::Vector4cd kron(const Eigen::Vector2cd& a, const Eigen::Vector2cd& b)
{
    Eigen::Vector4cd out;
    out << a(0) * b(0), a(0) * b(1), a(1) * b(0), a(1) * b(1);
    return out;
}

// Diagonal rail amplitudes {H -> ensemble D, V -> ensemble U}.
Eigen::Matrix2cd rail_operator(const MemoryChannelParams& p, const EtaOfT& eta)
{
    // eta(t) is an efficiency, hence the square root for the amplitude.
    const double memory = eta ? std::sqrt(std::max(0.0, eta(p.storage_time))) : 1.0;
    Eigen::Matrix2cd k = Eigen::Matrix2cd::Zero();
    k(0, 0) = p.eta_D * memory;
    k(1, 1) = p.eta_U * memory;
    return k;
}

double noise_weight(const MemoryChannelParams& p, const EtaOfT& eta)
{
    const double b = effective_background(p, eta);
    return b / (1.0 + b);
}

Eigen::Matrix2cd hermitize(const Eigen::Matrix2cd& m) { return 0.5 * (m + m.adjoint()); }
Eigen::Matrix4cd hermitize(const Eigen::Matrix4cd& m) { return 0.5 * (m + m.adjoint()); }

QubitDensity finish_single(Eigen::Matrix2cd attenuated, const MemoryChannelParams& p, const EtaOfT& eta)
{
    const double retrieved = attenuated.trace().real();
    if (!(retrieved > std::numeric_limits<double>::min()))
        throw NoRetrievalError("memory channel retrieves nothing");
    attenuated /= retrieved;
    const double pb = noise_weight(p, eta);
    Eigen::Matrix2cd out = (1.0 - pb) * attenuated + 0.5 * pb * Eigen::Matrix2cd::Identity();
    return QubitDensity(hermitize(out));
}

} // namespace

PolarizationState PolarizationState::from_amplitudes(cplx h, cplx v)
{
    Eigen::Vector2cd j(h, v);
    if (!j.allFinite() || std::abs(j.squaredNorm() - 1.0) > 1e-12)
        throw InputError("Jones vector must be unit norm");
    return PolarizationState(j);
}

PolarizationState PolarizationState::H() { return PolarizationState(Eigen::Vector2cd(1.0, 0.0)); }
PolarizationState PolarizationState::V() { return PolarizationState(Eigen::Vector2cd(0.0, 1.0)); }

PolarizationState PolarizationState::plus()
{
    return PolarizationState(Eigen::Vector2cd(1.0, 1.0) / std::sqrt(2.0));
}

PolarizationState PolarizationState::minus()
{
    return PolarizationState(Eigen::Vector2cd(1.0, -1.0) / std::sqrt(2.0));
}

PolarizationState PolarizationState::R()
{
    return PolarizationState(Eigen::Vector2cd(cplx(1.0, 0.0), cplx(0.0, 1.0)) / std::sqrt(2.0));
}

PolarizationState PolarizationState::L()
{
    return PolarizationState(Eigen::Vector2cd(cplx(1.0, 0.0), cplx(0.0, -1.0)) / std::sqrt(2.0));
}

PolarizationState PolarizationState::linear(double theta)
{
    return PolarizationState(Eigen::Vector2cd(std::cos(theta), std::sin(theta)));
}

QubitDensity::QubitDensity(Eigen::Matrix2cd matrix) : matrix_(std::move(matrix))
{
    check_density(matrix_);
}

QubitDensity QubitDensity::pure(const PolarizationState& s)
{
    return QubitDensity(s.jones() * s.jones().adjoint());
}

QubitDensity QubitDensity::maximally_mixed()
{
    return QubitDensity(0.5 * Eigen::Matrix2cd::Identity());
}

TwoQubitDensity::TwoQubitDensity(Eigen::Matrix4cd matrix) : matrix_(std::move(matrix))
{
    check_density(matrix_);
}

QubitDensity TwoQubitDensity::signal_state() const
{
    Eigen::Matrix2cd r = matrix_.block<2, 2>(0, 0) + matrix_.block<2, 2>(2, 2);
    return QubitDensity(hermitize(r));
}

void validate(const MemoryChannelParams& p)
{
    auto in_unit = [](double x) { return std::isfinite(x) && x >= 0.0 && x <= 1.0; };
    if (!in_unit(p.eta_U) || !in_unit(p.eta_D))
        throw InputError("rail transmissions must lie in [0, 1]");
    if (!std::isfinite(p.phase_jitter_sigma) || p.phase_jitter_sigma < 0.0)
        throw InputError("phase jitter must be >= 0");
    if (!std::isfinite(p.background) || p.background < 0.0)
        throw InputError("background ratio must be >= 0");
    if (!std::isfinite(p.storage_time) || p.storage_time < 0.0)
        throw InputError("storage time must be >= 0");
}

double effective_background(const MemoryChannelParams& p, const EtaOfT& eta)
{
    if (!eta)
        return p.background;
    const double at_zero = eta(0.0);
    const double at_t = eta(p.storage_time);
    if (!(at_t > 0.0) || !(at_zero > 0.0))
        throw NoRetrievalError("memory efficiency has decayed to zero");
    return p.background * at_zero / at_t;
}

QubitDensity memory_channel(const QubitDensity& rho_in, const MemoryChannelParams& p, const EtaOfT& eta)
{
    validate(p);
    const Eigen::Matrix2cd k = rail_operator(p, eta);
    Eigen::Matrix2cd r = k * rho_in.matrix() * k.adjoint();
    const double dephasing = std::exp(-0.5 * p.phase_jitter_sigma * p.phase_jitter_sigma);
    r(0, 1) *= dephasing;
    r(1, 0) *= dephasing;
    return finish_single(r, p, eta);
}

QubitDensity memory_channel_sampled(const QubitDensity& rho_in, const MemoryChannelParams& p,
                                    const EtaOfT& eta, std::mt19937_64& rng, std::size_t samples)
{
    validate(p);
    if (samples == 0)
        throw InputError("need at least one phase sample");
    const Eigen::Matrix2cd k = rail_operator(p, eta);
    const Eigen::Matrix2cd r = k * rho_in.matrix() * k.adjoint();
    std::normal_distribution<double> phase(0.0, p.phase_jitter_sigma);
    cplx coherence_factor = 0.0;
    for (std::size_t i = 0; i < samples; ++i)
        coherence_factor += std::polar(1.0, p.phase_jitter_sigma > 0.0 ? phase(rng) : 0.0);
    coherence_factor /= static_cast<double>(samples);
    // diag(1, e^{i phi}) rotates rho(1,0) by e^{i phi} and rho(0,1) by e^{-i phi}.
    Eigen::Matrix2cd averaged = r;
    averaged(1, 0) *= coherence_factor;
    averaged(0, 1) *= std::conj(coherence_factor);
    return finish_single(averaged, p, eta);
}

TwoQubitDensity memory_channel_on_signal(const TwoQubitDensity& rho_in, const MemoryChannelParams& p,
                                         const EtaOfT& eta)
{
    validate(p);
    const Eigen::Matrix4cd k = kron(Eigen::Matrix2cd::Identity(), rail_operator(p, eta));
    Eigen::Matrix4cd r = k * rho_in.matrix() * k.adjoint();
    const double dephasing = std::exp(-0.5 * p.phase_jitter_sigma * p.phase_jitter_sigma);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if ((i % 2) != (j % 2))
                r(i, j) *= dephasing;

    const double retrieved = r.trace().real();
    if (!(retrieved > std::numeric_limits<double>::min()))
        throw NoRetrievalError("memory channel retrieves nothing");
    r /= retrieved;

    Eigen::Matrix2cd flying = Eigen::Matrix2cd::Zero();
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            flying(a, b) = r(2 * a, 2 * b) + r(2 * a + 1, 2 * b + 1);
    const double pb = noise_weight(p, eta);
    Eigen::Matrix4cd out = (1.0 - pb) * r + pb * kron(flying, 0.5 * Eigen::Matrix2cd::Identity());
    return TwoQubitDensity(hermitize(out));
}

Eigen::Matrix4cd channel_choi(const MemoryChannelParams& p, const EtaOfT& eta)
{
    validate(p);
    const Eigen::Matrix2cd k = rail_operator(p, eta);
    const double dephasing = std::exp(-0.5 * p.phase_jitter_sigma * p.phase_jitter_sigma);
    const double pb = noise_weight(p, eta);
    const double scale = 0.5 * (std::norm(k(0, 0)) + std::norm(k(1, 1)));
    if (!(scale > 0.0))
        throw NoRetrievalError("memory channel retrieves nothing");

    Eigen::Matrix4cd choi = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            Eigen::Matrix2cd unit = Eigen::Matrix2cd::Zero();
            unit(i, j) = 1.0;
            Eigen::Matrix2cd img = k * unit * k.adjoint();
            img(0, 1) *= dephasing;
            img(1, 0) *= dephasing;
            const cplx tr = img.trace();
            Eigen::Matrix2cd mapped = (1.0 - pb) * img + 0.5 * pb * tr * Eigen::Matrix2cd::Identity();
            choi.block<2, 2>(2 * i, 2 * j) = mapped / scale;
        }
    return choi;
}

double fidelity(const PolarizationState& psi_in, const QubitDensity& rho_out)
{
    const cplx f = psi_in.jones().dot(rho_out.matrix() * psi_in.jones());
    return f.real();
}

const std::array<std::pair<const char*, PolarizationState>, 6>& six_states()
{
    static const std::array<std::pair<const char*, PolarizationState>, 6> states{{
        {"H", PolarizationState::H()},
        {"V", PolarizationState::V()},
        {"+", PolarizationState::plus()},
        {"-", PolarizationState::minus()},
        {"R", PolarizationState::R()},
        {"L", PolarizationState::L()},
    }};
    return states;
}

SixStateResult six_state_battery(const MemoryChannelParams& params, const EtaOfT& eta)
{
    SixStateResult result;
    for (const auto& [label, state] : six_states()) {
        const auto out = memory_channel(QubitDensity::pure(state), params, eta);
        result.states.push_back({label, fidelity(state, out)});
        result.average += result.states.back().fidelity;
    }
    result.average /= static_cast<double>(result.states.size());
    return result;
}

TwoQubitDensity bell_state()
{
    Eigen::Vector4cd psi = Eigen::Vector4cd::Zero();
    psi(1) = 1.0 / std::sqrt(2.0); // |H>_1 |V>_2
    psi(2) = 1.0 / std::sqrt(2.0); // |V>_1 |H>_2
    return TwoQubitDensity(psi * psi.adjoint());
}

TwoQubitDensity werner_state(double visibility)
{
    if (!std::isfinite(visibility))
        throw InputError("Werner visibility must be finite");
    return TwoQubitDensity(visibility * bell_state().matrix() +
                           (1.0 - visibility) * 0.25 * Eigen::Matrix4cd::Identity());
}

TwoQubitDensity product_state(const PolarizationState& flying, const PolarizationState& signal)
{
    const Eigen::Vector4cd v = kron(flying.jones(), signal.jones());
    return TwoQubitDensity(v * v.adjoint());
}

double correlation_E(const TwoQubitDensity& rho, double theta1, double theta2,
                     AnalyzerConvention convention)
{
    const double flying_angle = convention == AnalyzerConvention::minus ? -theta1 : theta1;
    const Eigen::Matrix4cd observable = kron(analyser(flying_angle), analyser(theta2));
    return (rho.matrix() * observable).trace().real();
}

ChshAngles standard_chsh_angles()
{
    const double deg = kPi / 180.0;
    return ChshAngles{0.0, 45.0 * deg, 22.5 * deg, 67.5 * deg};
}

double chsh_S(const TwoQubitDensity& rho, const ChshAngles& a, AnalyzerConvention convention)
{
    const double s = correlation_E(rho, a.theta1, a.theta2, convention) -
                     correlation_E(rho, a.theta1, a.theta2_prime, convention) +
                     correlation_E(rho, a.theta1_prime, a.theta2, convention) +
                     correlation_E(rho, a.theta1_prime, a.theta2_prime, convention);
    return std::abs(s);
}

std::vector<double> correlation_curve(const TwoQubitDensity& rho, FlyingBasis basis,
                                      std::span<const double> thetas)
{
    const auto flying = basis == FlyingBasis::H ? PolarizationState::H() : PolarizationState::plus();
    std::vector<double> curve;
    curve.reserve(thetas.size());
    for (const double theta : thetas) {
        const Eigen::Vector4cd v = kron(flying.jones(), PolarizationState::linear(theta).jones());
        curve.push_back(v.dot(rho.matrix() * v).real());
    }
    const double peak = curve.empty() ? 0.0 : *std::max_element(curve.begin(), curve.end());
    if (!(peak > 0.0))
        throw ModelError("no coincidences in the correlation curve");
    for (auto& c : curve)
        c /= peak;
    return curve;
}

double curve_visibility(std::span<const double> curve)
{
    if (curve.empty())
        throw InputError("empty curve");
    const auto [lo, hi] = std::minmax_element(curve.begin(), curve.end());
    return (*hi - *lo) / (*hi + *lo);
}

std::vector<double> half_turn_sweep(std::size_t n)
{
    if (n < 2)
        throw InputError("sweep needs at least two points");
    std::vector<double> t(n);
    for (std::size_t i = 0; i < n; ++i)
        t[i] = kPi * static_cast<double>(i) / static_cast<double>(n - 1);
    return t;
}

double fit_background(double target_visibility, MemoryChannelParams params, const EtaOfT& eta,
                      double source_visibility)
{
    if (!(target_visibility > 0.0 && target_visibility < 1.0))
        throw InputError("target visibility must lie in (0, 1)");
    const auto source = werner_state(source_visibility);
    const auto sweep = half_turn_sweep();
    auto visibility_at = [&](double b) {
        params.background = b;
        const auto stored = memory_channel_on_signal(source, params, eta);
        return curve_visibility(correlation_curve(stored, FlyingBasis::plus, sweep));
    };
    auto excess = [&](double b) { return visibility_at(b) - target_visibility; };

    const double at_zero = excess(0.0);
    if (at_zero < 0.0)
        throw FitError("curve visibility is below target even without background");
    if (at_zero == 0.0)
        return 0.0;
    double hi = 1e-3;
    while (excess(hi) > 0.0) {
        hi *= 2.0;
        if (hi > 1e6)
            throw FitError("could not bracket the background ratio");
    }
    std::uintmax_t iterations = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        excess, 0.0, hi, boost::math::tools::eps_tolerance<double>(48), iterations);
    return 0.5 * (a + b);
}

void validate(const PairStatistics& s)
{
    if (!(s.p1 >= 0.0 && s.p3 >= 0.0 && s.p13 >= 0.0))
        throw InputError("probabilities must be non-negative");
    if (s.p13 > std::min(s.p1, s.p3) + 1e-12)
        throw InputError("coincidence probability exceeds a singles probability");
}

double g13(const PairStatistics& s)
{
    validate(s);
    if (!(s.p1 > 0.0) || !(s.p3 > 0.0))
        throw UndefinedError("g13 undefined with zero singles probability");
    return s.p13 / (s.p1 * s.p3);
}

double alpha_quality(double g13_value)
{
    if (std::isnan(g13_value) || g13_value <= 1.0)
        throw ClassicalRegimeError("alpha requires g13 > 1");
    return 4.0 / (g13_value - 1.0);
}

double g13_decay_model(double t, double g0, const EtaOfT& eta)
{
    if (!(g0 > 1.0))
        throw InputError("g0 must exceed 1");
    if (!eta)
        return g0;
    const double ref = eta(0.0);
    if (!(ref > 0.0))
        throw NoRetrievalError("zero memory efficiency at t = 0");
    return 1.0 + (g0 - 1.0) * eta(t) / ref;
}

double decay_tau_for_crossing(double g0, double threshold, double t_cross, eit::DecayShape shape)
{
    if (!(g0 > threshold && threshold > 1.0))
        throw InputError("need g0 > threshold > 1");
    if (!(t_cross > 0.0))
        throw InputError("crossing time must be positive");
    const double log_ratio = std::log((g0 - 1.0) / (threshold - 1.0));
    return shape == eit::DecayShape::exponential ? t_cross / log_ratio : t_cross / std::sqrt(log_ratio);
}

std::optional<double> crossing_time(double g0, double threshold, const EtaOfT& eta, double t_max)
{
    auto excess = [&](double t) { return g13_decay_model(t, g0, eta) - threshold; };
    if (excess(0.0) <= 0.0)
        return 0.0;
    if (excess(t_max) > 0.0)
        return std::nullopt;
    std::uintmax_t iterations = 200;
    const auto [a, b] = boost::math::tools::toms748_solve(
        excess, 0.0, t_max, boost::math::tools::eps_tolerance<double>(48), iterations);
    return 0.5 * (a + b);
}

} // namespace qisim::qubit

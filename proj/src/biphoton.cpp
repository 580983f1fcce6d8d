#include "qisim/biphoton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qisim/errors.hpp"
#include "qisim/units.hpp"

namespace qisim::biphoton {

namespace {

constexpr double kMaxEdgeMass = 0.01;
constexpr double kVisibilitySlack = 1e-9;

// Row k, column j: exp(-i d_j t_k) dd / sqrt(2 pi).
Eigen::MatrixXcd fourier_matrix(const FrequencyGrid& f, const TimeGrid& t)
{
    const auto nt = static_cast<Eigen::Index>(t.size());
    const auto nf = static_cast<Eigen::Index>(f.size());
    const double scale = f.spacing() / std::sqrt(kTwoPi);
    Eigen::MatrixXcd m(nt, nf);
    for (Eigen::Index j = 0; j < nf; ++j) {
        const double d = f.detuning(static_cast<std::size_t>(j));
        for (Eigen::Index k = 0; k < nt; ++k) {
            const double phase = -d * t.time(static_cast<std::size_t>(k));
            m(k, j) = std::polar(scale, phase);
        }
    }
    return m;
}

void check_time_resolution(const JointSpectralAmplitude& jsa, const TimeGrid& t)
{
    const auto& f = jsa.grid();
    const double edge = edge_mass_fraction(jsa);
    if (edge >= kMaxEdgeMass)
        throw ResolutionError("aliasing: " + std::to_string(100.0 * edge) +
                              "% of the spectral mass sits in the outer 10% of the grid");
    if (t.spacing() * rad_to_hz(f.span()) > 1.0)
        throw ResolutionError("time grid undersamples the frequency span");
    if (t.t_max() - t.t_min() >= kTwoPi / f.spacing())
        throw ResolutionError("time window exceeds the period set by the frequency spacing");
}

Eigen::MatrixXd blur(const Eigen::MatrixXd& density, double dt, double jitter_sigma)
{
    const auto half = static_cast<Eigen::Index>(std::ceil(4.0 * jitter_sigma / dt));
    Eigen::VectorXd kernel(2 * half + 1);
    for (Eigen::Index i = -half; i <= half; ++i) {
        const double x = static_cast<double>(i) * dt / jitter_sigma;
        kernel(i + half) = std::exp(-0.5 * x * x);
    }
    kernel /= kernel.sum();

    const Eigen::Index n = density.rows();
    auto convolve_rows = [&](const Eigen::MatrixXd& in) {
        Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index r = 0; r < n; ++r)
            for (Eigen::Index c = 0; c < n; ++c)
                for (Eigen::Index k = -half; k <= half; ++k) {
                    const Eigen::Index src = r + k;
                    if (src >= 0 && src < n)
                        out(r, c) += kernel(k + half) * in(src, c);
                }
        return out;
    };
    Eigen::MatrixXd once = convolve_rows(density);
    Eigen::MatrixXd twice = convolve_rows(once.transpose());
    return twice.transpose();
}

JointTimeDistribution to_distribution(const TimeGrid& t, Eigen::MatrixXd density, double jitter_sigma)
{
    if (jitter_sigma < 0.0 || !std::isfinite(jitter_sigma))
        throw InputError("jitter sigma must be finite and non-negative");
    if (jitter_sigma > 0.0)
        density = blur(density, t.spacing(), jitter_sigma);
    const double peak = density.maxCoeff();
    if (!(peak > 0.0))
        throw ModelError("two-photon density vanishes on the time grid");
    density /= peak;
    return JointTimeDistribution(t, std::move(density));
}

} // namespace

ReducedFrequencyState::ReducedFrequencyState(FrequencyGrid grid, Eigen::MatrixXcd matrix)
    : grid_(grid), matrix_(std::move(matrix))
{
}

double ReducedFrequencyState::trace() const { return matrix_.trace().real(); }

double ReducedFrequencyState::purity() const
{
    // Hermitian, so Tr(rho^2) is the squared Frobenius norm.
    return matrix_.squaredNorm();
}

TimeGrid::TimeGrid(double t_min, double t_max, std::size_t n_points)
    : t_min_(t_min), t_max_(t_max), n_(n_points)
{
    if (!std::isfinite(t_min) || !std::isfinite(t_max) || t_max <= t_min)
        throw InputError("time grid needs finite t_min < t_max");
    if (n_points < 2)
        throw InputError("time grid needs at least two points");
}

JointTimeDistribution::JointTimeDistribution(TimeGrid grid, Eigen::MatrixXd density)
    : grid_(grid), density_(std::move(density))
{
}

TimeGrid default_time_grid(double gamma, std::size_t n_points, double span_factor)
{
    if (!(gamma > 0.0))
        throw InputError("linewidth must be positive");
    const double length = span_factor / gamma;
    return TimeGrid(-0.2 * length, 0.8 * length, n_points);
}

TimeGrid conjugate_time_grid(const FrequencyGrid& grid)
{
    const auto n = grid.size();
    const double dt = kTwoPi / (static_cast<double>(n) * grid.spacing());
    const double t_min = -0.5 * static_cast<double>(n) * dt;
    return TimeGrid(t_min, t_min + static_cast<double>(n - 1) * dt, n);
}

ReducedFrequencyState reduced_state(const JointSpectralAmplitude& jsa)
{
    if (!jsa.normalized() || std::abs(jsa.norm_squared() - 1.0) > 1e-6)
        throw ContractError("reduced_state requires a normalised JSA");
    const double dd = jsa.grid().spacing();
    const auto& a = jsa.amplitude();
    // rho(d2, d4) = sum_1 psi(d1, d2) psi*(d1, d4) dd, times dd for the box basis.
    Eigen::MatrixXcd rho = (a.transpose() * a.conjugate()) * (dd * dd);
    return ReducedFrequencyState(jsa.grid(), std::move(rho));
}

double visibility(const JointSpectralAmplitude& jsa)
{
    const auto rho = reduced_state(jsa);
    const double tr = rho.trace();
    const double v = rho.purity() / (tr * tr);
    if (v < -kVisibilitySlack || v > 1.0 + kVisibilitySlack)
        throw ResolutionError("visibility " + std::to_string(v) + " outside [0, 1]; grid too coarse");
    return std::clamp(v, 0.0, 1.0);
}

Eigen::VectorXd schmidt_coefficients(const JointSpectralAmplitude& jsa)
{
    Eigen::BDCSVD<Eigen::MatrixXcd> svd(jsa.amplitude());
    return svd.singularValues();
}

double edge_mass_fraction(const JointSpectralAmplitude& jsa, double edge_fraction)
{
    const auto n = static_cast<Eigen::Index>(jsa.grid().size());
    const auto per_side = static_cast<Eigen::Index>(
        std::ceil(0.5 * edge_fraction * static_cast<double>(n)));
    auto in_edge = [&](Eigen::Index i) { return i < per_side || i >= n - per_side; };

    const auto& a = jsa.amplitude();
    double edge = 0.0;
    double total = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) {
            const double w = std::norm(a(i, j));
            total += w;
            if (in_edge(i) || in_edge(j))
                edge += w;
        }
    return total > 0.0 ? edge / total : 0.0;
}

Eigen::MatrixXcd time_domain(const JointSpectralAmplitude& jsa, const TimeGrid& t_grid)
{
    check_time_resolution(jsa, t_grid);
    const Eigen::MatrixXcd f = fourier_matrix(jsa.grid(), t_grid);
    return f * jsa.amplitude() * f.transpose();
}

JointTimeDistribution joint_time_distribution(const JointSpectralAmplitude& jsa,
                                              const TimeGrid& t_grid, double jitter_sigma)
{
    return post_storage_distribution(jsa, SignalFilter{}, t_grid, jitter_sigma);
}

JointTimeDistribution post_storage_distribution(const JointSpectralAmplitude& jsa,
                                                const SignalFilter& filter,
                                                const TimeGrid& t_grid, double jitter_sigma)
{
    Eigen::MatrixXcd psi_t;
    if (filter) {
        const auto& grid = jsa.grid();
        Eigen::MatrixXcd filtered = jsa.amplitude();
        for (Eigen::Index j = 0; j < filtered.cols(); ++j)
            filtered.col(j) *= filter(grid.detuning(static_cast<std::size_t>(j)));
        psi_t = time_domain(JointSpectralAmplitude(grid, std::move(filtered), false), t_grid);
    } else {
        psi_t = time_domain(jsa, t_grid);
    }
    return to_distribution(t_grid, psi_t.cwiseAbs2(), jitter_sigma);
}

double continuous_pump_amplitude(double gamma, double t1, double t2)
{
    return std::exp(-0.5 * gamma * std::abs(t1 - t2));
}

double short_pump_amplitude(double gamma, double t1, double t2)
{
    if (t1 < 0.0 || t2 < 0.0)
        return 0.0;
    return std::exp(-0.5 * gamma * t1) * std::exp(-0.5 * gamma * t2);
}

JointTimeDistribution continuous_pump_distribution(double gamma, const TimeGrid& t_grid)
{
    const auto n = static_cast<Eigen::Index>(t_grid.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
            const double a = continuous_pump_amplitude(gamma, t_grid.time(static_cast<std::size_t>(r)),
                                                       t_grid.time(static_cast<std::size_t>(c)));
            d(r, c) = a * a;
        }
    return to_distribution(t_grid, std::move(d), 0.0);
}

JointTimeDistribution short_pump_distribution(double gamma, const TimeGrid& t_grid)
{
    const auto n = static_cast<Eigen::Index>(t_grid.size());
    Eigen::MatrixXd d(n, n);
    for (Eigen::Index c = 0; c < n; ++c)
        for (Eigen::Index r = 0; r < n; ++r) {
            const double a = short_pump_amplitude(gamma, t_grid.time(static_cast<std::size_t>(r)),
                                                  t_grid.time(static_cast<std::size_t>(c)));
            d(r, c) = a * a;
        }
    return to_distribution(t_grid, std::move(d), 0.0);
}

double time_correlation(const JointTimeDistribution& dist)
{
    const auto& d = dist.density();
    const auto& g = dist.grid();
    const auto n = d.rows();
    Eigen::VectorXd t(n);
    for (Eigen::Index i = 0; i < n; ++i)
        t(i) = g.time(static_cast<std::size_t>(i));

    const double total = d.sum();
    if (!(total > 0.0))
        throw ModelError("empty distribution");
    const Eigen::VectorXd row_mass = d.rowwise().sum();
    const Eigen::VectorXd col_mass = d.colwise().sum().transpose();
    const double m1 = row_mass.dot(t) / total;
    const double m2 = col_mass.dot(t) / total;
    const Eigen::VectorXd c1 = t.array() - m1;
    const Eigen::VectorXd c2 = t.array() - m2;
    const double cov = c1.dot(d * c2) / total;
    const double v1 = row_mass.dot(c1.cwiseAbs2()) / total;
    const double v2 = col_mass.dot(c2.cwiseAbs2()) / total;
    return cov / std::sqrt(v1 * v2);
}

} // namespace qisim::biphoton

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

#include "oracles.hpp"
#include "qisim/errors.hpp"
#include "qisim/spectral.hpp"
#include "qisim/units.hpp"

using namespace qisim;
using namespace qisim::spectral;

namespace {
const double kGamma = hz_to_rad(5e6);
}

TEST_CASE("cavity response on resonance has magnitude 2/gamma and phase -pi/2")
{
    const CavityLine line(kGamma);
    const auto r = cavity_response(0.0, line);
    CHECK(std::abs(r) == doctest::Approx(2.0 / kGamma).epsilon(1e-14));
    CHECK(std::arg(r) == doctest::Approx(-kPi / 2).epsilon(1e-14));
}

TEST_CASE("cavity response halves its intensity at +-gamma/2 and is even in magnitude")
{
    const CavityLine line(kGamma);
    const double peak = std::norm(cavity_response(0.0, line));
    CHECK(std::norm(cavity_response(0.5 * kGamma, line)) == doctest::Approx(0.5 * peak).epsilon(1e-13));
    CHECK(std::norm(cavity_response(-0.5 * kGamma, line)) == doctest::Approx(0.5 * peak).epsilon(1e-13));

    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(-50.0, 50.0);
    for (int i = 0; i < 100; ++i) {
        const double d = u(rng) * kGamma;
        CHECK(std::abs(cavity_response(d, line)) == doctest::Approx(std::abs(cavity_response(-d, line))));
    }
}

TEST_CASE("cavity response rejects bad input")
{
    CHECK_THROWS_AS(CavityLine(0.0), InputError);
    CHECK_THROWS_AS(CavityLine(-1.0), InputError);
    CHECK_THROWS_AS(cavity_response(std::nan(""), CavityLine(kGamma)), InputError);
    CHECK_THROWS_AS(cavity_response(INFINITY, CavityLine(kGamma)), InputError);
}

TEST_CASE("Lorentzian intensity integrates to 2 pi / gamma")
{
    const CavityLine line(kGamma);
    auto intensity = [&](double d) { return std::norm(cavity_response(d, line)); };
    // Truncated integral has the closed form (4/gamma) atan(W / gamma) for span W.
    for (double factor : {20.0, 64.0, 200.0}) {
        const FrequencyGrid grid(factor * kGamma, 4096);
        double sum = 0.0;
        for (std::size_t i = 0; i < grid.size(); ++i)
            sum += intensity(grid.detuning(i)) * grid.spacing();
        const double truncated = 4.0 / kGamma * std::atan(factor);
        CHECK(sum == doctest::Approx(truncated).epsilon(2e-3));
    }
    // Within 1% of the full-line value once the span reaches ~64 gamma.
    const FrequencyGrid wide(64.0 * kGamma, 4096);
    double sum = 0.0;
    for (std::size_t i = 0; i < wide.size(); ++i)
        sum += intensity(wide.detuning(i)) * wide.spacing();
    CHECK(sum == doctest::Approx(kTwoPi / kGamma).epsilon(0.01));
}

TEST_CASE("gaussian pump amplitude: peak, width, normalisation")
{
    const double sigma = hz_to_rad(12.5e6);
    const auto pump = PumpSpectrum::gaussian(sigma);
    CHECK(pump_amplitude(0.0, pump) == doctest::Approx(1.0 / (std::sqrt(kTwoPi) * sigma)).epsilon(1e-15));
    CHECK(pump_amplitude(sigma, pump) / pump_amplitude(0.0, pump) ==
          doctest::Approx(std::exp(-0.5)).epsilon(1e-15));
    const double integral = testing::midpoint_integral(
        [&](double w) { return pump_amplitude(w, pump); }, -6.0 * sigma, 6.0 * sigma, 4000);
    CHECK(std::abs(integral - 1.0) < 1e-6);
}

TEST_CASE("pump limits")
{
    CHECK(pump_amplitude(123.0, PumpSpectrum::flat_limit()) == 1.0);
    CHECK_THROWS_AS(pump_amplitude(0.0, PumpSpectrum::delta_limit()), UnsupportedKindError);
    CHECK_THROWS_AS(PumpSpectrum::gaussian(0.0), InputError);
}

TEST_CASE("pulse duration to pump bandwidth")
{
    // sqrt(2 ln 2) / (pi * 30 ns) = 12.492708... MHz; / (pi * 100 ns) = 3.747812... MHz
    CHECK(rad_to_hz(sigma_from_pulse_duration(30e-9)) == doctest::Approx(12.4927083e6).epsilon(1e-7));
    CHECK(rad_to_hz(sigma_from_pulse_duration(100e-9)) == doctest::Approx(3.74781250e6).epsilon(1e-7));
    CHECK(sigma_from_pulse_duration(1.0) < hz_to_rad(1.0));
    CHECK(sigma_from_pulse_duration(1e3) < sigma_from_pulse_duration(1.0));
    CHECK_THROWS_AS(sigma_from_pulse_duration(0.0), InputError);
    CHECK_THROWS_AS(sigma_from_pulse_duration(-1e-9), InputError);
}

TEST_CASE("frequency grid invariants")
{
    CHECK_THROWS_AS(FrequencyGrid(1.0, 6), InputError);
    CHECK_THROWS_AS(FrequencyGrid(1.0, 9), InputError);
    CHECK_THROWS_AS(FrequencyGrid(0.0, 8), InputError);
    const FrequencyGrid g(10.0, 8);
    CHECK(g.spacing() == doctest::Approx(10.0 / 7.0));
    CHECK(g.detuning(0) == doctest::Approx(-5.0));
    CHECK(g.detuning(7) == doctest::Approx(5.0));
    CHECK(g.detuning(3) == doctest::Approx(-g.detuning(4)));
}

TEST_CASE("flat-limit JSA factorises and has rank one")
{
    const CavityLine line(kGamma);
    const FrequencyGrid grid(40.0 * kGamma, 128);
    const auto jsa = build_jsa(grid, line, PumpSpectrum::flat_limit());
    const auto& a = jsa.amplitude();
    const Eigen::VectorXcd f = a.col(0) / a(0, 0);
    const Eigen::MatrixXcd outer = f * a.row(0);
    CHECK((a - outer).cwiseAbs().maxCoeff() < 1e-12 * a.cwiseAbs().maxCoeff());

    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const auto s = svd.singularValues();
    CHECK(s(1) < 1e-10 * s(0));
}

TEST_CASE("JSA is exchange symmetric and L2 normalised")
{
    const CavityLine line(kGamma);
    for (const auto& pump : {PumpSpectrum::gaussian(hz_to_rad(12.5e6)),
                             PumpSpectrum::gaussian(hz_to_rad(3.7e6)), PumpSpectrum::flat_limit()}) {
        const auto grid = default_grid(line, pump, 128);
        const auto jsa = build_jsa(grid, line, pump);
        const auto& a = jsa.amplitude();
        CHECK(a == a.transpose());
        CHECK(jsa.normalized());
        CHECK(std::abs(jsa.norm_squared() - 1.0) < 1e-9);
    }
}

TEST_CASE("JSA construction rejects unresolvable grids")
{
    const CavityLine line(kGamma);
    CHECK_THROWS_AS(build_jsa(FrequencyGrid(6.0 * kGamma, 64), line, PumpSpectrum::flat_limit()),
                    ResolutionError);
    // +-4 gamma passes the coverage check but leaves ~4% of the line outside.
    CHECK_THROWS_AS(build_jsa(FrequencyGrid(8.0 * kGamma, 64), line, PumpSpectrum::flat_limit()),
                    ResolutionError);
    const double sigma = hz_to_rad(100e6);
    CHECK_THROWS_AS(build_jsa(FrequencyGrid(40.0 * kGamma, 64), line, PumpSpectrum::gaussian(sigma)),
                    ResolutionError);
    CHECK_THROWS_AS(build_jsa(FrequencyGrid(40.0 * kGamma, 64), line, PumpSpectrum::delta_limit()),
                    UnsupportedKindError);
    CHECK(lorentzian_tail_fraction(20.0 * kGamma, kGamma) < 0.01);
}

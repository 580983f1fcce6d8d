// One pass/fail line per acceptance criterion; exits nonzero if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "../unit/oracles.hpp"
#include "qisim/biphoton.hpp"
#include "qisim/cli/commands.hpp"
#include "qisim/cli/config.hpp"
#include "qisim/cli/output.hpp"
#include "qisim/eit.hpp"
#include "qisim/qubit.hpp"
#include "qisim/spectral.hpp"
#include "qisim/units.hpp"

using namespace qisim;
namespace fs = std::filesystem;

namespace {

// Tolerances.
constexpr double kVis125 = 0.97, kVis125Tol = 0.01;
constexpr double kVis37 = 0.80, kVis37Tol = 0.02;
constexpr double kVisSeconds = 5.0;
constexpr double kOracleRel = 1e-6;
constexpr double kOracleSeconds = 10.0;
constexpr int kOraclePairs = 5;
constexpr double kFlatL2 = 1e-3;
constexpr double kContinuousAbs = 1e-12;
constexpr double kRidgeLong = 0.3;
constexpr double kRidgeShort = 0.15;
constexpr double kWindowHz = 5.5e6, kWindowRel = 0.10;
constexpr double kDelay = 200e-9, kDelayRel = 0.10;
constexpr double kDbp = 7.0, kDbpRel = 0.15;
constexpr double kOpaqueRel = 1e-9;
constexpr double kLength = 4e-3;
constexpr double kVg = 2e4, kVgRel = 0.10;
constexpr double kStateTol = 0.04;
constexpr double kAverage = 0.924, kAverageTol = 0.03;
constexpr double kTsirelsonAbs = 1e-9;
constexpr double kS1us = 2.28, kS1usTol = 0.17;
constexpr double kLowSource = 0.70;
constexpr double kCrossing = 2e-6, kCrossingRel = 0.10;
constexpr double kParsevalRel = 1e-6;
constexpr int kRandomStates = 1000;

const double kGamma = hz_to_rad(5e6);

int failures = 0;

void report(bool ok, const char* name, const std::string& detail)
{
    std::printf("[%s] %s: %s\n", ok ? "PASS" : "FAIL", name, detail.c_str());
    std::fflush(stdout);
    if (!ok)
        ++failures;
}

std::string fmt(const char* f, double a)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

spectral::JointSpectralAmplitude jsa_for(double sigma, double gamma = kGamma, std::size_t n = 512)
{
    const spectral::CavityLine line(gamma);
    const auto pump = spectral::PumpSpectrum::gaussian(sigma);
    return spectral::build_jsa(spectral::default_grid(line, pump, n), line, pump);
}

// Reference model shared by the qubit criteria.
struct QubitSetup {
    qubit::MemoryChannelParams params;
    qubit::EtaOfT eta;
};

QubitSetup qubit_setup()
{
    const auto config = cli::build_config({}, {});
    const auto model = cli::resolve_model(config);
    return {model.channel, model.eta()};
}

void visibility_criterion()
{
    const auto t0 = std::chrono::steady_clock::now();
    const double v1 = biphoton::visibility(jsa_for(hz_to_rad(12.5e6)));
    const double v2 = biphoton::visibility(jsa_for(hz_to_rad(3.7e6)));
    const double elapsed = seconds_since(t0);
    const bool ok = std::abs(v1 - kVis125) <= kVis125Tol && std::abs(v2 - kVis37) <= kVis37Tol &&
                    elapsed < kVisSeconds;
    report(ok, "visibility", "V(12.5 MHz)=" + fmt("%.5f", v1) + " V(3.7 MHz)=" + fmt("%.5f", v2) +
                                 " time=" + fmt("%.2f", elapsed) + " s");
}

void oracle_criterion()
{
    const auto t0 = std::chrono::steady_clock::now();
    std::mt19937_64 rng(97);
    std::uniform_real_distribution<double> ug(1e6, 10e6);
    std::uniform_real_distribution<double> ur(0.1, 10.0);
    double worst = 0.0;
    for (int k = 0; k < kOraclePairs; ++k) {
        const double gamma = hz_to_rad(ug(rng));
        const double sigma = ur(rng) * gamma;
        const auto jsa = jsa_for(sigma, gamma, 32);
        const auto sums = testing::fourfold_sums(jsa.amplitude(), jsa.grid().spacing());
        const double oracle = sums.xi / sums.kappa;
        worst = std::max(worst, std::abs(biphoton::visibility(jsa) - oracle) / oracle);
    }
    const double elapsed = seconds_since(t0);
    report(worst < kOracleRel && elapsed < kOracleSeconds, "oracle",
           "max relative deviation=" + fmt("%.3g", worst) + " over " + std::to_string(kOraclePairs) +
               " pairs, time=" + fmt("%.2f", elapsed) + " s");
}

void time_domain_criterion()
{
    // Short-pump limit on a wide grid: compare |psi| over t1, t2 >= 0.
    const spectral::CavityLine line(kGamma);
    const auto flat = spectral::build_jsa(spectral::FrequencyGrid(200.0 * kGamma, 1024), line,
                                          spectral::PumpSpectrum::flat_limit());
    const auto tg = biphoton::default_time_grid(kGamma);
    const Eigen::MatrixXd num = biphoton::joint_time_distribution(flat, tg).density().cwiseSqrt();
    double sn = 0.0, se = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i)
        for (std::size_t j = 0; j < tg.size(); ++j)
            if (tg.time(i) >= 0.0 && tg.time(j) >= 0.0) {
                const double e = biphoton::short_pump_amplitude(kGamma, tg.time(i), tg.time(j));
                sn += num(i, j) * num(i, j);
                se += e * e;
            }
    double l2 = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i)
        for (std::size_t j = 0; j < tg.size(); ++j)
            if (tg.time(i) >= 0.0 && tg.time(j) >= 0.0) {
                const double e = biphoton::short_pump_amplitude(kGamma, tg.time(i), tg.time(j));
                const double d = num(i, j) / std::sqrt(sn) - e / std::sqrt(se);
                l2 += d * d;
            }

    const auto cont = biphoton::continuous_pump_distribution(kGamma, tg).density();
    double cont_err = 0.0;
    for (std::size_t i = 0; i < tg.size(); ++i)
        for (std::size_t j = 0; j < tg.size(); ++j)
            cont_err = std::max(cont_err, std::abs(std::sqrt(cont(i, j)) -
                                                   std::exp(-0.5 * kGamma * std::abs(tg.time(i) - tg.time(j)))));

    const double r_long = biphoton::time_correlation(
        biphoton::joint_time_distribution(jsa_for(spectral::sigma_from_pulse_duration(100e-9)), tg));
    const double r_short = biphoton::time_correlation(
        biphoton::joint_time_distribution(jsa_for(spectral::sigma_from_pulse_duration(30e-9)), tg));

    const bool ok = l2 < kFlatL2 && cont_err <= kContinuousAbs && r_long > kRidgeLong && r_short < kRidgeShort;
    report(ok, "time-domain limits",
           "flat L2=" + fmt("%.3g", l2) + " continuous max error=" + fmt("%.3g", cont_err) +
               " pearson(100 ns)=" + fmt("%.4f", r_long) + " pearson(30 ns)=" + fmt("%.4f", r_short));
}

void eit_criterion()
{
    const auto fit = eit::fit_gamma_s(eit::reference_medium(), hz_to_rad(kWindowHz));
    auto medium = fit.medium;
    medium.length = kLength;
    const double window_hz = rad_to_hz(eit::window_fwhm(medium));
    const double delay = eit::group_delay(medium).seconds;
    const double dbp = kTwoPi * window_hz * delay;
    auto opaque = eit::reference_medium();
    opaque.rabi_control = 0.0;
    const double t0 = eit::intensity_transmission(0.0, opaque);
    const double vg = eit::group_velocity(medium);

    const bool ok = std::abs(window_hz - kWindowHz) <= kWindowRel * kWindowHz &&
                    std::abs(delay - kDelay) <= kDelayRel * kDelay && std::abs(dbp - kDbp) <= kDbpRel * kDbp &&
                    std::abs(t0 - std::exp(-55.0)) <= kOpaqueRel * std::exp(-55.0) &&
                    std::abs(vg - kVg) <= kVgRel * kVg;
    report(ok, "EIT characterisation",
           std::string("fit ") + (fit.converged ? "converged" : "did not converge") + " gamma_s=" +
               fmt("%.4g", rad_to_hz(medium.gamma_s)) + " Hz window=" + fmt("%.4g", window_hz) +
               " Hz delay=" + fmt("%.4g", delay) + " s 2pi*df*tau=" + fmt("%.3f", dbp) +
               " |t0|^2(control off)=" + fmt("%.6g", t0) + " v_g=" + fmt("%.4g", vg) + " m/s");
}

void fidelity_criterion(const QubitSetup& q)
{
    static const double reference[6] = {0.954, 0.989, 0.909, 0.889, 0.920, 0.881};
    auto params = q.params;
    params.storage_time = 200e-9;
    const auto battery = qubit::six_state_battery(params, q.eta);
    bool ok = std::abs(battery.average - kAverage) <= kAverageTol;
    std::string detail = "b=" + fmt("%.4f", q.params.background);
    for (std::size_t i = 0; i < 6; ++i) {
        const double f = battery.states[i].fidelity;
        const bool state_ok = std::abs(f - reference[i]) <= kStateTol;
        ok = ok && state_ok;
        detail += " " + battery.states[i].label + "=" + fmt("%.4f", f) + (state_ok ? "" : "(out)");
    }
    detail += " average=" + fmt("%.4f", battery.average);
    report(ok, "six-state fidelities", detail);
}

void chsh_criterion(const QubitSetup& q)
{
    const auto angles = qubit::standard_chsh_angles();
    const auto minus = qubit::AnalyzerConvention::minus;
    const double ideal = qubit::chsh_S(qubit::bell_state(), angles, minus);

    auto params = q.params;
    params.storage_time = 1e-6;
    const double s1 = qubit::chsh_S(qubit::memory_channel_on_signal(qubit::bell_state(), params, q.eta), angles, minus);

    const double low_src = qubit::chsh_S(qubit::werner_state(kLowSource), angles, minus);
    const double low_stored =
        qubit::chsh_S(qubit::memory_channel_on_signal(qubit::werner_state(kLowSource), params, q.eta), angles, minus);

    const bool ok = std::abs(ideal - 2.0 * std::sqrt(2.0)) <= kTsirelsonAbs && std::abs(s1 - kS1us) <= kS1usTol &&
                    low_src <= 2.0 && low_stored <= 2.0;
    report(ok, "CHSH", "ideal S=" + fmt("%.12f", ideal) + " S(1 us)=" + fmt("%.4f", s1) +
                           " S(V_src=0.70)=" + fmt("%.4f", low_src) + " stored=" + fmt("%.4f", low_stored));
}

void g13_criterion()
{
    const auto config = cli::build_config({}, {});
    const auto model = cli::resolve_model(config);
    const auto eta = model.eta();
    const auto crossing = qubit::crossing_time(config.channel.g0, 5.0, eta, 10e-6);
    const double alpha5 = qubit::alpha_quality(5.0);
    bool monotone = true;
    double previous = INFINITY;
    for (int k = 0; k <= 1000; ++k) {
        const double a = qubit::alpha_quality(1.001 + 0.1 * k);
        monotone = monotone && a < previous;
        previous = a;
    }
    const bool ok = crossing && std::abs(*crossing - kCrossing) <= kCrossingRel * kCrossing && alpha5 == 1.0 &&
                    monotone;
    report(ok, "g13 and alpha",
           "crossing=" + (crossing ? fmt("%.4g", *crossing) + " s" : std::string("none")) +
               " alpha(5)=" + fmt("%.17g", alpha5) + " monotone=" + (monotone ? "yes" : "no"));
}

bool same_outputs(const fs::path& a, const fs::path& b, std::size_t& count)
{
    auto read = [](const fs::path& p) {
        std::FILE* f = std::fopen(p.c_str(), "rb");
        std::string s;
        if (!f)
            return s;
        char buf[65536];
        std::size_t n;
        while ((n = std::fread(buf, 1, sizeof buf, f)) > 0)
            s.append(buf, n);
        std::fclose(f);
        return s;
    };
    count = 0;
    for (const auto& entry : fs::directory_iterator(a)) {
        if (entry.path().filename() == "manifest.json")
            continue;
        ++count;
        if (read(entry.path()) != read(b / entry.path().filename()))
            return false;
    }
    return count > 0;
}

void property_criterion()
{
    std::mt19937_64 rng(4242);
    std::normal_distribution<double> n01(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    double max_s = 0.0;
    for (int k = 0; k < kRandomStates; ++k) {
        Eigen::Matrix4cd g;
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j)
                g(i, j) = {n01(rng), n01(rng)};
        Eigen::Matrix4cd rho = g * g.adjoint();
        rho /= rho.trace().real();
        const qubit::TwoQubitDensity state(rho);
        const qubit::ChshAngles a{kPi * u(rng), kPi * u(rng), kPi * u(rng), kPi * u(rng)};
        max_s = std::max({max_s, std::abs(qubit::chsh_S(state, a, qubit::AnalyzerConvention::minus)),
                          std::abs(qubit::chsh_S(state, qubit::standard_chsh_angles(),
                                                 qubit::AnalyzerConvention::minus))});
    }
    const bool tsirelson = max_s <= 2.0 * std::sqrt(2.0) + kTsirelsonAbs;

    double min_eig = INFINITY;
    for (int k = 0; k < 200; ++k) {
        qubit::MemoryChannelParams p;
        p.eta_U = u(rng);
        p.eta_D = 0.05 + 0.95 * u(rng);
        p.phase_jitter_sigma = 3.0 * u(rng);
        p.background = 2.0 * u(rng);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(qubit::channel_choi(p));
        min_eig = std::min(min_eig, es.eigenvalues().minCoeff());
    }
    const bool cp = min_eig >= -1e-12;

    const auto jsa = jsa_for(hz_to_rad(3.7e6));
    const auto tg = biphoton::conjugate_time_grid(jsa.grid());
    const auto psi_t = biphoton::time_domain(jsa, tg);
    const double fn = jsa.amplitude().squaredNorm() * std::pow(jsa.grid().spacing(), 2);
    const double tn = psi_t.squaredNorm() * std::pow(tg.spacing(), 2);
    const double parseval = std::abs(tn - fn) / fn;

    const auto root = fs::temp_directory_path() / ("qisim_acceptance_" + std::to_string(::getpid()));
    fs::remove_all(root);
    auto config = cli::build_config({}, {{"output.formats", "csv, json"}});
    for (const char* run : {"a", "b"}) {
        cli::OutputWriter writer(root / run, config.output.formats);
        std::vector<cli::CheckResult> checks;
        cli::cmd_reproduce_all(config, writer, checks);
    }
    std::size_t files = 0;
    const bool deterministic = same_outputs(root / "a", root / "b", files);
    fs::remove_all(root);

    report(tsirelson && cp && parseval < kParsevalRel && deterministic, "property suites",
           "max |S| over random states=" + fmt("%.6f", max_s) + " min Choi eigenvalue=" + fmt("%.3g", min_eig) +
               " Parseval rel=" + fmt("%.3g", parseval) + " rerun identical=" + (deterministic ? "yes" : "no") +
               " (" + std::to_string(files) + " files)");
}

} // namespace

int main()
{
    visibility_criterion();
    oracle_criterion();
    time_domain_criterion();
    eit_criterion();
    const auto q = qubit_setup();
    fidelity_criterion(q);
    chsh_criterion(q);
    g13_criterion();
    property_criterion();
    std::printf("%d of 8 criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <unistd.h>

#include "qisim/biphoton.hpp"
#include "qisim/cli/commands.hpp"
#include "qisim/cli/config.hpp"
#include "qisim/cli/output.hpp"
#include "qisim/cli/plot.hpp"
#include "qisim/errors.hpp"
#include "qisim/units.hpp"

using namespace qisim;
using namespace qisim::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("qisim_unit_" + std::to_string(::getpid()) + "_" + name);
    fs::remove_all(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunConfig config_with(const KeyValues& overrides)
{
    return build_config({}, overrides);
}

std::size_t count_of(const std::string& text, const std::string& needle)
{
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1))
        ++n;
    return n;
}

} // namespace

TEST_CASE("config defaults")
{
    const auto c = config_with({});
    CHECK(c.source.gamma_hz == 5e6);
    CHECK(c.source.T_p_s.value() == 30e-9);
    CHECK_FALSE(c.source.sigma_hz.has_value());
    CHECK(c.eit.od == 55.0);
    CHECK_FALSE(c.eit.gamma_s_hz.has_value());
    CHECK(c.channel.phase_jitter_rad == doctest::Approx(kTwoPi / 28.0).epsilon(1e-15));
    CHECK(c.grids.n_freq == 512);
    CHECK(c.output.formats.size() == 3);
    CHECK(c.echo.find("eit.od = 55\n") != std::string::npos);
}

TEST_CASE("config text parsing")
{
    const auto kv = parse_key_values("# comment\n\neit.od = 40   # trailing\nsource.gamma_hz=6e6\n", "cfg");
    CHECK(kv.at("eit.od") == "40");
    CHECK(kv.at("source.gamma_hz") == "6e6");
    CHECK_THROWS_AS(parse_key_values("eit.od = 1\neit.od = 2\n", "cfg"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("just text\n", "cfg"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("eit.od =\n", "cfg"), ConfigError);
    CHECK(build_config(kv, {}).eit.od == 40.0);
    CHECK(build_config(kv, {{"eit.od", "12"}}).eit.od == 12.0);
}

TEST_CASE("config validation")
{
    CHECK_THROWS_AS(config_with({{"eit.od", "-1"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"eit.od", "abc"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"eit.od", "55x"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"no.such_key", "1"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"source.sigma_hz", "12.5e6"}}), ConfigError);
    CHECK(config_with({{"source.sigma_hz", "12.5e6"}, {"source.T_p_s", "none"}}).source.sigma_hz.value() == 12.5e6);
    CHECK_THROWS_AS(config_with({{"source.T_p_s", "none"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"output.formats", "csv, png"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"grids.n_freq", "511"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"channel.g0", "1"}}), ConfigError);
    CHECK_THROWS_AS(config_with({{"sweep.store_states", "H, X"}}), ConfigError);
    CHECK_THROWS_AS(parse_override("eit.od"), ConfigError);
    CHECK(parse_override("eit.od = 3").second == "3");
}

TEST_CASE("seed environment override")
{
    ::setenv("QISIM_SEED", "777", 1);
    const auto c = config_with({{"seed", "5"}});
    ::unsetenv("QISIM_SEED");
    CHECK(c.seed == 777);
    CHECK(config_with({{"seed", "5"}}).seed == 5);
    ::setenv("QISIM_SEED", "-3", 1);
    CHECK_THROWS_AS(config_with({}), ConfigError);
    ::unsetenv("QISIM_SEED");
}

TEST_CASE("number formatting round-trips")
{
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 1000; ++i) {
        const double v = u(rng) * std::pow(10.0, 40.0 * u(rng));
        CHECK(std::strtod(format_double(v).c_str(), nullptr) == v);
    }
}

TEST_CASE("sha256 known answer")
{
    CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("grid CSV round-trips exactly")
{
    const double gamma = hz_to_rad(5e6);
    const biphoton::TimeGrid tg(-2.0 / gamma, 8.0 / gamma, 40);
    std::mt19937_64 rng(8);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Eigen::MatrixXd d(40, 40);
    for (Eigen::Index i = 0; i < d.size(); ++i)
        d.data()[i] = u(rng);
    const biphoton::JointTimeDistribution dist(tg, d);
    const auto text = grid_csv(dist);
    CHECK(text.rfind("t1_ns,t2_ns,density\n", 0) == 0);
    CHECK(text.find('\r') == std::string::npos);
    const auto back = parse_grid_csv(text);
    CHECK(back.density == d);
    for (std::size_t i = 0; i < tg.size(); ++i)
        CHECK(back.t1_ns[i] == tg.time(i) * 1e9);
    CHECK_THROWS_AS(parse_grid_csv("a,b,c\n"), InputError);
}

TEST_CASE("writer records every file and honours the format list")
{
    const auto dir = scratch("writer");
    OutputWriter w(dir, {"csv", "json"});
    w.write("a.csv", "x\n1\n");
    w.write("b.json", "{}\n");
    w.write("c.svg", "<svg/>");
    w.write_manifest("test", "k = v\n");
    REQUIRE(w.outputs().size() == 2);
    CHECK_FALSE(fs::exists(dir / "c.svg"));
    for (const auto& r : w.outputs())
        CHECK(sha256_hex(slurp(dir / r.path)) == r.sha256);
    const auto manifest = Json::parse(slurp(dir / "manifest.json"));
    CHECK(manifest["outputs"].size() == 2);
    CHECK(manifest["input_hash"] == sha256_hex("k = v\n"));
    CHECK(manifest["artifact_version"] == kArtifactVersion);
    fs::remove_all(dir);
}

TEST_CASE("colormap")
{
    const auto lo = plot::colormap(0.0);
    const auto hi = plot::colormap(1.0);
    CHECK(lo == std::array<std::uint8_t, 3>{0x00, 0x00, 0x04});
    CHECK(hi == std::array<std::uint8_t, 3>{0xfc, 0xfd, 0xbf});
    CHECK(plot::colormap(-3.0) == lo);
    CHECK(plot::colormap(7.0) == hi);
    CHECK(plot::colormap(0.25) == plot::colormap(64.0 / 255.0));
    std::set<std::array<std::uint8_t, 3>> levels;
    for (int k = 0; k <= 10000; ++k)
        levels.insert(plot::colormap(k / 10000.0));
    CHECK(levels.size() <= 256);
    CHECK(levels.size() > 200);
}

TEST_CASE("heatmaps are downsampled to at most 128 cells per axis")
{
    Eigen::MatrixXd z = Eigen::MatrixXd::Random(300, 300).cwiseAbs();
    const auto svg = plot::heatmap(z, 0, 1, 0, 1, {"t", "x", "y", false});
    // one background and one frame rectangle besides the cells
    CHECK(count_of(svg, "<rect") <= 128 * 128 + 2);
    CHECK(count_of(svg, "<rect") > 100 * 100);
    const auto line = plot::line_chart({{"a", {1, 2, 3}, {1, 4, 9}, "#000000", false}}, {"t", "x", "y", false});
    CHECK(count_of(line, "<polyline") == 1);
}

TEST_CASE("visibility command sweep")
{
    const auto dir = scratch("vis");
    auto c = config_with({{"output.formats", "csv, json"}});
    OutputWriter w(dir, c.output.formats);
    CommandOptions o;
    o.sigma_hz = {12.5e6, 3.7e6, 1e9, -1.0};
    const auto s = cmd_visibility(c, o, w);
    REQUIRE(s["rows"].size() == 4);
    CHECK(std::abs(s["rows"][0]["visibility"].get<double>() - 0.97) < 0.01);
    CHECK(std::abs(s["rows"][1]["visibility"].get<double>() - 0.80) < 0.02);
    CHECK(s["rows"][2]["visibility"].get<double>() > 0.999);
    CHECK(s["rows"][3].contains("error"));
    CHECK(slurp(dir / "visibility.csv").rfind("sigma_hz,T_p_s,visibility\n", 0) == 0);

    CommandOptions bad;
    bad.sigma_hz = {-1.0, 0.0};
    CHECK_THROWS_AS(cmd_visibility(c, bad, w), ModelError);
    fs::remove_all(dir);
}

TEST_CASE("timedist command: ridge diagnostic and identity storage path")
{
    const auto dir = scratch("td");
    auto c = config_with({{"output.formats", "csv, json"}});
    const auto model = resolve_model(c);
    OutputWriter w(dir, c.output.formats);

    CommandOptions o;
    o.timedist_T_p_s = 100e-9;
    CHECK(cmd_timedist(c, model, o, w)["pearson"].get<double>() > 0.3);
    o.timedist_T_p_s = 30e-9;
    CHECK(cmd_timedist(c, model, o, w)["pearson"].get<double>() < 0.15);

    o.with_storage = true;
    o.identity_filter = true;
    cmd_timedist(c, model, o, w);
    CHECK(slurp(dir / "timedist_tp30ns.csv") == slurp(dir / "timedist_tp30ns_stored.csv"));
    fs::remove_all(dir);
}

TEST_CASE("timedist command: analytic continuous pump")
{
    const auto dir = scratch("tdc");
    auto c = config_with({{"output.formats", "json"}, {"source.pump_kind", "delta_limit"}, {"source.T_p_s", "none"}});
    OutputWriter w(dir, c.output.formats);
    const auto s = cmd_timedist(c, resolve_model(c), {}, w);
    CHECK(s["pump_kind"] == "delta_limit");
    CHECK(s["pearson"].get<double>() > 0.3);
    CommandOptions o;
    o.with_storage = true;
    CHECK_THROWS_AS(cmd_timedist(c, resolve_model(c), o, w), UnsupportedKindError);
    fs::remove_all(dir);
}

TEST_CASE("eit command report")
{
    const auto dir = scratch("eit");
    auto c = config_with({{"output.formats", "json"}});
    OutputWriter w(dir, c.output.formats);
    const auto s = cmd_eit(c, resolve_model(c), w);
    CHECK(s["control_off_min_transmission"].get<double>() == doctest::Approx(std::exp(-55.0)).epsilon(1e-9));
    CHECK(s["control_off_min_detuning_hz"].get<double>() == 0.0);
    CHECK(s["delay_bandwidth_product"].get<double>() ==
          doctest::Approx(kTwoPi * s["window_fwhm_hz"].get<double>() * s["group_delay_s"].get<double>()));
    CHECK(s["v_g"].get<double>() ==
          doctest::Approx(s["length_m"].get<double>() / s["group_delay_s"].get<double>()));
    const auto& st = s["storage"];
    CHECK(st["leakage_efficiency"].get<double>() + st["retrieval_efficiency"].get<double>() +
              st["absorbed_fraction"].get<double>() ==
          doctest::Approx(1.0).epsilon(1e-3));
    CHECK(st["leakage_efficiency"].get<double>() < st["stored_fraction"].get<double>());
    fs::remove_all(dir);
}

TEST_CASE("store command limits")
{
    const auto dir = scratch("store");
    OutputWriter w(dir, {"json"});
    auto ideal = config_with({{"channel.phase_jitter_rad", "0"}, {"channel.background_b", "0"}});
    const auto s = cmd_store(ideal, resolve_model(ideal), {}, w);
    for (const auto& [name, f] : s["rows"][0]["fidelity"].items())
        CHECK(f.get<double>() == doctest::Approx(1.0));

    auto jitter = config_with({{"channel.background_b", "0"}, {"channel.mc_samples", "2000"}});
    const auto j = cmd_store(jitter, resolve_model(jitter), {}, w);
    CHECK(j["rows"][0]["fidelity"]["H"].get<double>() == doctest::Approx(1.0));
    CHECK(j["rows"][0]["fidelity"]["V"].get<double>() == doctest::Approx(1.0));
    CHECK(j["rows"][0]["sampled_fidelity"]["H"].get<double>() == doctest::Approx(1.0));
    CHECK(j["rows"][0]["sampled_fidelity"]["plus"].get<double>() ==
          doctest::Approx(j["rows"][0]["fidelity"]["plus"].get<double>()).epsilon(0.01));

    CommandOptions subset;
    subset.states = {"R", "L"};
    const auto r = cmd_store(jitter, resolve_model(jitter), subset, w);
    CHECK(r["rows"][0]["fidelity"].size() == 2);
    fs::remove_all(dir);
}

TEST_CASE("bell command")
{
    const auto dir = scratch("bell");
    OutputWriter w(dir, {"json"});
    auto ideal = config_with({{"channel.phase_jitter_rad", "0"}, {"channel.background_b", "0"}});
    const auto s = cmd_bell(ideal, resolve_model(ideal), {}, w);
    for (const auto& row : s["rows"])
        CHECK(row["S"].get<double>() == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-12));

    auto weak = config_with({{"channel.phase_jitter_rad", "0"}, {"channel.background_b", "0"},
                             {"channel.V_src", "0.7"}});
    for (const auto& row : cmd_bell(weak, resolve_model(weak), {}, w)["rows"])
        CHECK_FALSE(row["violated"].get<bool>());

    auto fitted = config_with({});
    CommandOptions o;
    o.times_s = {1e-6};
    const auto f = cmd_bell(fitted, resolve_model(fitted), o, w);
    CHECK(f["curve_visibility_plus"].get<double>() == doctest::Approx(0.81).epsilon(1e-6));
    CHECK(std::abs(f["rows"][0]["S"].get<double>() - 2.28) <= 0.17);
    fs::remove_all(dir);
}

TEST_CASE("g13 command")
{
    const auto dir = scratch("g13");
    OutputWriter w(dir, {"json", "csv"});
    auto c = config_with({});
    const auto s = cmd_g13(c, resolve_model(c), {}, w);
    CHECK(s["crossing_time_s"].get<double>() == doctest::Approx(2e-6).epsilon(0.10));
    CHECK(s["alpha_at_crossing"].get<double>() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(s["alpha_at_zero"].get<double>() == doctest::Approx(4.0 / 19.0));
    const auto csv = slurp(dir / "g13.csv");
    CHECK(csv.rfind("t_s,g13,alpha\n0,20,", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("run_command exit codes")
{
    const auto dir = scratch("run");
    std::ostringstream log;
    auto c = config_with({{"output.directory", dir.string()}, {"output.formats", "json"}});
    CHECK(run_command("g13", c, {}, log) == kExitOk);
    CHECK(fs::exists(dir / "manifest.json"));
    CHECK(run_command("nonsense", c, {}, log) == kExitConfig);
    auto tight = config_with({{"output.directory", dir.string()}, {"output.formats", "json"},
                              {"fit.curve_visibility", "0.999"}});
    CHECK(run_command("store", tight, {}, log) == kExitModel);
    fs::remove_all(dir);
}

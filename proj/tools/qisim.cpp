#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qisim/cli/commands.hpp"
#include "qisim/cli/config.hpp"
#include "qisim/errors.hpp"

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Common& common)
{
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", common.config_path, "Config file (flat dotted keys)");
    sub->add_option("--set", common.overrides, "Override a config key: key=value")->take_all();
    sub->add_option("--out", common.out_dir, "Output directory (overrides output.directory)");
    return sub;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"qisim: biphoton source, EIT memory and polarisation-qubit simulator"};
    app.require_subcommand(1);
    Common common;
    qisim::cli::CommandOptions options;
    std::vector<double> tp_list;

    auto* vis = add_command(app, "visibility", "Interference visibility over a pump-bandwidth sweep", common);
    vis->add_option("--sigma-hz", options.sigma_hz, "Pump bandwidths (Hz)")->delimiter(',');
    vis->add_option("--tp", tp_list, "Pump pulse durations (s)")->delimiter(',');

    double tp = 0.0;
    double jitter = 0.0;
    auto* td = add_command(app, "timedist", "Joint detection-time distribution", common);
    auto* tp_opt = td->add_option("--tp", tp, "Pump pulse duration (s)");
    td->add_flag("--with-storage", options.with_storage, "Filter the signal photon through the EIT memory");
    td->add_flag("--identity-filter", options.identity_filter, "Use a unit filter on the storage path");
    auto* jitter_opt = td->add_option("--jitter", jitter, "Detector timing jitter sigma (s)");

    add_command(app, "eit", "EIT spectrum, window, delay and storage report", common);

    auto* store = add_command(app, "store", "Six-state storage fidelities", common);
    store->add_option("--states", options.states, "Subset of H,V,+,-,R,L")->delimiter(',');
    store->add_option("--times", options.times_s, "Storage times (s)")->delimiter(',');

    auto* bell = add_command(app, "bell", "CHSH value versus storage time", common);
    bell->add_option("--times", options.times_s, "Storage times (s)")->delimiter(',');

    auto* g13 = add_command(app, "g13", "Cross-correlation decay", common);
    g13->add_option("--times", options.times_s, "Evaluation times (s)")->delimiter(',');

    add_command(app, "reproduce-all", "Run every command and grade against reference values", common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qisim::cli::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    if (command == "visibility")
        options.T_p_s = tp_list;
    if (command == "timedist") {
        if (tp_opt->count() > 0)
            options.timedist_T_p_s = tp;
        if (jitter_opt->count() > 0)
            options.jitter_s = jitter;
    }

    qisim::cli::RunConfig config;
    try {
        auto overrides = common.overrides;
        if (!common.out_dir.empty())
            overrides.push_back("output.directory=" + common.out_dir);
        config = qisim::cli::load_config(common.config_path, overrides);
    } catch (const qisim::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return qisim::cli::kExitConfig;
    }
    return qisim::cli::run_command(command, config, options, std::cerr);
}

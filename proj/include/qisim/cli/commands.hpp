#pragma once

// Experiment commands. Each one computes its results, emits files through
// the shared writer and returns a JSON summary.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qisim/cli/config.hpp"
#include "qisim/cli/output.hpp"
#include "qisim/eit.hpp"
#include "qisim/qubit.hpp"

namespace qisim::cli {

using Json = nlohmann::ordered_json;

enum ExitCode : int {
    kExitOk = 0,
    kExitConfig = 2,
    kExitModel = 3,
    kExitCheck = 4,
};

// Physical model with every "fit" setting resolved.
struct Model {
    eit::EitMedium medium;
    bool gamma_s_fitted = false;
    bool gamma_s_converged = true;
    double window_target = 0.0; // rad/s
    eit::MemoryDecay decay;
    bool tau_fitted = false;
    qubit::MemoryChannelParams channel;
    bool background_fitted = false;
    double source_visibility = 1.0;

    qubit::EtaOfT eta() const;
};

Model resolve_model(const RunConfig& config);

struct CommandOptions {
    std::vector<double> sigma_hz;
    std::vector<double> T_p_s;
    std::optional<double> timedist_T_p_s;
    bool with_storage = false;
    bool identity_filter = false;
    std::optional<double> jitter_s;
    std::vector<std::string> states;
    std::vector<double> times_s;
};

Json cmd_visibility(const RunConfig& config, const CommandOptions& options, OutputWriter& writer);
Json cmd_timedist(const RunConfig& config, const Model& model, const CommandOptions& options,
                  OutputWriter& writer);
Json cmd_eit(const RunConfig& config, const Model& model, OutputWriter& writer);
Json cmd_store(const RunConfig& config, const Model& model, const CommandOptions& options,
               OutputWriter& writer);
Json cmd_bell(const RunConfig& config, const Model& model, const CommandOptions& options,
              OutputWriter& writer);
Json cmd_g13(const RunConfig& config, const Model& model, const CommandOptions& options,
             OutputWriter& writer);

struct CheckResult {
    std::string name;
    double value = 0.0;
    double target = 0.0;
    double tolerance = 0.0;
    std::string rule; // "abs", "rel", "below", "above", "true"
    bool passed = false;
};

// Runs every command on the configured sweeps and grades the results
// against the reference tolerances. `checks` receives every graded item.
Json cmd_reproduce_all(const RunConfig& config, OutputWriter& writer, std::vector<CheckResult>& checks);

// Full command dispatch including the manifest; returns the exit code.
// Diagnostics go to `log`.
int run_command(const std::string& command, const RunConfig& config, const CommandOptions& options,
                std::ostream& log);

} // namespace qisim::cli

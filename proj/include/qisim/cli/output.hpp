#pragma once

// File emission: CSV/JSON text, content hashes and the run manifest. All
// files of a run go through one OutputWriter so the manifest sees them all.

#include <cstdint>
#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "qisim/biphoton.hpp"

namespace qisim::cli {

inline constexpr const char* kArtifactVersion = "1.0.0";

// Shortest text that parses back to the same double (17 significant digits).
std::string format_double(double value);

std::string sha256_hex(std::string_view data);

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows);

// Long format: one row per cell, columns t1_ns, t2_ns, density.
std::string grid_csv(const biphoton::JointTimeDistribution& dist);

struct GridCsv {
    std::vector<double> t1_ns;
    std::vector<double> t2_ns;
    Eigen::MatrixXd density;
};

GridCsv parse_grid_csv(const std::string& text);

struct OutputRecord {
    std::string path; // relative to the output directory
    std::string sha256;
};

class OutputWriter {
public:
    OutputWriter(std::filesystem::path directory, std::vector<std::string> formats);

    const std::filesystem::path& directory() const { return directory_; }
    // Format is the file extension; disabled formats are silently skipped.
    bool enabled(const std::string& format) const;
    void write(const std::string& relative_path, const std::string& content);
    std::vector<OutputRecord> outputs() const;

    // manifest.json: config echo, version, timestamp, input hash, outputs.
    // SOURCE_DATE_EPOCH, when set, pins the timestamp.
    void write_manifest(const std::string& command, const std::string& config_echo);

private:
    std::filesystem::path directory_;
    std::vector<std::string> formats_;
    mutable std::mutex mutex_;
    std::vector<OutputRecord> records_;
};

} // namespace qisim::cli

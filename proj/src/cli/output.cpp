#include "qisim/cli/output.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>
#include <openssl/evp.h>

#include "qisim/errors.hpp"

namespace qisim::cli {

std::string format_double(double value)
{
    std::array<char, 32> buf{};
    std::snprintf(buf.data(), buf.size(), "%.17g", value);
    return buf.data();
}

std::string sha256_hex(std::string_view data)
{
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int length = 0;
    if (EVP_Digest(data.data(), data.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
        throw Error("SHA-256 computation failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(2 * length);
    for (unsigned int i = 0; i < length; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

std::string csv_table(const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& rows)
{
    std::string out;
    for (std::size_t i = 0; i < header.size(); ++i)
        out += (i ? "," : "") + header[i];
    out += '\n';
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            out += (i ? "," : "") + format_double(row[i]);
        out += '\n';
    }
    return out;
}

std::string grid_csv(const biphoton::JointTimeDistribution& dist)
{
    const auto& g = dist.grid();
    const auto& d = dist.density();
    std::string out = "t1_ns,t2_ns,density\n";
    out.reserve(out.size() + g.size() * g.size() * 64);
    for (std::size_t i = 0; i < g.size(); ++i) {
        const std::string t1 = format_double(g.time(i) * 1e9);
        for (std::size_t j = 0; j < g.size(); ++j) {
            out += t1;
            out += ',';
            out += format_double(g.time(j) * 1e9);
            out += ',';
            out += format_double(d(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
            out += '\n';
        }
    }
    return out;
}

GridCsv parse_grid_csv(const std::string& text)
{
    std::stringstream ss(text);
    std::string line;
    if (!std::getline(ss, line) || line != "t1_ns,t2_ns,density")
        throw InputError("grid CSV: unexpected header");

    auto parse = [](const std::string& s) {
        double v = 0.0;
        const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
        if (res.ec != std::errc() || res.ptr != s.data() + s.size())
            throw InputError("grid CSV: bad number '" + s + "'");
        return v;
    };

    std::vector<std::array<double, 3>> cells;
    while (std::getline(ss, line)) {
        std::array<double, 3> cell{};
        std::size_t start = 0;
        for (int k = 0; k < 3; ++k) {
            const auto comma = k < 2 ? line.find(',', start) : line.size();
            if (comma == std::string::npos)
                throw InputError("grid CSV: expected three columns");
            cell[k] = parse(line.substr(start, comma - start));
            start = comma + 1;
        }
        cells.push_back(cell);
    }

    GridCsv out;
    std::map<double, std::size_t> rows;
    std::map<double, std::size_t> cols;
    for (const auto& c : cells) {
        rows.emplace(c[0], 0);
        cols.emplace(c[1], 0);
    }
    if (rows.size() * cols.size() != cells.size())
        throw InputError("grid CSV: cells do not form a full grid");
    std::size_t k = 0;
    for (auto& [t, idx] : rows) {
        idx = k++;
        out.t1_ns.push_back(t);
    }
    k = 0;
    for (auto& [t, idx] : cols) {
        idx = k++;
        out.t2_ns.push_back(t);
    }
    out.density = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows.size()),
                                        static_cast<Eigen::Index>(cols.size()));
    for (const auto& c : cells)
        out.density(static_cast<Eigen::Index>(rows[c[0]]), static_cast<Eigen::Index>(cols[c[1]])) = c[2];
    return out;
}

OutputWriter::OutputWriter(std::filesystem::path directory, std::vector<std::string> formats)
    : directory_(std::move(directory)), formats_(std::move(formats))
{
}

bool OutputWriter::enabled(const std::string& format) const
{
    for (const auto& f : formats_)
        if (f == format)
            return true;
    return false;
}

void OutputWriter::write(const std::string& relative_path, const std::string& content)
{
    const auto ext = std::filesystem::path(relative_path).extension().string();
    if (ext.size() > 1 && !enabled(ext.substr(1)))
        return;

    std::lock_guard lock(mutex_);
    const auto full = directory_ / relative_path;
    std::filesystem::create_directories(full.parent_path());
    std::ofstream out(full, std::ios::binary | std::ios::trunc);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw Error("cannot write " + full.string());
    records_.push_back({relative_path, sha256_hex(content)});
}

std::vector<OutputRecord> OutputWriter::outputs() const
{
    std::lock_guard lock(mutex_);
    return records_;
}

void OutputWriter::write_manifest(const std::string& command, const std::string& config_echo)
{
    std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH"); epoch != nullptr && *epoch != '\0')
        now = static_cast<std::time_t>(std::strtoll(epoch, nullptr, 10));
    std::tm utc{};
    gmtime_r(&now, &utc);
    std::array<char, 32> stamp{};
    std::strftime(stamp.data(), stamp.size(), "%Y-%m-%dT%H:%M:%SZ", &utc);

    nlohmann::ordered_json manifest;
    manifest["command"] = command;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["timestamp"] = stamp.data();
    manifest["input_hash"] = sha256_hex(config_echo);
    manifest["config_echo"] = config_echo;
    manifest["outputs"] = nlohmann::ordered_json::array();
    for (const auto& r : outputs())
        manifest["outputs"].push_back({{"path", r.path}, {"sha256", r.sha256}});

    const std::string text = manifest.dump(2) + "\n";
    std::filesystem::create_directories(directory_);
    std::ofstream out(directory_ / "manifest.json", std::ios::binary | std::ios::trunc);
    out << text;
    if (!out)
        throw Error("cannot write manifest");
}

} // namespace qisim::cli

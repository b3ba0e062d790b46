// SPDX-License-Identifier: Apache-2.0
//
// Scenario and result files, summary tables, SVG maps and run manifests.
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "covmec/ao_driver.hpp"
#include "covmec/errors.hpp"

namespace covmec {

inline constexpr const char* kScenarioSchema = "covmec.scenario/1";
inline constexpr const char* kResultSchema = "covmec.result/1";
inline constexpr const char* kManifestSchema = "covmec.manifest/1";
inline constexpr const char* kTableSchema = "covmec.table/1";

/// Malformed scenario or result file. `line` is 1-based, 0 when unknown.
class ParseError : public InputError {
public:
    ParseError(const std::string& origin, int line, const std::string& msg);
    int line() const noexcept { return line_; }

private:
    int line_;
};

/// Scenario from JSON text. Omitted keys keep the simulation-table defaults;
/// unknown keys are rejected. `origin` prefixes error messages.
ScenarioConfig parse_scenario(const std::string& text, const std::string& origin = "<string>");
ScenarioConfig load_scenario(const std::filesystem::path& path);
/// Fully resolved scenario as pretty-printed JSON (round-trips through parse_scenario).
std::string scenario_to_json(const ScenarioConfig& s);

/// Result file: every decision variable, the energy breakdown, traces and
/// residuals. Wall-clock timings are left out so reruns are byte-identical.
std::string report_to_json(const SolveReport& r);
/// Trajectory and energy summary read back from a result file.
struct ResultSummary {
    std::string design;
    std::string scenario_name;
    ScenarioConfig scenario;
    Trajectory trajectory;
    std::vector<Vec3> targets;
    double total_energy = 0.0;
    double propulsion_energy = 0.0;
    double offloading_ratio = 0.0;
};
ResultSummary load_result(const std::filesystem::path& path);

/// Comma-separated table; the header line carries a unit for every numeric column.
struct Table {
    std::vector<std::string> columns;  // "name [unit]"
    std::vector<std::vector<std::string>> rows;
    std::string to_csv() const;
};

/// Decimal rendering with 17 significant digits (round-trips doubles).
std::string fmt(double v);

Table slot_table(const SolveReport& r);
Table round_table(const SolveReport& r);
Table trajectory_table(const Trajectory& t);
Table sweep_table(SweepParam p, const std::vector<SweepPoint>& points);

/// Top-down map of APs, wardens, sensing area and trajectories.
std::string trajectory_svg(const ScenarioConfig& s, const Trajectory& t, const std::vector<Vec3>& targets);
/// Polyline chart of y against x with labelled axes.
std::string curve_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                      const std::vector<double>& x, const std::vector<double>& y);

/// Writes via a temporary file in the same directory and a rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);
std::string read_file(const std::filesystem::path& path);
/// Lower-case hex SHA-256.
std::string sha256_hex(const std::string& data);

struct ManifestEntry {
    std::string file;  // relative to the output directory
    std::string sha256;
};

struct RunManifest {
    std::string command;
    std::string scenario_file;
    std::string scenario_sha256;
    std::vector<std::pair<std::string, std::string>> settings;  // flag, value
    std::uint64_t seed = 0;
    std::string output_dir;
    std::vector<ManifestEntry> files;
    std::string to_json() const;
};

/// Writes each file atomically under `dir`, then manifest.json listing them.
void write_outputs(const std::filesystem::path& dir, const std::vector<std::pair<std::string, std::string>>& files,
                   RunManifest manifest);

}  // namespace covmec

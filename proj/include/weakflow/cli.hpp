#pragma once

// Scenario runner behind the `weakflow` tool.
//
// Configs are INI files with one section per concern ([run], [beam], [flow],
// [coupling], [grid], [modes], [packet]). Physical values carry a unit tag
// ("943 nm", "3 zR", "1 rad*um"); they are converted once, on load, to the
// internal units (beam lengths in sigma0, mode-theory lengths in um). Output
// files use um for lengths and 1/um for wavenumbers.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "weakflow/beam.hpp"
#include "weakflow/polarimetry.hpp"
#include "weakflow/weakfield.hpp"

namespace weakflow::cli {

/// Bad config, unit, flag or environment value. Exit status 2.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Scenario { flow_lines, measure, reconstruct, modes_check, photon_packet };
enum class Format { csv, jsonl };

const char* scenario_name(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view name);
const char* format_name(Format f);

struct FlowSection {
    LaunchSpec launch{LaunchKind::uniform, 41, -5.0, 5.0, 20001};
    double z0 = 0.0;
    double z1 = 0.0;  ///< 0 means three Rayleigh ranges
    FlowOptions options{};
};

struct MeasureSection {
    CouplingConfig coupling{};
    ReconstructionMode mode = ReconstructionMode::small_coupling;
    std::optional<std::uint64_t> shots;
    GridSpec grid{-8.0, 8.0, 161, 0.0, 0.0, 41};  ///< z_max 0 means two Rayleigh ranges
};

struct ModesSection {
    double box_side = 2.0 * M_PI;
    std::vector<Eigen::Vector3i> wave_numbers{{0, 0, 1}, {1, 0, 1}, {0, 2, 1}};
    bool both_polarizations = true;
    std::size_t configurations = 20;
    cplx alpha{0.8, -0.3};
    double periods = 10.0;
};

struct PacketSection {
    double box_side = 200.0;
    double center = 20.0;  ///< along x, 1/um
    double sigma_k = 0.5;
    int span = 70;         ///< modes kept on each side of the centre
    double x_min = -8.0;
    double x_max = 8.0;
    std::size_t points = 801;
    std::size_t ensemble = 20000;
};

struct ScenarioConfig {
    BeamModel beam{};
    double sigma0_um = 100.0;
    FlowSection flow{};
    MeasureSection measure{};
    ModesSection modes{};
    PacketSection packet{};
    std::uint64_t seed = 1;
    unsigned threads = 1;
    Format format = Format::csv;
};

ScenarioConfig default_config();
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<Format> format;
};

/// Flags beat the environment (WEAKFLOW_THREADS), which beats the config.
void apply_overrides(ScenarioConfig& cfg, const Overrides& flags, const char* env_threads);

struct RunReport {
    int exit_code = 0;
    std::string summary;  ///< one line
};

/// Runs a scenario, writing only inside out_dir. Library errors propagate;
/// flagged lines and masked cells are written to errors.jsonl.
RunReport run(Scenario scenario, const ScenarioConfig& cfg, const std::filesystem::path& out_dir);

// Output formatting, shared with the tests.

/// Shortest round-trip decimal form; "nan", "inf", "-inf" for non-finite.
std::string format_number(double v);

inline constexpr std::string_view flow_csv_header = "line_id,z,x,weight,flag";

/// z, x scaled by length_unit on the way out.
void write_flow_lines(std::ostream& os, const std::vector<FlowLine>& lines, const std::vector<double>& launch_x,
                      double z0, Format format, double length_unit);

}  // namespace weakflow::cli

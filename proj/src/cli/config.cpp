#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "weakflow/cli.hpp"

namespace weakflow::cli {

namespace {

namespace pt = boost::property_tree;

const std::map<std::string, std::set<std::string>> schema = {
    {"run", {"seed", "threads", "format"}},
    {"beam",
     {"wavelength", "sigma0", "slit_separation", "amplitude_plus", "amplitude_minus", "relative_phase",
      "initial_curvature", "polarization"}},
    {"flow", {"lines", "launch", "x_min", "x_max", "z0", "z1", "samples", "rtol", "atol", "domain_x_min",
              "domain_x_max", "profile_points"}},
    {"coupling", {"epsilon", "xi", "clamp", "mode", "shots"}},
    {"grid", {"x_min", "x_max", "nx", "z_min", "z_max", "nz"}},
    {"modes", {"box_side", "wave_numbers", "both_polarizations", "configurations", "alpha", "periods"}},
    {"packet", {"box_side", "center", "sigma_k", "span", "x_min", "x_max", "points", "ensemble"}},
};

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(const std::string& where, const std::string& what) { throw ConfigError(where + ": " + what); }

double number(const std::string& where, const std::string& text) {
    double v = 0.0;
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (!text.empty() && *first == '+') ++first;
    const auto [p, ec] = std::from_chars(first, last, v);
    if (ec != std::errc() || p != last) fail(where, "not a number: '" + text + "'");
    return v;
}

std::uint64_t unsigned_integer(const std::string& where, const std::string& text) {
    std::uint64_t v = 0;
    const auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || p != text.data() + text.size()) fail(where, "not a non-negative integer: '" + text + "'");
    return v;
}

bool boolean(const std::string& where, const std::string& text) {
    if (text == "true" || text == "yes" || text == "1") return true;
    if (text == "false" || text == "no" || text == "0") return false;
    fail(where, "not a boolean: '" + text + "'");
}

/// "value unit" -> (value, unit); a bare value is reported with an empty unit.
std::pair<double, std::string> quantity(const std::string& where, const std::string& text) {
    std::istringstream in(text);
    std::string v, unit, extra;
    in >> v >> unit >> extra;
    if (v.empty()) fail(where, "missing value");
    if (!extra.empty()) fail(where, "unexpected trailing text in '" + text + "'");
    return {number(where, v), unit};
}

double scale_of(const std::string& where, const std::string& unit, const std::map<std::string, double>& units) {
    if (unit.empty()) fail(where, "missing unit tag");
    const auto it = units.find(unit);
    if (it == units.end()) {
        std::string known;
        for (const auto& [k, _] : units) known += (known.empty() ? "" : ", ") + k;
        fail(where, "unknown unit '" + unit + "' (expected one of " + known + ")");
    }
    return it->second;
}

const std::map<std::string, double> length_um = {{"nm", 1e-3}, {"um", 1.0}, {"mm", 1e3}, {"m", 1e6}};
const std::map<std::string, double> inverse_length_um = {{"1/nm", 1e3}, {"1/um", 1.0}, {"1/mm", 1e-3}, {"1/m", 1e-6}};
const std::map<std::string, double> angle_rad = {{"rad", 1.0}, {"mrad", 1e-3}, {"deg", M_PI / 180.0}};
const std::map<std::string, double> coupling_rad_um = {{"rad*um", 1.0}, {"rad*mm", 1e3}, {"rad*m", 1e6}};

class Reader {
public:
    explicit Reader(const pt::ptree& tree) : tree_(tree) {}

    /// Calls fn(value, where) if section.key is present.
    void with(const std::string& section, const std::string& key,
              const std::function<void(const std::string&, const std::string&)>& fn) const {
        const auto sec = tree_.get_child_optional(section);
        if (!sec) return;
        const auto v = sec->get_optional<std::string>(key);
        if (v) fn(trim(*v), section + "." + key);
    }

private:
    const pt::ptree& tree_;
};

void check_schema(const pt::ptree& tree) {
    for (const auto& [section, body] : tree) {
        const auto it = schema.find(section);
        if (body.empty()) fail(section, "key outside any section");
        if (it == schema.end()) fail(section, "unknown section");
        for (const auto& [key, _] : body)
            if (!it->second.count(key)) fail(section + "." + key, "unknown key");
    }
}

}  // namespace

const char* scenario_name(Scenario s) {
    switch (s) {
        case Scenario::flow_lines:
            return "flow-lines";
        case Scenario::measure:
            return "measure";
        case Scenario::reconstruct:
            return "reconstruct";
        case Scenario::modes_check:
            return "modes-check";
        case Scenario::photon_packet:
            return "photon-packet";
    }
    return "unknown";
}

std::optional<Scenario> parse_scenario(std::string_view name) {
    for (Scenario s : {Scenario::flow_lines, Scenario::measure, Scenario::reconstruct, Scenario::modes_check,
                       Scenario::photon_packet})
        if (name == scenario_name(s)) return s;
    return std::nullopt;
}

const char* format_name(Format f) { return f == Format::csv ? "csv" : "jsonl"; }

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.sigma0_um = 100.0;
    c.beam.wavenumber = 2.0 * M_PI * c.sigma0_um / 0.943;
    c.beam.sigma0 = 1.0;
    c.beam.slit_separation = 4.0;
    c.beam.amplitude_plus = 1.0;
    c.beam.amplitude_minus = 1.0;
    c.flow.z1 = 3.0 * c.beam.rayleigh_range();
    c.measure.coupling = CouplingConfig::from_epsilon(0.01);
    c.measure.grid.z_max = 2.0 * c.beam.rayleigh_range();
    return c;
}

ScenarioConfig parse_config(std::string_view text) {
    pt::ptree tree;
    try {
        std::istringstream in{std::string(text)};
        pt::ini_parser::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("config: " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    check_schema(tree);
    const Reader r(tree);
    ScenarioConfig c = default_config();

    // [beam] first: every other beam-space length is expressed through sigma0
    double wavelength_um = 0.943;
    r.with("beam", "sigma0", [&](const std::string& v, const std::string& w) {
        const auto [x, u] = quantity(w, v);
        c.sigma0_um = x * scale_of(w, u, length_um);
        if (!(c.sigma0_um > 0.0) || !std::isfinite(c.sigma0_um)) fail(w, "must be positive");
    });
    r.with("beam", "wavelength", [&](const std::string& v, const std::string& w) {
        const auto [x, u] = quantity(w, v);
        wavelength_um = x * scale_of(w, u, length_um);
        if (!(wavelength_um > 0.0) || !std::isfinite(wavelength_um)) fail(w, "must be positive");
    });
    const double s0 = c.sigma0_um;
    c.beam.wavenumber = 2.0 * M_PI * s0 / wavelength_um;
    c.beam.slit_separation = 400.0 / s0;

    auto length = [&](const std::string& w, const std::string& v, bool allow_zr) {
        const auto [x, u] = quantity(w, v);
        if (u == "sigma0") return x;
        if (u == "zR") {
            if (!allow_zr) fail(w, "zR is only meaningful along the beam axis");
            return x * c.beam.rayleigh_range();
        }
        return x * scale_of(w, u, length_um) / s0;
    };
    auto plain = [&](const std::string& w, const std::string& v) {
        const auto [x, u] = quantity(w, v);
        if (!u.empty()) fail(w, "dimensionless value takes no unit");
        return x;
    };

    r.with("beam", "slit_separation", [&](auto& v, auto& w) { c.beam.slit_separation = length(w, v, false); });
    r.with("beam", "amplitude_plus", [&](auto& v, auto& w) { c.beam.amplitude_plus = plain(w, v); });
    r.with("beam", "amplitude_minus", [&](auto& v, auto& w) { c.beam.amplitude_minus = plain(w, v); });
    r.with("beam", "relative_phase", [&](auto& v, auto& w) {
        const auto [x, u] = quantity(w, v);
        c.beam.relative_phase = x * scale_of(w, u, angle_rad);
    });
    r.with("beam", "initial_curvature", [&](auto& v, auto& w) {
        const auto [x, u] = quantity(w, v);
        c.beam.initial_curvature = x * scale_of(w, u, inverse_length_um) * s0;
    });
    r.with("beam", "polarization", [&](auto& v, auto& w) {
        if (v == "horizontal") c.beam.polarization = PolarizationSpinor::horizontal();
        else if (v == "vertical") c.beam.polarization = PolarizationSpinor::vertical();
        else if (v == "diagonal") c.beam.polarization = PolarizationSpinor::diagonal();
        else if (v == "right") c.beam.polarization = PolarizationSpinor::right_circular();
        else if (v == "left") c.beam.polarization = PolarizationSpinor::left_circular();
        else fail(w, "expected horizontal, vertical, diagonal, right or left");
    });
    try {
        c.beam.validate();
    } catch (const std::exception& e) {
        fail("beam", e.what());
    }
    c.flow.z1 = 3.0 * c.beam.rayleigh_range();
    c.measure.grid.z_max = 2.0 * c.beam.rayleigh_range();

    r.with("run", "seed", [&](auto& v, auto& w) { c.seed = unsigned_integer(w, v); });
    r.with("run", "threads", [&](auto& v, auto& w) {
        const auto n = unsigned_integer(w, v);
        if (n == 0 || n > 1024) fail(w, "must be between 1 and 1024");
        c.threads = static_cast<unsigned>(n);
    });
    r.with("run", "format", [&](auto& v, auto& w) {
        if (v == "csv") c.format = Format::csv;
        else if (v == "jsonl") c.format = Format::jsonl;
        else fail(w, "expected csv or jsonl");
    });

    auto& fl = c.flow;
    r.with("flow", "lines", [&](auto& v, auto& w) { fl.launch.count = unsigned_integer(w, v); });
    r.with("flow", "launch", [&](auto& v, auto& w) {
        if (v == "uniform") fl.launch.kind = LaunchKind::uniform;
        else if (v == "intensity") fl.launch.kind = LaunchKind::intensity;
        else fail(w, "expected uniform or intensity");
    });
    r.with("flow", "x_min", [&](auto& v, auto& w) { fl.launch.x_min = length(w, v, false); });
    r.with("flow", "x_max", [&](auto& v, auto& w) { fl.launch.x_max = length(w, v, false); });
    r.with("flow", "z0", [&](auto& v, auto& w) { fl.z0 = length(w, v, true); });
    r.with("flow", "z1", [&](auto& v, auto& w) { fl.z1 = length(w, v, true); });
    r.with("flow", "samples", [&](auto& v, auto& w) { fl.options.samples = unsigned_integer(w, v); });
    r.with("flow", "profile_points", [&](auto& v, auto& w) { fl.launch.profile_points = unsigned_integer(w, v); });
    r.with("flow", "rtol", [&](auto& v, auto& w) { fl.options.control.rtol = plain(w, v); });
    r.with("flow", "atol", [&](auto& v, auto& w) { fl.options.control.atol = length(w, v, false); });
    r.with("flow", "domain_x_min", [&](auto& v, auto& w) { fl.options.x_min = length(w, v, false); });
    r.with("flow", "domain_x_max", [&](auto& v, auto& w) { fl.options.x_max = length(w, v, false); });
    if (fl.launch.count == 0) fail("flow.lines", "must be at least 1");
    if (fl.launch.x_max < fl.launch.x_min) fail("flow", "x_min exceeds x_max");
    if (!(fl.z1 > fl.z0)) fail("flow", "z1 must exceed z0");
    if (fl.options.samples < 2) fail("flow.samples", "must be at least 2");
    if (!(fl.options.control.rtol > 0.0) || !(fl.options.control.atol >= 0.0)) fail("flow", "bad tolerances");

    auto& me = c.measure;
    double eps_internal = me.coupling.epsilon;
    std::optional<double> xi;
    r.with("coupling", "epsilon", [&](auto& v, auto& w) {
        const auto [x, u] = quantity(w, v);
        if (u == "rad*sigma0") eps_internal = x;
        else eps_internal = x * scale_of(w, u, coupling_rad_um) / s0;
        if (!(eps_internal > 0.0) || !std::isfinite(eps_internal)) fail(w, "must be positive");
    });
    r.with("coupling", "xi", [&](auto& v, auto& w) {
        if (v == "auto") return;
        const auto [x, u] = quantity(w, v);
        xi = x * scale_of(w, u, inverse_length_um) * s0;
        if (!(*xi > 0.0) || !std::isfinite(*xi)) fail(w, "must be positive");
    });
    me.coupling = CouplingConfig::from_epsilon(eps_internal);
    if (xi) me.coupling.xi = *xi;
    r.with("coupling", "clamp", [&](auto& v, auto& w) { me.coupling.clamp = boolean(w, v); });
    r.with("coupling", "mode", [&](auto& v, auto& w) {
        if (v == "small_coupling") me.mode = ReconstructionMode::small_coupling;
        else if (v == "exact") me.mode = ReconstructionMode::exact;
        else fail(w, "expected small_coupling or exact");
    });
    r.with("coupling", "shots", [&](auto& v, auto& w) {
        if (v == "none") return;
        const auto n = unsigned_integer(w, v);
        if (n == 0) fail(w, "must be positive (or none for noiseless records)");
        me.shots = n;
    });
    r.with("grid", "x_min", [&](auto& v, auto& w) { me.grid.x_min = length(w, v, false); });
    r.with("grid", "x_max", [&](auto& v, auto& w) { me.grid.x_max = length(w, v, false); });
    r.with("grid", "z_min", [&](auto& v, auto& w) { me.grid.z_min = length(w, v, true); });
    r.with("grid", "z_max", [&](auto& v, auto& w) { me.grid.z_max = length(w, v, true); });
    r.with("grid", "nx", [&](auto& v, auto& w) { me.grid.nx = unsigned_integer(w, v); });
    r.with("grid", "nz", [&](auto& v, auto& w) { me.grid.nz = unsigned_integer(w, v); });
    try {
        me.grid.validate();
    } catch (const std::exception& e) {
        fail("grid", e.what());
    }

    // mode theory works in natural units with lengths in um
    auto& mo = c.modes;
    auto um = [&](const std::string& w, const std::string& v) {
        const auto [x, u] = quantity(w, v);
        return x * scale_of(w, u, length_um);
    };
    auto per_um = [&](const std::string& w, const std::string& v) {
        const auto [x, u] = quantity(w, v);
        return x * scale_of(w, u, inverse_length_um);
    };
    r.with("modes", "box_side", [&](auto& v, auto& w) { mo.box_side = um(w, v); });
    r.with("modes", "wave_numbers", [&](auto& v, auto& w) {
        mo.wave_numbers.clear();
        std::istringstream groups(v);
        std::string group;
        while (std::getline(groups, group, ';')) {
            std::istringstream in(group);
            std::string a, b, d, extra;
            in >> a >> b >> d >> extra;
            if (d.empty() || !extra.empty()) fail(w, "expected integer triples separated by ';'");
            auto to_int = [&](const std::string& s) {
                int x = 0;
                const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
                if (ec != std::errc() || p != s.data() + s.size()) fail(w, "not an integer: '" + s + "'");
                return x;
            };
            mo.wave_numbers.emplace_back(to_int(a), to_int(b), to_int(d));
        }
        if (mo.wave_numbers.empty()) fail(w, "no wave numbers given");
    });
    r.with("modes", "both_polarizations", [&](auto& v, auto& w) { mo.both_polarizations = boolean(w, v); });
    r.with("modes", "configurations", [&](auto& v, auto& w) { mo.configurations = unsigned_integer(w, v); });
    r.with("modes", "alpha", [&](auto& v, auto& w) {
        std::istringstream in(v);
        std::string re, im, extra;
        in >> re >> im >> extra;
        if (im.empty() || !extra.empty()) fail(w, "expected 'real imag'");
        mo.alpha = {number(w, re), number(w, im)};
    });
    r.with("modes", "periods", [&](auto& v, auto& w) { mo.periods = plain(w, v); });
    if (!(mo.box_side > 0.0)) fail("modes.box_side", "must be positive");
    if (!(mo.periods > 0.0)) fail("modes.periods", "must be positive");

    auto& pk = c.packet;
    r.with("packet", "box_side", [&](auto& v, auto& w) { pk.box_side = um(w, v); });
    r.with("packet", "center", [&](auto& v, auto& w) { pk.center = per_um(w, v); });
    r.with("packet", "sigma_k", [&](auto& v, auto& w) { pk.sigma_k = per_um(w, v); });
    r.with("packet", "span", [&](auto& v, auto& w) { pk.span = static_cast<int>(unsigned_integer(w, v)); });
    r.with("packet", "x_min", [&](auto& v, auto& w) { pk.x_min = um(w, v); });
    r.with("packet", "x_max", [&](auto& v, auto& w) { pk.x_max = um(w, v); });
    r.with("packet", "points", [&](auto& v, auto& w) { pk.points = unsigned_integer(w, v); });
    r.with("packet", "ensemble", [&](auto& v, auto& w) { pk.ensemble = unsigned_integer(w, v); });
    if (!(pk.box_side > 0.0) || !(pk.sigma_k > 0.0)) fail("packet", "box_side and sigma_k must be positive");
    if (pk.points < 2 || !(pk.x_max > pk.x_min)) fail("packet", "need points >= 2 and x_min < x_max");
    if (pk.span < 1) fail("packet.span", "must be at least 1");
    return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

void apply_overrides(ScenarioConfig& cfg, const Overrides& flags, const char* env_threads) {
    if (env_threads && *env_threads) {
        const std::string v = trim(env_threads);
        const auto n = unsigned_integer("WEAKFLOW_THREADS", v);
        if (n == 0 || n > 1024) throw ConfigError("WEAKFLOW_THREADS: must be between 1 and 1024");
        cfg.threads = static_cast<unsigned>(n);
    }
    if (flags.threads) {
        if (*flags.threads == 0 || *flags.threads > 1024) throw ConfigError("--threads: must be between 1 and 1024");
        cfg.threads = *flags.threads;
    }
    if (flags.seed) cfg.seed = *flags.seed;
    if (flags.format) cfg.format = *flags.format;
}

}  // namespace weakflow::cli

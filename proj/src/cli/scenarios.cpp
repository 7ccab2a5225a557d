#include <cmath>
#include <fstream>
#include <json.hpp>
#include <random>
#include <sstream>

#include "weakflow/cli.hpp"
#include "weakflow/errors.hpp"
#include "weakflow/modes.hpp"
#include "weakflow/parallel.hpp"

namespace weakflow::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string extension(Format f) { return f == Format::csv ? ".csv" : ".jsonl"; }

double or_nan(bool valid, double v) { return valid ? v : std::nan(""); }

// One record per grid cell; non-finite values become empty CSV fields or JSON null.
class RecordWriter {
public:
    RecordWriter(Format f, std::vector<std::string> columns) : format_(f), columns_(std::move(columns)) {
        if (format_ == Format::csv) {
            for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
            out_ << '\n';
        }
    }

    void row(const std::vector<double>& values, const std::string& mask) {
        if (format_ == Format::csv) {
            for (std::size_t i = 0; i < values.size(); ++i)
                out_ << (i ? "," : "") << (std::isfinite(values[i]) ? format_number(values[i]) : "");
            out_ << ',' << mask << '\n';
            return;
        }
        json j = json::object();
        for (std::size_t i = 0; i < values.size(); ++i) j[columns_[i]] = values[i];  // NaN dumps as null
        j["masks"] = mask.empty() ? json::array() : json::array({mask});
        out_ << j.dump() << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    Format format_;
    std::vector<std::string> columns_;
    std::ostringstream out_;
};

json flag_counts(const std::vector<FlowLine>& lines) {
    json j = {{"ok", 0}, {"truncated", 0}, {"node", 0}, {"step_failure", 0}};
    for (const auto& l : lines) j[flag_name(l.flag)] = j[flag_name(l.flag)].get<int>() + 1;
    return j;
}

std::size_t point_count(const std::vector<FlowLine>& lines) {
    std::size_t n = 0;
    for (const auto& l : lines) n += std::max<std::size_t>(l.x.size(), 1);
    return n;
}

void append_line_errors(std::ostringstream& errors, const std::vector<FlowLine>& lines, const char* kind) {
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].flag == LineFlag::ok) continue;
        errors << json{{"kind", kind}, {"line_id", i}, {"flag", flag_name(lines[i].flag)},
                       {"message", lines[i].message}}
                      .dump()
               << '\n';
    }
}

RunReport flow_lines(const ScenarioConfig& cfg, const fs::path& out) {
    const double s0 = cfg.sigma0_um;
    const auto& fl = cfg.flow;
    const std::vector<double> xs = launch_points(cfg.beam, fl.launch, fl.z0);
    const auto lines = flow_bundle(cfg.beam, fl.launch, fl.z0, fl.z1, fl.options, cfg.threads);

    const std::string name = "flow_lines" + extension(cfg.format);
    std::ostringstream data, errors;
    write_flow_lines(data, lines, xs, fl.z0, cfg.format, s0);
    append_line_errors(errors, lines, "line");
    write_file(out / name, data.str());
    write_file(out / "errors.jsonl", errors.str());

    const json flags = flag_counts(lines);
    const int failed = flags["node"].get<int>() + flags["step_failure"].get<int>();
    const json summary = {{"scenario", "flow-lines"}, {"lines", lines.size()}, {"points", point_count(lines)},
                          {"flags", flags}, {"z0_um", fl.z0 * s0}, {"z1_um", fl.z1 * s0},
                          {"wavenumber_per_um", cfg.beam.wavenumber / s0}, {"output", name}};
    write_file(out / "summary.json", summary.dump(2) + "\n");

    RunReport r;
    r.exit_code = failed ? 1 : 0;
    r.summary = "flow-lines: " + std::to_string(lines.size()) + " lines, " + std::to_string(point_count(lines)) +
                " points, " + std::to_string(lines.size() - flags["ok"].get<std::size_t>()) + " flagged (" +
                std::to_string(failed) + " failed)";
    return r;
}

RunReport scan(const ScenarioConfig& cfg, const fs::path& out, bool reconstruct) {
    const double s0 = cfg.sigma0_um;
    const auto& me = cfg.measure;
    ScanOptions opts;
    opts.mode = me.mode;
    opts.shots = me.shots;
    opts.seed = cfg.seed;
    opts.launch = cfg.flow.launch;
    if (!reconstruct) opts.launch.count = 0;
    opts.flow = cfg.flow.options;
    opts.threads = cfg.threads;
    const ScanResult res = scan_and_reconstruct(cfg.beam, me.coupling, me.grid, opts);

    std::vector<std::string> cols = {"x", "z", "re_kw", "im_kw", "Sx_re", "Sx_im", "W", "Q", "I_R", "I_L", "I_H", "I_V"};
    if (reconstruct) cols.insert(cols.end(), {"rec_re_kw", "rec_im_kw", "exact_residual"});
    std::vector<std::string> header = cols;
    if (cfg.format == Format::csv) header.push_back("masks");
    RecordWriter rec(cfg.format, cfg.format == Format::csv ? header : cols);
    std::ostringstream errors;
    std::size_t nodes = 0, branches = 0;
    double worst_re = 0.0, worst_im = 0.0;
    for (std::size_t i = 0; i < res.cells.size(); ++i) {
        const ScanCell& c = res.cells[i];
        const bool has_truth = c.status != CellStatus::node;
        const bool has_rec = c.status == CellStatus::ok;
        std::vector<double> v = {c.x * s0,
                                 c.z * s0,
                                 or_nan(has_truth, c.truth.k_w.real() / s0),
                                 or_nan(has_truth, c.truth.k_w.imag() / s0),
                                 or_nan(has_truth, c.truth.S_w(0).real()),
                                 or_nan(has_truth, c.truth.S_w(0).imag()),
                                 or_nan(has_truth, c.truth.W_w),
                                 or_nan(has_truth, c.truth.Q_density),
                                 or_nan(has_truth, c.record.I_R),
                                 or_nan(has_truth, c.record.I_L),
                                 or_nan(has_truth, c.record.I_H),
                                 or_nan(has_truth, c.record.I_V)};
        if (reconstruct) {
            v.push_back(or_nan(has_rec, c.reconstructed.real() / s0));
            v.push_back(or_nan(has_rec, c.reconstructed.imag() / s0));
            v.push_back(or_nan(has_rec && me.mode == ReconstructionMode::exact, c.exact_residual));
        }
        if (has_rec) {
            worst_re = std::max(worst_re, std::abs(c.reconstructed.real() - c.truth.k_w.real()) / s0);
            worst_im = std::max(worst_im, std::abs(c.reconstructed.imag() - c.truth.k_w.imag()) / s0);
        }
        rec.row(v, has_rec ? "" : cell_status_name(c.status));
        if (c.status == CellStatus::node) ++nodes;
        if (c.status == CellStatus::branch) ++branches;
        if (c.status != CellStatus::ok)
            errors << json{{"kind", "cell"}, {"index", i}, {"x", c.x * s0}, {"z", c.z * s0},
                           {"status", cell_status_name(c.status)}}
                          .dump()
                   << '\n';
    }
    const std::string field_name = "field" + extension(cfg.format);
    write_file(out / field_name, rec.str());

    json summary = {{"scenario", reconstruct ? "reconstruct" : "measure"},
                    {"cells", res.cells.size()},
                    {"masked_cells", res.masked_cells},
                    {"node_cells", nodes},
                    {"branch_cells", branches},
                    {"epsilon_rad_um", me.coupling.epsilon * s0},
                    {"shots", me.shots ? json(*me.shots) : json(nullptr)},
                    {"seed", cfg.seed},
                    {"field", field_name}};
    std::string line = std::string(reconstruct ? "reconstruct" : "measure") + ": " + std::to_string(res.cells.size()) +
                       " cells, " + std::to_string(res.masked_cells) + " masked";
    if (reconstruct) {
        summary["mode"] = me.mode == ReconstructionMode::small_coupling ? "small_coupling" : "exact";
        summary["max_abs_error_re_kw_per_um"] = worst_re;
        summary["max_abs_error_im_kw_per_um"] = worst_im;
        summary["lines"] = res.true_lines.size();
        summary["true_flags"] = flag_counts(res.true_lines);
        summary["reconstructed_flags"] = flag_counts(res.reconstructed_lines);
        summary["rms_deviation_um"] = res.rms_deviation * s0;
        summary["paired_points"] = res.paired_points;
        const std::vector<double> xs = launch_points(cfg.beam, opts.launch, me.grid.z_min);
        for (const auto& [lines, stem] : {std::pair{&res.true_lines, "true_lines"},
                                          std::pair{&res.reconstructed_lines, "reconstructed_lines"}}) {
            std::ostringstream data;
            write_flow_lines(data, *lines, xs, me.grid.z_min, cfg.format, s0);
            write_file(out / (std::string(stem) + extension(cfg.format)), data.str());
        }
        append_line_errors(errors, res.true_lines, "true_line");
        append_line_errors(errors, res.reconstructed_lines, "reconstructed_line");
        line += ", " + std::to_string(res.true_lines.size()) + " line pairs, rms deviation " +
                format_number(res.rms_deviation * s0) + " um";
    }
    write_file(out / "errors.jsonl", errors.str());
    write_file(out / "summary.json", summary.dump(2) + "\n");
    return {0, line};
}

RunReport modes_check(const ScenarioConfig& cfg, const fs::path& out) {
    const auto& mc = cfg.modes;
    const ModeSet ms = ModeSet::box(mc.box_side, mc.wave_numbers, mc.both_polarizations);
    const double e0 = ms.zero_point_energy();
    std::vector<cplx> alpha(ms.size());
    for (std::size_t rep : ms.pairs()) alpha[rep] = mc.alpha;
    const std::size_t photon_mode = ms.pairs().front();
    const FieldState ground = FieldState::ground(ms);
    const FieldState photon = FieldState::single_photon(ms, photon_mode);
    const FieldState coherent = FieldState::coherent(ms, alpha);

    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> g;
    std::vector<ModeConfiguration> configs;
    for (std::size_t n = 0; n < mc.configurations; ++n) {
        std::vector<cplx> z;
        for (std::size_t rep : ms.pairs()) z.push_back(cplx(g(rng), g(rng)) / (2.0 * std::sqrt(ms[rep].kappa())));
        configs.push_back(ModeConfiguration::from_pairs(ms, z, 0.1 * static_cast<double>(n)));
    }

    json states = json::object();
    double worst = 0.0;
    for (const auto& [name, st] : {std::pair{"ground", &ground}, std::pair{"single_photon", &photon},
                                   std::pair{"coherent", &coherent}}) {
        double hj = 0.0, cont = 0.0;
        std::size_t nodes = 0;
        for (const auto& c : configs) {
            try {
                hj = std::max(hj, hj_residual(*st, c));
                cont = std::max(cont, continuity_residual(*st, c));
            } catch (const NodeError&) {
                ++nodes;
            }
        }
        worst = std::max({worst, hj, cont});
        states[name] = {{"hj_residual_max", hj}, {"continuity_residual_max", cont}, {"nodes", nodes}};
    }

    const ModeConfiguration zero = ModeConfiguration::from_pairs(ms, std::vector<cplx>(ms.pairs().size()));
    const double zero_point_gap = quantum_potential(ground, zero) - total_energy(ground);
    double momentum_err = 0.0;
    for (const auto& c : configs) {
        try {
            momentum_err = std::max(momentum_err, (total_momentum(photon, c) - ms[photon_mode].k).norm());
        } catch (const NodeError&) {
        }
    }
    const double photon_energy_err = std::abs(total_energy(photon, true) - ms[photon_mode].kappa());

    double kappa_min = INFINITY;
    std::vector<cplx> z0;
    for (std::size_t rep : ms.pairs()) {
        kappa_min = std::min(kappa_min, ms[rep].kappa());
        z0.push_back(mc.alpha);
    }
    const auto traj = evolve_beables(coherent, ModeConfiguration::from_pairs(ms, z0), mc.periods * 2.0 * M_PI / kappa_min,
                                     {}, 101);
    double track = 0.0;
    for (const auto& p : traj.points)
        for (std::size_t rep : ms.pairs())
            track = std::max(track, std::abs(p.q[rep] - mc.alpha * std::polar(1.0, -ms[rep].kappa() * p.t)));

    const bool pass = worst < 1e-10 * e0 && zero_point_gap == 0.0 && momentum_err < 1e-9 &&
                      photon_energy_err < 1e-12 && track < 1e-8;
    const json report = {{"scenario", "modes-check"},
                         {"modes", ms.size()},
                         {"pairs", ms.pairs().size()},
                         {"configurations", configs.size()},
                         {"zero_point_energy", e0},
                         {"states", states},
                         {"residual_max", worst},
                         {"zero_point_minus_ground_Q", zero_point_gap},
                         {"photon_momentum_error", momentum_err},
                         {"photon_normal_ordered_energy_error", photon_energy_err},
                         {"coherent_tracking_error", track},
                         {"periods", mc.periods},
                         {"pass", pass}};
    write_file(out / "modes_check.json", report.dump(2) + "\n");
    write_file(out / "summary.json", report.dump(2) + "\n");
    std::ostringstream errors;
    if (!pass) errors << json{{"kind", "check"}, {"message", "a mode-theory identity exceeded its tolerance"}}.dump() << '\n';
    write_file(out / "errors.jsonl", errors.str());
    return {pass ? 0 : 1, "modes-check: " + std::to_string(configs.size()) + " configurations x 3 states, residual max " +
                              format_number(worst) + ", tracking " + format_number(track) + (pass ? ", pass" : ", FAIL")};
}

RunReport photon_packet(const ScenarioConfig& cfg, const fs::path& out) {
    const auto& pk = cfg.packet;
    const double dk = 2.0 * M_PI / pk.box_side;
    const int n0 = static_cast<int>(std::lround(pk.center / dk));
    if (n0 - pk.span < 1) throw DomainError("packet span reaches k <= 0; raise center or lower span");
    std::vector<Eigen::Vector3i> ns;
    for (int n = n0 - pk.span; n <= n0 + pk.span; ++n) ns.emplace_back(n, 0, 0);
    const ModeSet ms = ModeSet::box(pk.box_side, ns);
    const Eigen::Vector3d centre(dk * n0, 0.0, 0.0);
    const auto f = gaussian_packet(ms, centre, pk.sigma_k);
    const FieldState st = FieldState::single_photon(ms, f, centre);

    std::vector<double> xs(pk.points), p(pk.points);
    for (std::size_t i = 0; i < pk.points; ++i)
        xs[i] = i + 1 == pk.points ? pk.x_max
                                   : pk.x_min + (pk.x_max - pk.x_min) * static_cast<double>(i) / static_cast<double>(pk.points - 1);
    parallel_for(pk.points, cfg.threads,
                 [&](std::size_t i) { p[i] = detection_probability(st, Eigen::Vector3d(xs[i], 0.0, 0.0)); });

    double s0 = 0.0, s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < pk.points; ++i) {
        s0 += p[i];
        s1 += p[i] * xs[i];
    }
    const double mean_x = s1 / s0;
    for (std::size_t i = 0; i < pk.points; ++i) s2 += p[i] * (xs[i] - mean_x) * (xs[i] - mean_x);

    std::ostringstream data;
    if (cfg.format == Format::csv) {
        data << "x,probability\n";
        for (std::size_t i = 0; i < pk.points; ++i) data << format_number(xs[i]) << ',' << format_number(p[i]) << '\n';
    } else {
        for (std::size_t i = 0; i < pk.points; ++i) data << json{{"x", xs[i]}, {"probability", p[i]}}.dump() << '\n';
    }
    const std::string name = "packet" + extension(cfg.format);
    write_file(out / name, data.str());

    // ensemble momentum: ground-state samples reweighted by |Psi / Psi_0|^2
    Eigen::Vector3d mean_k = Eigen::Vector3d::Zero();
    for (std::size_t i = 0; i < ms.size(); ++i) mean_k += std::norm(f[i]) * ms[i].k;
    const FieldState ground = FieldState::ground(ms);
    std::mt19937_64 rng(cfg.seed);
    std::normal_distribution<double> g;
    double wsum = 0.0;
    Eigen::Vector3d acc = Eigen::Vector3d::Zero();
    std::vector<cplx> z(ms.pairs().size());
    for (std::size_t n = 0; n < pk.ensemble; ++n) {
        for (std::size_t k = 0; k < z.size(); ++k)
            z[k] = cplx(g(rng), g(rng)) / (2.0 * std::sqrt(ms[ms.pairs()[k]].kappa()));
        const ModeConfiguration c = ModeConfiguration::from_pairs(ms, z);
        try {
            const double w = std::pow(amplitude_phase(st, c).R / amplitude_phase(ground, c).R, 2);
            wsum += w;
            acc += w * total_momentum(st, c);
        } catch (const NodeError&) {
        }
    }
    const double ensemble_kx = wsum > 0.0 ? acc.x() / wsum : std::nan("");

    const double fourier = 1.0 / (4.0 * pk.sigma_k * pk.sigma_k);
    const json summary = {{"scenario", "photon-packet"},
                          {"modes", ms.size()},
                          {"center_per_um", centre.x()},
                          {"mean_kx_per_um", mean_k.x()},
                          {"ensemble_kx_per_um", ensemble_kx},
                          {"ensemble", pk.ensemble},
                          {"mean_x_um", mean_x},
                          {"second_moment_um2", s2 / s0},
                          {"fourier_second_moment_um2", fourier},
                          {"output", name}};
    write_file(out / "summary.json", summary.dump(2) + "\n");
    write_file(out / "errors.jsonl", "");
    return {0, "photon-packet: " + std::to_string(ms.size()) + " modes, second moment " + format_number(s2 / s0) +
                   " um^2 (Fourier " + format_number(fourier) + "), ensemble k_x " + format_number(ensemble_kx) + " 1/um"};
}

}  // namespace

RunReport run(Scenario scenario, const ScenarioConfig& cfg, const fs::path& out_dir) {
    fs::create_directories(out_dir);
    switch (scenario) {
        case Scenario::flow_lines:
            return flow_lines(cfg, out_dir);
        case Scenario::measure:
            return scan(cfg, out_dir, false);
        case Scenario::reconstruct:
            return scan(cfg, out_dir, true);
        case Scenario::modes_check:
            return modes_check(cfg, out_dir);
        case Scenario::photon_packet:
            return photon_packet(cfg, out_dir);
    }
    throw ConfigError("unknown scenario");
}

}  // namespace weakflow::cli

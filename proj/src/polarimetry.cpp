#include "weakflow/polarimetry.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "weakflow/errors.hpp"
#include "weakflow/parallel.hpp"

namespace weakflow {

namespace {

constexpr cplx I{0.0, 1.0};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double ratio(double a, double b, const char* what) {
    const double s = a + b;
    if (!(s > 0.0)) throw BranchError(std::string("no signal in the ") + what + " analyzer");
    return (a - b) / s;
}

}  // namespace

CouplingConfig CouplingConfig::from_epsilon(double epsilon) {
    CouplingConfig c;
    c.epsilon = epsilon;
    c.xi = 1.0 / epsilon;
    c.validate();
    return c;
}

void CouplingConfig::validate() const {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("coupling epsilon must be positive");
    if (!(xi > 0.0) || !std::isfinite(xi)) throw DomainError("calibration xi must be positive");
}

double MeasurementRecord::circular_asymmetry() const { return ratio(I_R, I_L, "circular"); }
double MeasurementRecord::linear_asymmetry() const { return ratio(I_H, I_V, "linear"); }

std::array<cplx, 2> final_spinor(cplx w, double epsilon) {
    const cplx phase = 0.5 * I * epsilon * w;
    return {std::exp(-phase) * M_SQRT1_2, std::exp(phase) * M_SQRT1_2};
}

std::array<double, 4> analyzer_probabilities(cplx w, double epsilon) {
    const double ex = epsilon * w.real();
    const double ey = epsilon * w.imag();
    const double circ = std::sin(ex) / std::cosh(ey);
    // e^{+-ey} / (2 cosh ey) without overflow
    const double h = 1.0 / (1.0 + std::exp(-2.0 * ey));
    const double v = 1.0 / (1.0 + std::exp(2.0 * ey));
    return {0.5 * (1.0 + circ), 0.5 * (1.0 - circ), h, v};
}

StokesExpectation stokes_expectation(cplx w, double epsilon) {
    const auto [a, b] = final_spinor(w, epsilon);
    StokesExpectation s;
    s.norm = std::norm(a) + std::norm(b);
    const cplx ab = std::conj(a) * b;
    s.S_x = 0.5 * (std::norm(a) - std::norm(b)) / s.norm;
    s.S_y = 2.0 * ab.real() / s.norm;
    s.S_z = 2.0 * ab.imag() / s.norm;
    return s;
}

MeasurementRecord simulate_measurement(cplx w, const CouplingConfig& cfg, std::optional<std::uint64_t> shots,
                                       std::uint64_t seed, std::uint64_t stream) {
    cfg.validate();
    if (!std::isfinite(w.real()) || !std::isfinite(w.imag())) throw DomainError("weak value is not finite");
    const auto p = analyzer_probabilities(w, cfg.epsilon);
    MeasurementRecord rec;
    rec.seed = seed;
    rec.shots = shots;
    if (!shots) {
        rec.I_R = p[0];
        rec.I_L = p[1];
        rec.I_H = p[2];
        rec.I_V = p[3];
        return rec;
    }
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(stream)));
    const double n = static_cast<double>(*shots);
    std::array<double, 4> counts{};
    for (int c = 0; c < 4; ++c) {
        const double mean = n * p[c];
        counts[c] = mean > 0.0 ? static_cast<double>(std::poisson_distribution<std::uint64_t>(mean)(rng)) : 0.0;
    }
    rec.I_R = counts[0] / n;
    rec.I_L = counts[1] / n;
    rec.I_H = counts[2] / n;
    rec.I_V = counts[3] / n;
    return rec;
}

cplx reconstruct_small_coupling(const MeasurementRecord& rec, const CouplingConfig& cfg) {
    cfg.validate();
    double r1 = rec.circular_asymmetry();
    const double r2 = rec.linear_asymmetry();
    if (std::abs(r1) > 1.0) {
        if (!cfg.clamp) throw BranchError("circular asymmetry outside [-1, 1]");
        r1 = std::clamp(r1, -1.0, 1.0);
    }
    return {cfg.xi * std::asin(r1), cfg.xi * std::asinh(r2)};
}

ExactReconstruction reconstruct_exact(const MeasurementRecord& rec, const CouplingConfig& cfg) {
    cfg.validate();
    const double r1 = rec.circular_asymmetry();
    double r2 = rec.linear_asymmetry();
    if (std::abs(r2) >= 1.0) {
        if (!cfg.clamp) throw BranchError("linear asymmetry outside (-1, 1)");
        r2 = std::copysign(std::nextafter(1.0, 0.0), r2);
    }
    const double angle_im = std::atanh(r2);
    double s = r1 * std::cosh(angle_im);
    if (std::abs(s) > 1.0) {
        if (!cfg.clamp) throw BranchError("circular asymmetry beyond the principal branch");
        s = std::clamp(s, -1.0, 1.0);
    }
    const double angle_re = std::asin(s);
    ExactReconstruction out;
    out.w = cfg.xi * cplx(angle_re, angle_im);
    const auto p = analyzer_probabilities(out.w, cfg.epsilon);
    out.residual = std::max(std::abs((p[0] - p[1]) - r1), std::abs((p[2] - p[3]) - r2));
    return out;
}

double calibrate_xi(const MeasurementRecord& rec, cplx known_w) {
    const double r1 = rec.circular_asymmetry();
    if (!(std::abs(r1) > 0.0) || std::abs(r1) > 1.0) throw BranchError("calibration needs 0 < |asymmetry| <= 1");
    return known_w.real() / std::asin(r1);
}

void GridSpec::validate() const {
    if (nx < 2 || nz < 2) throw DomainError("grid needs at least two points per axis");
    if (!(x_max > x_min) || !(z_max > z_min)) throw DomainError("grid ranges must be increasing");
    if (!std::isfinite(x_min) || !std::isfinite(x_max) || !std::isfinite(z_min) || !std::isfinite(z_max))
        throw DomainError("grid ranges must be finite");
}

double GridSpec::x(std::size_t i) const {
    if (i + 1 == nx) return x_max;
    return x_min + (x_max - x_min) * static_cast<double>(i) / static_cast<double>(nx - 1);
}

double GridSpec::z(std::size_t j) const {
    if (j + 1 == nz) return z_max;
    return z_min + (z_max - z_min) * static_cast<double>(j) / static_cast<double>(nz - 1);
}

const char* cell_status_name(CellStatus s) {
    switch (s) {
        case CellStatus::ok:
            return "ok";
        case CellStatus::node:
            return "node";
        case CellStatus::branch:
            return "branch";
    }
    return "unknown";
}

GridField::GridField(GridSpec grid, std::vector<double> values, std::vector<CellStatus> status)
    : grid_(grid), values_(std::move(values)), status_(std::move(status)) {
    grid_.validate();
    if (values_.size() != grid_.size() || status_.size() != grid_.size())
        throw DomainError("grid field size does not match its grid");
}

double GridField::operator()(double x, double z) const {
    const double dx = (grid_.x_max - grid_.x_min) / static_cast<double>(grid_.nx - 1);
    const double dz = (grid_.z_max - grid_.z_min) / static_cast<double>(grid_.nz - 1);
    const double fx = (x - grid_.x_min) / dx;
    const double fz = (z - grid_.z_min) / dz;
    if (!std::isfinite(fx) || !std::isfinite(fz)) throw DomainError("grid lookup at a non-finite point");
    // boundary cells extrapolate; the caller clips the domain
    const auto ix = static_cast<std::ptrdiff_t>(std::clamp(std::floor(fx), 0.0, static_cast<double>(grid_.nx - 2)));
    const auto iz = static_cast<std::ptrdiff_t>(std::clamp(std::floor(fz), 0.0, static_cast<double>(grid_.nz - 2)));
    const double tx = fx - static_cast<double>(ix);
    const double tz = fz - static_cast<double>(iz);

    auto cr = [](double p0, double p1, double p2, double p3, double t) {
        return 0.5 * (2.0 * p1 + (p2 - p0) * t + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t +
                      (3.0 * (p1 - p2) + p3 - p0) * t * t * t);
    };
    const auto nx = static_cast<std::ptrdiff_t>(grid_.nx);
    const auto nz = static_cast<std::ptrdiff_t>(grid_.nz);
    double rows[4];
    for (int b = 0; b < 4; ++b) {
        const std::ptrdiff_t j = std::clamp<std::ptrdiff_t>(iz - 1 + b, 0, nz - 1);
        double p[4];
        for (int a = 0; a < 4; ++a) {
            const std::ptrdiff_t i = std::clamp<std::ptrdiff_t>(ix - 1 + a, 0, nx - 1);
            const std::size_t idx = static_cast<std::size_t>(j * nx + i);
            if (status_[idx] != CellStatus::ok) throw NodeError("masked grid cell in interpolation stencil", x, z);
            p[a] = values_[idx];
        }
        rows[b] = cr(p[0], p[1], p[2], p[3], tx);
    }
    return cr(rows[0], rows[1], rows[2], rows[3], tz);
}

double rms_line_deviation(const std::vector<FlowLine>& a, const std::vector<FlowLine>& b, std::size_t* paired) {
    double sum = 0.0;
    std::size_t count = 0;
    const std::size_t n = std::min(a.size(), b.size());
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t m = std::min(a[i].x.size(), b[i].x.size());
        for (std::size_t j = 0; j < m; ++j) {
            const double d = a[i].x[j] - b[i].x[j];
            sum += d * d;
            ++count;
        }
    }
    if (paired) *paired = count;
    return count ? std::sqrt(sum / static_cast<double>(count)) : std::nan("");
}

ScanResult scan_and_reconstruct(const BeamModel& model, const CouplingConfig& cfg, const GridSpec& grid,
                                const ScanOptions& opts) {
    model.validate();
    cfg.validate();
    grid.validate();

    ScanResult out;
    out.grid = grid;
    out.cells.resize(grid.size());
    parallel_for(grid.size(), opts.threads, [&](std::size_t idx) {
        ScanCell& c = out.cells[idx];
        c.x = grid.x(idx % grid.nx);
        c.z = grid.z(idx / grid.nx);
        try {
            c.truth = weak_momentum(model, c.x, c.z);
        } catch (const NodeError&) {
            c.status = CellStatus::node;
            return;
        }
        c.record = simulate_measurement(c.truth.k_w, cfg, opts.shots, opts.seed, idx);
        c.record.x = c.x;
        c.record.z = c.z;
        if (cfg.epsilon * std::abs(c.truth.k_w.real()) >= M_PI / 2) {
            c.status = CellStatus::branch;
            return;
        }
        try {
            if (opts.mode == ReconstructionMode::small_coupling) {
                c.reconstructed = reconstruct_small_coupling(c.record, cfg);
            } else {
                const auto r = reconstruct_exact(c.record, cfg);
                c.reconstructed = r.w;
                c.exact_residual = r.residual;
            }
        } catch (const BranchError&) {
            c.status = CellStatus::branch;
        }
    });

    std::vector<double> truth(grid.size()), rec(grid.size());
    std::vector<CellStatus> status(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        status[i] = out.cells[i].status;
        if (status[i] != CellStatus::ok) ++out.masked_cells;
        truth[i] = status[i] == CellStatus::ok ? out.cells[i].truth.k_w.real() : 0.0;
        rec[i] = status[i] == CellStatus::ok ? out.cells[i].reconstructed.real() : 0.0;
    }
    const GridField true_field(grid, std::move(truth), status);
    const GridField rec_field(grid, std::move(rec), status);

    FlowOptions flow = opts.flow;
    flow.x_min = std::max(flow.x_min, grid.x_min);
    flow.x_max = std::min(flow.x_max, grid.x_max);
    const std::vector<double> xs = launch_points(model, opts.launch, grid.z_min);
    const double k = model.wavenumber;
    out.true_lines.resize(xs.size());
    out.reconstructed_lines.resize(xs.size());
    parallel_for(xs.size(), opts.threads, [&](std::size_t i) {
        const double weight = std::norm(envelope(model, xs[i], grid.z_min));
        out.true_lines[i] = trace_streamline([&](double x, double z) { return true_field(x, z) / k; }, xs[i],
                                             grid.z_min, grid.z_max, flow);
        out.reconstructed_lines[i] = trace_streamline([&](double x, double z) { return rec_field(x, z) / k; },
                                                      xs[i], grid.z_min, grid.z_max, flow);
        out.true_lines[i].start_weight = weight;
        out.reconstructed_lines[i].start_weight = weight;
    });
    out.rms_deviation = rms_line_deviation(out.reconstructed_lines, out.true_lines, &out.paired_points);
    return out;
}

}  // namespace weakflow

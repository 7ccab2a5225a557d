#include "weakflow/weakfield.hpp"

#include <algorithm>
#include <cmath>

#include "weakflow/errors.hpp"
#include "weakflow/kernels.hpp"
#include "weakflow/parallel.hpp"

namespace weakflow {

namespace {

constexpr cplx I{0.0, 1.0};
constexpr double node_fraction = 1e-12;

std::string at(double x, double z) {
    return " at x=" + std::to_string(x) + ", z=" + std::to_string(z);
}

}  // namespace

double node_threshold(const BeamModel& model, double z) { return node_fraction * model.peak_bound(z); }

cplx weak_wavenumber(const BeamModel& model, double x, double z) {
    // Amplitudes are rescaled first so the ratio, and everything built on it,
    // does not depend on the overall photon content.
    const BeamModel unit = model.with_unit_peak_amplitude();
    const EnvelopeJet jet = envelope_jet(unit, x, 0.0, z);
    if (std::abs(jet.u) <= node_threshold(unit, z)) throw NodeError("interference null" + at(x, z), x, z);
    return weak_wavenumber(jet.u, jet.du_dx);
}

cplx weak_wavenumber(cplx u, cplx du_dx) { return -I * du_dx / u; }

double flow_slope(const BeamModel& model, double x, double z) {
    return weak_wavenumber(model, x, z).real() / model.wavenumber;
}

WeakValueSample weak_momentum(const BeamModel& model, double x, double z) {
    const double k = model.wavenumber;
    const EnvelopeJet jet = envelope_jet(model, x, 0.0, z);
    if (std::abs(jet.u) <= node_threshold(model, z)) throw NodeError("interference null" + at(x, z), x, z);
    const FieldSample f = fields_at(model, x, 0.0, z);

    WeakValueSample s;
    s.x = x;
    s.z = z;
    s.k_w = weak_wavenumber(model, x, z);
    for (int j = 0; j < 3; ++j) {
        cplx acc = 0.0;
        for (int m = 0; m < 2; ++m) acc += std::conj(f.E(m)) * f.grad_A(j, m);
        s.S_w(j) = acc;
    }

    // Laplacian of u e^{ikz}, divided by the carrier
    const cplx lap = jet.d2u_dx2 + jet.d2u_dy2 + jet.d2u_dz2 + 2.0 * I * k * jet.du_dz - k * k * jet.u;
    const cplx carrier = std::polar(1.0, k * z);
    double a_lap = 0.0;
    for (int m = 0; m < 2; ++m) {
        const cplx zeta = m == 0 ? model.polarization.zeta_x : model.polarization.zeta_y;
        a_lap += std::real(std::conj(f.A(m)) * (-zeta * lap * carrier));
    }
    const double e2 = f.E.squaredNorm();
    const double b2 = f.B.squaredNorm();
    s.W_w = 0.5 * (e2 + a_lap);
    s.Q_density = s.W_w - 0.5 * (e2 + b2);
    s.intensity = f.A.squaredNorm();
    return s;
}

const char* flag_name(LineFlag flag) {
    switch (flag) {
        case LineFlag::ok:
            return "ok";
        case LineFlag::truncated:
            return "truncated";
        case LineFlag::node:
            return "node";
        case LineFlag::step_failure:
            return "step_failure";
    }
    return "unknown";
}

FlowLine trace_streamline(const SlopeField& slope, double x0, double z0, double z1, const FlowOptions& opts) {
    if (!(z1 > z0)) throw DomainError("flow line needs z1 > z0");
    if (opts.samples < 2) throw DomainError("flow line needs at least two samples");
    FlowLine line;
    if (!(x0 >= opts.x_min && x0 <= opts.x_max)) {
        line.flag = LineFlag::truncated;
        line.message = "launch point outside the domain";
        return line;
    }

    Dopri5 ode(
        [&](double z, const Dopri5::Vector& y, Dopri5::Vector& dy) { dy[0] = slope(y[0], z); }, opts.control);
    Dopri5::Vector y(1);
    y[0] = x0;
    double z = z0;
    try {
        slope(x0, z0);  // launch-point node check
    } catch (const NodeError& e) {
        line.flag = LineFlag::node;
        line.message = e.what();
        return line;
    }
    line.z.push_back(z0);
    line.x.push_back(x0);

    const std::size_t n = opts.samples;
    for (std::size_t i = 1; i < n; ++i) {
        const double z_next = i + 1 == n ? z1 : z0 + (z1 - z0) * static_cast<double>(i) / static_cast<double>(n - 1);
        try {
            ode.advance(z, y, z_next);
        } catch (const NodeError& e) {
            line.flag = LineFlag::node;
            line.message = e.what();
            break;
        } catch (const StepFailure& e) {
            line.flag = LineFlag::step_failure;
            line.message = e.what();
            break;
        }
        if (!(y[0] >= opts.x_min && y[0] <= opts.x_max)) {
            line.flag = LineFlag::truncated;
            line.message = "left the domain at z=" + std::to_string(z);
            break;
        }
        line.z.push_back(z);
        line.x.push_back(y[0]);
    }
    line.stats = ode.stats();
    return line;
}

FlowLine trace_flow_line(const BeamModel& model, double x0, double z0, double z1, const FlowOptions& opts) {
    model.validate();
    const BeamModel unit = model.with_unit_peak_amplitude();
    FlowLine line = trace_streamline([&](double x, double z) { return flow_slope(unit, x, z); }, x0, z0, z1, opts);
    line.start_weight = std::norm(envelope(model, x0, z0));
    return line;
}

FlowLine integrate_flow_line(const BeamModel& model, double x0, double z0, double z1, const FlowOptions& opts) {
    FlowLine line = trace_flow_line(model, x0, z0, z1, opts);
    if (line.flag == LineFlag::node) {
        const double x = line.x.empty() ? x0 : line.x.back();
        const double z = line.z.empty() ? z0 : line.z.back();
        throw NodeError(line.message, x, z);
    }
    if (line.flag == LineFlag::step_failure) throw StepFailure(line.message);
    return line;
}

std::vector<double> launch_points(const BeamModel& model, const LaunchSpec& spec, double z0) {
    if (spec.count == 0) return {};
    if (!(spec.x_max >= spec.x_min)) throw DomainError("launch range needs x_min <= x_max");
    std::vector<double> xs(spec.count);
    if (spec.kind == LaunchKind::uniform || spec.x_max == spec.x_min) {
        if (spec.count == 1) {
            xs[0] = 0.5 * (spec.x_min + spec.x_max);
            return xs;
        }
        const double dx = (spec.x_max - spec.x_min) / static_cast<double>(spec.count - 1);
        for (std::size_t i = 0; i < spec.count; ++i) xs[i] = spec.x_min + dx * static_cast<double>(i);
        xs.back() = spec.x_max;
        return xs;
    }

    const std::size_t m = std::max<std::size_t>(spec.profile_points, 3);
    std::vector<double> grid(m);
    const double h = (spec.x_max - spec.x_min) / static_cast<double>(m - 1);
    for (std::size_t i = 0; i < m; ++i) grid[i] = spec.x_min + h * static_cast<double>(i);
    const LineSample prof = envelope_profile(model.with_unit_peak_amplitude(), z0, grid);

    std::vector<double> cdf(m, 0.0);
    for (std::size_t i = 1; i < m; ++i)
        cdf[i] = cdf[i - 1] + 0.5 * h * (std::norm(prof.u[i - 1]) + std::norm(prof.u[i]));
    const double total = cdf.back();
    if (!(total > 0.0)) throw DomainError("no intensity in the launch range");

    std::size_t seg = 1;
    for (std::size_t i = 0; i < spec.count; ++i) {
        const double target = total * (static_cast<double>(i) + 0.5) / static_cast<double>(spec.count);
        while (seg + 1 < m && cdf[seg] < target) ++seg;
        const double lo = cdf[seg - 1], hi = cdf[seg];
        const double f = hi > lo ? (target - lo) / (hi - lo) : 0.5;
        xs[i] = grid[seg - 1] + f * h;
    }
    return xs;
}

std::vector<FlowLine> flow_bundle(const BeamModel& model, const LaunchSpec& spec, double z0, double z1,
                                  const FlowOptions& opts, unsigned threads) {
    model.validate();
    const std::vector<double> xs = launch_points(model, spec, z0);
    std::vector<FlowLine> lines(xs.size());
    parallel_for(xs.size(), threads, [&](std::size_t i) { lines[i] = trace_flow_line(model, xs[i], z0, z1, opts); });
    return lines;
}

}  // namespace weakflow

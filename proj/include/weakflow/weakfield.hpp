#pragma once

// Weak values of the field momentum and energy densities for a one-photon
// (or coherent) beam, and the mean-momentum flow lines they define.
//
// For a beam in a single polarization mode every weak value is a ratio of
// bilinears in the mode function, so the transverse weak wavenumber reduces to
// k_w = -i (du/dx) / u. Its real part is the local phase gradient and fixes the
// flow direction dx/dz = Re k_w / k.

#include <cstddef>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "weakflow/beam.hpp"
#include "weakflow/ode.hpp"

namespace weakflow {

struct WeakValueSample {
    double x = 0.0;
    double z = 0.0;
    cplx k_w;
    Eigen::Vector3cd S_w;   ///< sum_m conj(E_m) d_j A_m
    double W_w = 0.0;       ///< real weak energy density
    double Q_density = 0.0; ///< W_w - (|E|^2 + |B|^2) / 2
    double intensity = 0.0; ///< |A|^2
};

/// Node guard at z: 1e-12 of the largest |u| any x can reach.
double node_threshold(const BeamModel& model, double z);

/// -i u_x / u on the line y = 0. Throws NodeError at interference nulls.
cplx weak_wavenumber(const BeamModel& model, double x, double z);

/// -i u_x / u from samples of any mode function and its x-derivative.
cplx weak_wavenumber(cplx u, cplx du_dx);

WeakValueSample weak_momentum(const BeamModel& model, double x, double z);

/// dx/dz of the flow line through (x, z).
double flow_slope(const BeamModel& model, double x, double z);

enum class LineFlag { ok, truncated, node, step_failure };
const char* flag_name(LineFlag flag);

struct FlowLine {
    std::vector<double> z;
    std::vector<double> x;
    double start_weight = 0.0;
    LineFlag flag = LineFlag::ok;
    std::string message;
    StepStats stats;
};

struct FlowOptions {
    StepControl control{};
    std::size_t samples = 101;  ///< recorded points, z0 and z1 included
    double x_min = -std::numeric_limits<double>::infinity();
    double x_max = std::numeric_limits<double>::infinity();
};

using SlopeField = std::function<double(double x, double z)>;

/// Integrates dx/dz = slope(x, z). Nodes, step failures and exits from
/// [x_min, x_max] end the line early with the matching flag; the points
/// recorded up to then are kept.
FlowLine trace_streamline(const SlopeField& slope, double x0, double z0, double z1, const FlowOptions& opts);

/// Flagging variant for a beam; used by bundles.
FlowLine trace_flow_line(const BeamModel& model, double x0, double z0, double z1, const FlowOptions& opts = {});

/// Throwing variant: NodeError if the launch point or the path meets a null,
/// StepFailure on step underflow. Leaving the x-range returns a truncated line.
FlowLine integrate_flow_line(const BeamModel& model, double x0, double z0, double z1, const FlowOptions& opts = {});

enum class LaunchKind { uniform, intensity };

struct LaunchSpec {
    LaunchKind kind = LaunchKind::uniform;
    std::size_t count = 41;
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t profile_points = 20001;  ///< resolution of the sampled intensity profile
};

/// Uniform: evenly spaced over [x_min, x_max] (midpoint for one line).
/// Intensity: deterministic quantiles (i + 1/2)/N of |u(x, z0)|^2 on [x_min, x_max].
std::vector<double> launch_points(const BeamModel& model, const LaunchSpec& spec, double z0);

/// One line per launch point, in launch order. Per-line failures are flagged,
/// never thrown; start_weight is |u|^2 at the launch point.
std::vector<FlowLine> flow_bundle(const BeamModel& model, const LaunchSpec& spec, double z0, double z1,
                                  const FlowOptions& opts = {}, unsigned threads = 1);

}  // namespace weakflow

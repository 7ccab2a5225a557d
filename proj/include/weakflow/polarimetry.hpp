#pragma once

// Thin-calcite weak measurement of the transverse weak wavenumber.
//
// The probe starts diagonally polarized. The crystal rotates it by an angle
// proportional to the weak value w, leaving a|H> + b|V> with
// a = exp(-i eps w / 2) / sqrt(2) and b = exp(+i eps w / 2) / sqrt(2).
// Complex w turns the rotation into a partial absorption, so the circular
// analyzer sees sin(eps Re w) / cosh(eps Im w) and the linear one
// tanh(eps Im w). |R> = (|H> + i|V>) / sqrt(2).

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "weakflow/beam.hpp"
#include "weakflow/weakfield.hpp"

namespace weakflow {

struct CouplingConfig {
    double epsilon = 0.01;  ///< rotation per unit weak value
    double xi = 100.0;      ///< reconstruction scale, 1/epsilon unless calibrated
    bool clamp = false;     ///< clamp |asymmetry| to 1 instead of raising BranchError

    static CouplingConfig from_epsilon(double epsilon);
    void validate() const;
};

struct MeasurementRecord {
    double x = 0.0;
    double z = 0.0;
    double I_R = 0.0;
    double I_L = 0.0;
    double I_H = 0.0;
    double I_V = 0.0;
    std::optional<std::uint64_t> shots;  ///< photons per analyzer basis when noisy
    std::uint64_t seed = 0;

    double circular_asymmetry() const;  ///< (I_R - I_L) / (I_R + I_L)
    double linear_asymmetry() const;    ///< (I_H - I_V) / (I_H + I_V)
};

/// Normalized analyzer probabilities {R, L, H, V} for weak value w.
std::array<double, 4> analyzer_probabilities(cplx w, double epsilon);

/// Unnormalized final spinor (a, b).
std::array<cplx, 2> final_spinor(cplx w, double epsilon);

/// Expectations of S_x = (|H><H| - |V><V|)/2, S_y = |H><V| + |V><H| and
/// S_z = |R><R| - |L><L| in the final state, normalized by its norm.
struct StokesExpectation {
    double S_x = 0.0;
    double S_y = 0.0;
    double S_z = 0.0;
    double norm = 0.0;  ///< <psi|psi> before normalization
};
StokesExpectation stokes_expectation(cplx w, double epsilon);

/// Noiseless when shots is empty. With shots, each basis receives that many
/// photons on average and each channel is Poisson distributed; the stream is
/// fixed by (seed, stream).
MeasurementRecord simulate_measurement(cplx w, const CouplingConfig& cfg, std::optional<std::uint64_t> shots = {},
                                       std::uint64_t seed = 0, std::uint64_t stream = 0);

/// xi asin(circular) + i xi asinh(linear). Throws BranchError when
/// |circular| > 1 unless cfg.clamp is set.
cplx reconstruct_small_coupling(const MeasurementRecord& rec, const CouplingConfig& cfg);

struct ExactReconstruction {
    cplx w;
    double residual = 0.0;  ///< max asymmetry mismatch after re-simulating w
};

/// Inverts the forward model: tanh(eps Im w) = linear, sin(eps Re w) =
/// circular cosh(eps Im w). Uses xi in place of 1/eps. Throws BranchError
/// outside the principal branch.
ExactReconstruction reconstruct_exact(const MeasurementRecord& rec, const CouplingConfig& cfg);

/// xi from a probe of known weak value, e.g. a plane wave tilted by theta
/// (w = k theta), measured through the same crystal.
double calibrate_xi(const MeasurementRecord& rec, cplx known_w);

enum class ReconstructionMode { small_coupling, exact };

struct GridSpec {
    double x_min = -1.0;
    double x_max = 1.0;
    std::size_t nx = 2;
    double z_min = 0.0;
    double z_max = 1.0;
    std::size_t nz = 2;

    void validate() const;
    double x(std::size_t i) const;
    double z(std::size_t j) const;
    std::size_t index(std::size_t i, std::size_t j) const { return j * nx + i; }
    std::size_t size() const { return nx * nz; }
};

enum class CellStatus : std::uint8_t { ok, node, branch };
const char* cell_status_name(CellStatus s);

/// Scalar field on a grid with masked cells; Catmull-Rom bicubic
/// interpolation. A masked cell inside the 4x4 stencil raises NodeError.
class GridField {
public:
    GridField(GridSpec grid, std::vector<double> values, std::vector<CellStatus> status);
    double operator()(double x, double z) const;
    const GridSpec& grid() const { return grid_; }

private:
    GridSpec grid_;
    std::vector<double> values_;
    std::vector<CellStatus> status_;
};

struct ScanCell {
    double x = 0.0;
    double z = 0.0;
    CellStatus status = CellStatus::ok;
    WeakValueSample truth;  ///< valid unless status is node
    MeasurementRecord record;
    cplx reconstructed{std::nan(""), std::nan("")};
    double exact_residual = 0.0;
};

struct ScanOptions {
    ReconstructionMode mode = ReconstructionMode::small_coupling;
    std::optional<std::uint64_t> shots;
    std::uint64_t seed = 0;
    LaunchSpec launch{};
    FlowOptions flow{};
    unsigned threads = 1;
};

struct ScanResult {
    GridSpec grid;
    std::vector<ScanCell> cells;
    std::vector<FlowLine> true_lines;
    std::vector<FlowLine> reconstructed_lines;
    double rms_deviation = 0.0;  ///< sqrt(mean (x_rec - x_true)^2) over paired points
    std::size_t paired_points = 0;
    std::size_t masked_cells = 0;
};

/// True weak values on the grid, simulated records, reconstruction, and flow
/// lines integrated through interpolants of both fields from the same launch
/// points (z from grid.z_min to grid.z_max).
ScanResult scan_and_reconstruct(const BeamModel& model, const CouplingConfig& cfg, const GridSpec& grid,
                                const ScanOptions& opts = {});

/// RMS transverse deviation between paired lines, over points both lines reached.
double rms_line_deviation(const std::vector<FlowLine>& a, const std::vector<FlowLine>& b, std::size_t* paired = nullptr);

}  // namespace weakflow

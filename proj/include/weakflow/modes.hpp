#pragma once

// Bohm field theory on a finite set of box modes.
//
// The transverse vector potential is A(r) = V^{-1/2} sum_m eps_m q_m e^{i k_m . r}
// with q_{-k,mu} = conj(q_{k,mu}). Each conjugate pair (k, -k) therefore carries
// one complex beable z = q_{k,mu}, taken on the mode whose k is lexicographically
// positive. In these variables the field Hamiltonian is
//
//     H = sum_pairs ( -d^2/dz dz* + kappa^2 |z|^2 ),      kappa = |k|,
//
// and with Psi = R e^{iS} the guidance law is dz/dt = dS/dz*, the quantum
// potential Q = -sum (1/R) d^2 R/dz dz*, and
//
//     dS/dt + sum |dS/dz*|^2 + sum kappa^2 |z|^2 + Q = 0
//     d(R^2)/dt + sum [ d/dz (R^2 dS/dz*) + c.c. ] = 0.
//
// Summed over both members of every pair these are the usual all-mode
// expressions, e.g. Q_ground = sum_modes (kappa/2 - kappa^2 |q|^2 / 2) and a
// zero-point energy of sum_modes kappa/2.

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "weakflow/beam.hpp"
#include "weakflow/ode.hpp"

namespace weakflow {

struct Mode {
    Eigen::Vector3d k = Eigen::Vector3d::UnitZ();
    int mu = 1;
    Eigen::Vector3d polarization = Eigen::Vector3d::UnitX();

    double kappa() const { return k.norm(); }
};

class ModeSet {
public:
    /// Validates transversality, kappa > 0 and closure under k -> -k (same mu,
    /// same polarization vector).
    ModeSet(std::vector<Mode> modes, double volume);

    /// Cube of side L. For every integer triple n (and -n, added if missing)
    /// and each requested polarization, k = 2 pi n / L. eps_1 is the unit
    /// vector along k x z (x when k is along z); eps_2 = k^ x eps_1. The -k mode
    /// reuses the vectors of +k.
    static ModeSet box(double side, const std::vector<Eigen::Vector3i>& wave_numbers, bool both_polarizations = false);

    std::size_t size() const { return modes_.size(); }
    const Mode& operator[](std::size_t i) const { return modes_[i]; }
    double volume() const { return volume_; }

    std::size_t partner(std::size_t i) const { return partner_[i]; }
    bool is_representative(std::size_t i) const { return representative_[i]; }
    /// Representative mode index of each conjugate pair.
    const std::vector<std::size_t>& pairs() const { return pairs_; }
    std::size_t pair_of(std::size_t i) const { return pair_of_[i]; }

    /// Index of the mode with this wave vector and polarization index, or size().
    std::size_t find(const Eigen::Vector3d& k, int mu, double tol = 1e-12) const;

    /// sum over pairs of kappa (= sum over modes of kappa / 2)
    double zero_point_energy() const;

private:
    std::vector<Mode> modes_;
    double volume_;
    std::vector<std::size_t> partner_;
    std::vector<bool> representative_;
    std::vector<std::size_t> pairs_;
    std::vector<std::size_t> pair_of_;
};

/// Mode amplitudes at time t, one entry per mode.
struct ModeConfiguration {
    std::vector<cplx> q;
    double t = 0.0;

    /// Builds the full amplitude list from one value per pair.
    static ModeConfiguration from_pairs(const ModeSet& modes, std::span<const cplx> z, double t = 0.0);
    /// Checks q_partner = conj(q) to 1e-12 relative and then imposes it exactly.
    static ModeConfiguration from_modes(const ModeSet& modes, std::vector<cplx> q, double t = 0.0);

    std::vector<cplx> pair_values(const ModeSet& modes) const;
};

class FieldState {
public:
    enum class Kind { ground, single_photon, coherent };

    static FieldState ground(ModeSet modes);
    /// Weights f over all modes with sum |f|^2 = 1 (1e-12), center k'.
    static FieldState single_photon(ModeSet modes, std::vector<cplx> weights, Eigen::Vector3d center);
    /// One quantum in a single plane mode.
    static FieldState single_photon(ModeSet modes, std::size_t mode);
    /// Coherent amplitudes alpha per mode, in the units of q: the beable
    /// centre of a pair moves as alpha_k e^{-i kappa t} + conj(alpha_{-k}) e^{i kappa t}.
    static FieldState coherent(ModeSet modes, std::vector<cplx> alpha);

    Kind kind() const { return kind_; }
    const ModeSet& modes() const { return modes_; }
    const std::vector<cplx>& weights() const { return weights_; }
    const Eigen::Vector3d& center() const { return center_; }

private:
    FieldState(Kind kind, ModeSet modes, std::vector<cplx> weights, Eigen::Vector3d center);

    Kind kind_;
    ModeSet modes_;
    std::vector<cplx> weights_;
    Eigen::Vector3d center_ = Eigen::Vector3d::Zero();
};

/// Normalized weights f proportional to exp(-|k - k'|^2 / (4 sigma_k^2)) over
/// the modes with polarization index mu.
std::vector<cplx> gaussian_packet(const ModeSet& modes, const Eigen::Vector3d& center, double sigma_k, int mu = 1);

struct AmplitudePhase {
    double R = 0.0;
    double S = 0.0;  ///< undefined where R = 0
};
AmplitudePhase amplitude_phase(const FieldState& state, const ModeConfiguration& cfg);

double quantum_potential(const FieldState& state, const ModeConfiguration& cfg);
double hj_residual(const FieldState& state, const ModeConfiguration& cfg);
/// Continuity residual divided by R^2, so it is comparable across configurations.
double continuity_residual(const FieldState& state, const ModeConfiguration& cfg);

/// dq/dt = dS/dq* for every mode (partners get the conjugate).
std::vector<cplx> guidance_velocity(const FieldState& state, const ModeConfiguration& cfg);

Eigen::Vector3cd vector_potential(const ModeSet& modes, const ModeConfiguration& cfg, const Eigen::Vector3d& r);
Eigen::Vector3d electric_field(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r);
Eigen::Vector3d magnetic_field(const ModeSet& modes, const ModeConfiguration& cfg, const Eigen::Vector3d& r);

/// (|E|^2 + |B|^2)/2 + Q/V; the quantum potential is a configuration-level
/// energy spread uniformly over the box. normal_ordered subtracts the zero-point
/// density.
double energy_density(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r,
                      bool normal_ordered = false);
/// E x B with E from the guidance velocities.
Eigen::Vector3d momentum_density(const FieldState& state, const ModeConfiguration& cfg, const Eigen::Vector3d& r);

/// Box integrals in closed form at a configuration.
double field_energy(const FieldState& state, const ModeConfiguration& cfg, bool normal_ordered = false);
Eigen::Vector3d total_momentum(const FieldState& state, const ModeConfiguration& cfg);

/// Energy eigenvalue (ground, single photon) or mean energy (coherent).
double total_energy(const FieldState& state, bool normal_ordered = false);

struct BeableTrajectory {
    std::vector<ModeConfiguration> points;
    StepStats stats;
};

/// Integrates dz/dt = dS/dz* from cfg0.t to t1, recording `samples` evenly
/// spaced configurations (both ends included).
BeableTrajectory evolve_beables(const FieldState& state, const ModeConfiguration& cfg0, double t1,
                                const StepControl& control = {}, std::size_t samples = 101);

/// max over pairs of |z'' + kappa^2 z + dQ/dz*|, with z'' taken along the
/// guidance flow and dQ/dz* by central differences of step h.
double newton_residual(const FieldState& state, const ModeConfiguration& cfg, double h = 1e-5);

/// Probability density of absorbing the photon at r, normalized over the box;
/// zero for the ground state.
double detection_probability(const FieldState& state, const Eigen::Vector3d& r, double t = 0.0);

/// Q(a) + Q(b) - Q(a with pair j from b) - Q(b with pair j from a). Zero for
/// every pair of configurations when Q splits into a term in pair j plus a
/// term in the other pairs; pair_j indexes ModeSet::pairs().
double separability_defect(const FieldState& state, const ModeConfiguration& a, const ModeConfiguration& b,
                           std::size_t pair_j);

}  // namespace weakflow

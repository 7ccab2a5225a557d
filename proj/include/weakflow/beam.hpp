#pragma once

// Paraxial two-slit Gaussian beam.
//
// The transverse envelope at (x, y, z) is
//
//     u = (1/q) * sum_j a_j exp(ik ((x - c_j)^2 + y^2) / (2q)),   q(z) = z + q0,
//
// with 1/q0 = 1/R0 + i/zR and zR = k sigma0^2. The carrier exp(i(kz - wt)) is
// folded out; the time slice is fixed. Natural units (c = hbar = 1), so the
// angular frequency equals k.

#include <array>
#include <complex>

#include <Eigen/Dense>

namespace weakflow {

using cplx = std::complex<double>;

struct PolarizationSpinor {
    cplx zeta_x{1.0, 0.0};
    cplx zeta_y{0.0, 0.0};

    double norm() const;
    /// Throws DomainError for the zero spinor.
    PolarizationSpinor normalized() const;

    static PolarizationSpinor horizontal();
    static PolarizationSpinor vertical();
    static PolarizationSpinor diagonal();
    /// (|H> + i|V>)/sqrt(2)
    static PolarizationSpinor right_circular();
    static PolarizationSpinor left_circular();
};

struct BeamModel {
    double wavenumber = 1.0;
    double sigma0 = 1.0;
    double slit_separation = 0.0;
    cplx amplitude_plus{1.0, 0.0};   ///< slit centred at +d/2
    cplx amplitude_minus{0.0, 0.0};  ///< slit centred at -d/2
    double relative_phase = 0.0;     ///< applied to amplitude_minus
    double initial_curvature = 0.0;  ///< 1/R0 of the wavefront at z = 0; 0 is flat
    PolarizationSpinor polarization{};

    /// Throws DomainError unless k > 0, sigma0 > 0, d >= 0 and all inputs are finite.
    void validate() const;

    double rayleigh_range() const { return wavenumber * sigma0 * sigma0; }
    cplx beam_parameter(double z) const;
    /// Amplitude 1/e half-width of a single beamlet: |u| ~ exp(-x^2 / (2 w^2)).
    double width(double z) const;

    std::array<cplx, 2> slit_amplitudes() const;
    std::array<double, 2> slit_centers() const { return {0.5 * slit_separation, -0.5 * slit_separation}; }

    /// Same beam with the slit amplitudes divided by the larger modulus.
    BeamModel with_unit_peak_amplitude() const;
    /// Upper bound of |u(x, 0, z)| over x.
    double peak_bound(double z) const;
};

cplx envelope(const BeamModel& model, double x, double z);

/// u and its closed-form partial derivatives at (x, y, z).
struct EnvelopeJet {
    cplx u;
    cplx du_dx;
    cplx du_dy;
    cplx du_dz;
    cplx d2u_dx2;
    cplx d2u_dy2;
    cplx d2u_dz2;
};

EnvelopeJet envelope_jet(const BeamModel& model, double x, double y, double z);

struct FieldSample {
    Eigen::Vector3d position;
    Eigen::Vector2cd A;  ///< transverse vector potential, carrier included
    Eigen::Vector3cd E;
    Eigen::Vector3cd B;
    Eigen::Matrix3cd grad_A;  ///< grad_A(i, j) = dA_j/dx_i; A_z = 0
};

/// A = u * zeta * exp(ikz), E = i k A, B = curl A, all from the closed-form jet.
FieldSample fields_at(const BeamModel& model, double x, double y, double z);

}  // namespace weakflow

#include "weakflow/beam.hpp"

#include <cmath>

#include "weakflow/errors.hpp"

namespace weakflow {

namespace {

constexpr cplx I{0.0, 1.0};

bool finite(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

}  // namespace

double PolarizationSpinor::norm() const { return std::sqrt(std::norm(zeta_x) + std::norm(zeta_y)); }

PolarizationSpinor PolarizationSpinor::normalized() const {
    const double n = norm();
    if (!(n > 0.0) || !std::isfinite(n)) throw DomainError("polarization spinor has zero or non-finite norm");
    return {zeta_x / n, zeta_y / n};
}

PolarizationSpinor PolarizationSpinor::horizontal() { return {1.0, 0.0}; }
PolarizationSpinor PolarizationSpinor::vertical() { return {0.0, 1.0}; }
PolarizationSpinor PolarizationSpinor::diagonal() { return {M_SQRT1_2, M_SQRT1_2}; }
PolarizationSpinor PolarizationSpinor::right_circular() { return {M_SQRT1_2, cplx(0.0, M_SQRT1_2)}; }
PolarizationSpinor PolarizationSpinor::left_circular() { return {M_SQRT1_2, cplx(0.0, -M_SQRT1_2)}; }

void BeamModel::validate() const {
    if (!(wavenumber > 0.0) || !std::isfinite(wavenumber)) throw DomainError("wavenumber must be positive");
    if (!(sigma0 > 0.0) || !std::isfinite(sigma0)) throw DomainError("sigma0 must be positive");
    if (!(slit_separation >= 0.0) || !std::isfinite(slit_separation))
        throw DomainError("slit separation must be non-negative");
    if (!finite(amplitude_plus) || !finite(amplitude_minus)) throw DomainError("slit amplitudes must be finite");
    if (amplitude_plus == 0.0 && amplitude_minus == 0.0) throw DomainError("both slit amplitudes are zero");
    if (!std::isfinite(relative_phase) || !std::isfinite(initial_curvature))
        throw DomainError("phase and curvature must be finite");
    if (!finite(polarization.zeta_x) || !finite(polarization.zeta_y) || polarization.norm() == 0.0)
        throw DomainError("polarization spinor must be finite and non-zero");
}

cplx BeamModel::beam_parameter(double z) const {
    const cplx inv_q0{initial_curvature, 1.0 / rayleigh_range()};
    return z + 1.0 / inv_q0;
}

double BeamModel::width(double z) const {
    const double b = (1.0 / beam_parameter(z)).imag();
    return 1.0 / std::sqrt(wavenumber * b);
}

std::array<cplx, 2> BeamModel::slit_amplitudes() const {
    return {amplitude_plus, amplitude_minus * std::polar(1.0, relative_phase)};
}

BeamModel BeamModel::with_unit_peak_amplitude() const {
    BeamModel out = *this;
    const double scale = std::max(std::abs(amplitude_plus), std::abs(amplitude_minus));
    if (!(scale > 0.0)) throw DomainError("both slit amplitudes are zero");
    out.amplitude_plus = amplitude_plus / scale;
    out.amplitude_minus = amplitude_minus / scale;
    return out;
}

double BeamModel::peak_bound(double z) const {
    const auto a = slit_amplitudes();
    return (std::abs(a[0]) + std::abs(a[1])) / std::abs(beam_parameter(z));
}

cplx envelope(const BeamModel& model, double x, double z) {
    const cplx q = model.beam_parameter(z);
    const auto a = model.slit_amplitudes();
    const auto c = model.slit_centers();
    const cplx alpha = I * model.wavenumber / (2.0 * q);
    cplx sum{0.0, 0.0};
    for (int j = 0; j < 2; ++j) {
        if (a[j] == 0.0) continue;
        const double s = x - c[j];
        sum += a[j] * std::exp(alpha * (s * s));
    }
    const cplx u = sum / q;
    if (!finite(u)) throw DomainError("envelope is not finite");
    return u;
}

EnvelopeJet envelope_jet(const BeamModel& model, double x, double y, double z) {
    const double k = model.wavenumber;
    const cplx q = model.beam_parameter(z);
    const cplx inv_q = 1.0 / q;
    const auto a = model.slit_amplitudes();
    const auto c = model.slit_centers();
    const cplx alpha = I * k * inv_q / 2.0;

    EnvelopeJet jet{};
    const cplx gy = I * k * y * inv_q;  // d/dy of the exponent
    for (int j = 0; j < 2; ++j) {
        if (a[j] == 0.0) continue;
        const double s = x - c[j];
        const double r2 = s * s + y * y;
        const cplx g = a[j] * std::exp(alpha * r2) * inv_q;
        const cplx gx = I * k * s * inv_q;
        // d/dz log g and its z-derivative
        const cplx h = -inv_q - alpha * r2 * inv_q;
        const cplx dh = inv_q * inv_q + I * k * r2 * inv_q * inv_q * inv_q;

        jet.u += g;
        jet.du_dx += gx * g;
        jet.du_dy += gy * g;
        jet.du_dz += h * g;
        jet.d2u_dx2 += (I * k * inv_q + gx * gx) * g;
        jet.d2u_dy2 += (I * k * inv_q + gy * gy) * g;
        jet.d2u_dz2 += (h * h + dh) * g;
    }
    if (!finite(jet.u) || !finite(jet.du_dz) || !finite(jet.d2u_dz2)) throw DomainError("envelope is not finite");
    return jet;
}

FieldSample fields_at(const BeamModel& model, double x, double y, double z) {
    const double k = model.wavenumber;
    const EnvelopeJet jet = envelope_jet(model, x, y, z);
    const cplx carrier = std::polar(1.0, k * z);
    const cplx zx = model.polarization.zeta_x;
    const cplx zy = model.polarization.zeta_y;

    FieldSample f;
    f.position = {x, y, z};
    f.A = Eigen::Vector2cd(zx * jet.u * carrier, zy * jet.u * carrier);

    // d(u e^{ikz}) along x, y, z
    const cplx px = jet.du_dx * carrier;
    const cplx py = jet.du_dy * carrier;
    const cplx pz = (jet.du_dz + I * k * jet.u) * carrier;
    f.grad_A.setZero();
    f.grad_A(0, 0) = zx * px;
    f.grad_A(1, 0) = zx * py;
    f.grad_A(2, 0) = zx * pz;
    f.grad_A(0, 1) = zy * px;
    f.grad_A(1, 1) = zy * py;
    f.grad_A(2, 1) = zy * pz;

    f.E = Eigen::Vector3cd(I * k * f.A(0), I * k * f.A(1), 0.0);
    // curl A with A = (Ax, Ay, 0)
    f.B = Eigen::Vector3cd(-f.grad_A(2, 1), f.grad_A(2, 0), f.grad_A(0, 1) - f.grad_A(1, 0));
    return f;
}

}  // namespace weakflow

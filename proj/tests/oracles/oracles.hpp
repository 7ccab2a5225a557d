#pragma once

// Independent reference computations for the tests. Nothing here calls into
// the library's evaluation code; the beam formula is restated from scratch.

#include <cmath>
#include <complex>
#include <functional>
#include <vector>

namespace oracle {

using cplx = std::complex<double>;

struct Beamlet {
    double center;
    cplx amplitude;
};

/// Paraxial Gaussian beamlets on y = 0, beam parameter q = z - i k s0^2 for
/// a flat wavefront at z = 0.
struct TwoSlit {
    double k;
    double sigma0;
    std::vector<Beamlet> beamlets;

    cplx q(double z) const { return cplx(z, -k * sigma0 * sigma0); }

    cplx operator()(double x, double z) const {
        const cplx qq = q(z);
        cplx sum = 0.0;
        for (const auto& b : beamlets) {
            const double s = x - b.center;
            sum += b.amplitude * std::exp(cplx(0.0, k) * s * s / (2.0 * qq));
        }
        return sum / qq;
    }
};

/// Five-point central difference.
inline double d1(const std::function<double(double)>& f, double x, double h) {
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h);
}

/// Five-point derivative of ln u, differencing log ratios so the phase never
/// wraps: returns d(ln u)/dx = d ln|u|/dx + i dS/dx.
inline cplx dlog(const std::function<cplx(double)>& u, double x, double h) {
    const cplx u0 = u(x);
    auto L = [&](double dx) { return std::log(u(x + dx) / u0); };
    return (8.0 * (L(h) - L(-h)) - (L(2 * h) - L(-2 * h))) / (12.0 * h);
}

/// Three-point second difference.
template <typename T, typename F>
T d2(F&& f, double x, double h) {
    return (f(x + h) - 2.0 * f(x) + f(x - h)) / (h * h);
}

/// One-dimensional paraxial propagation of a sampled field by FFT:
/// u(kx, z) = u(kx, 0) exp(-i kx^2 z / (2k)). Grid spacing dx, periodic.
std::vector<cplx> fresnel_propagate(const std::vector<cplx>& u0, double dx, double k, double z);

/// Zero crossings of samples f on the grid x, linearly interpolated.
std::vector<double> zero_crossings(const std::vector<double>& x, const std::vector<double>& f);

}  // namespace oracle

#pragma once

// Envelope and transverse derivative along a line of constant z.
//
// Grid scans and intensity profiles evaluate thousands of points that share
// one beam parameter q, so the per-point work reduces to
//
//     u(x)  = sum_j c_j exp(alpha (x - x_j)^2)
//     u'(x) = sum_j 2 alpha (x - x_j) c_j exp(alpha (x - x_j)^2)
//
// with c_j = a_j / q and alpha = ik / (2q). A scalar reference and an AVX2
// variant exist; the variant is chosen once at runtime.

#include <array>
#include <complex>
#include <span>
#include <vector>

#include "weakflow/beam.hpp"

namespace weakflow {

struct LineParams {
    std::array<double, 2> centers{};
    std::array<cplx, 2> coef{};
    cplx alpha{};
    int terms = 0;
};

LineParams line_params(const BeamModel& model, double z);

struct LineSpans {
    std::span<double> u_re;
    std::span<double> u_im;
    std::span<double> du_re;
    std::span<double> du_im;
};

enum class SimdLevel { scalar, avx2 };

/// Best level supported by this CPU and build, unless WEAKFLOW_SIMD=scalar|avx2
/// requests otherwise. Requests for an unavailable level fall back to scalar.
SimdLevel active_simd_level();
bool simd_level_available(SimdLevel level);
const char* simd_level_name(SimdLevel level);

void envelope_line(const LineParams& p, std::span<const double> x, const LineSpans& out);
void envelope_line(SimdLevel level, const LineParams& p, std::span<const double> x, const LineSpans& out);

/// Convenience wrapper: u and du/dx at every x for the given z.
struct LineSample {
    std::vector<cplx> u;
    std::vector<cplx> du_dx;
};
LineSample envelope_profile(const BeamModel& model, double z, std::span<const double> x);

namespace detail {
void envelope_line_scalar(const LineParams& p, std::span<const double> x, const LineSpans& out);
#if defined(WEAKFLOW_HAVE_AVX2)
void envelope_line_avx2(const LineParams& p, std::span<const double> x, const LineSpans& out);
#endif
}  // namespace detail

}  // namespace weakflow

#include "weakflow/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

#include "weakflow/errors.hpp"

namespace weakflow {

LineParams line_params(const BeamModel& model, double z) {
    const cplx q = model.beam_parameter(z);
    const auto a = model.slit_amplitudes();
    const auto c = model.slit_centers();
    LineParams p;
    p.alpha = cplx(0.0, model.wavenumber) / (2.0 * q);
    for (int j = 0; j < 2; ++j) {
        if (a[j] == 0.0) continue;
        p.centers[p.terms] = c[j];
        p.coef[p.terms] = a[j] / q;
        ++p.terms;
    }
    return p;
}

bool simd_level_available(SimdLevel level) {
    switch (level) {
        case SimdLevel::scalar:
            return true;
        case SimdLevel::avx2:
#if defined(WEAKFLOW_HAVE_AVX2)
            return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
            return false;
#endif
    }
    return false;
}

const char* simd_level_name(SimdLevel level) { return level == SimdLevel::avx2 ? "avx2" : "scalar"; }

namespace {

SimdLevel detect() {
    if (const char* env = std::getenv("WEAKFLOW_SIMD")) {
        if (std::strcmp(env, "scalar") == 0) return SimdLevel::scalar;
        if (std::strcmp(env, "avx2") == 0 && simd_level_available(SimdLevel::avx2)) return SimdLevel::avx2;
    }
    return simd_level_available(SimdLevel::avx2) ? SimdLevel::avx2 : SimdLevel::scalar;
}

}  // namespace

SimdLevel active_simd_level() {
    static const SimdLevel level = detect();
    return level;
}

void envelope_line(SimdLevel level, const LineParams& p, std::span<const double> x, const LineSpans& out) {
    const std::size_t n = x.size();
    if (out.u_re.size() < n || out.u_im.size() < n || out.du_re.size() < n || out.du_im.size() < n)
        throw std::invalid_argument("envelope_line: output spans shorter than input");
#if defined(WEAKFLOW_HAVE_AVX2)
    if (level == SimdLevel::avx2 && simd_level_available(SimdLevel::avx2)) {
        detail::envelope_line_avx2(p, x, out);
        return;
    }
#else
    (void)level;
#endif
    detail::envelope_line_scalar(p, x, out);
}

void envelope_line(const LineParams& p, std::span<const double> x, const LineSpans& out) {
    envelope_line(active_simd_level(), p, x, out);
}

LineSample envelope_profile(const BeamModel& model, double z, std::span<const double> x) {
    const LineParams p = line_params(model, z);
    const std::size_t n = x.size();
    std::vector<double> buf(4 * n);
    const std::span<double> all(buf);
    envelope_line(p, x, {all.subspan(0, n), all.subspan(n, n), all.subspan(2 * n, n), all.subspan(3 * n, n)});
    LineSample s;
    s.u.resize(n);
    s.du_dx.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s.u[i] = {buf[i], buf[n + i]};
        s.du_dx[i] = {buf[2 * n + i], buf[3 * n + i]};
        if (!std::isfinite(buf[i]) || !std::isfinite(buf[n + i])) throw DomainError("envelope is not finite");
    }
    return s;
}

}  // namespace weakflow

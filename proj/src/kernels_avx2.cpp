#include <immintrin.h>

#include <cmath>

#include "weakflow/kernels.hpp"

namespace weakflow::detail {

namespace {

inline __m256d poly(__m256d x, const double* c, int n) {
    __m256d r = _mm256_set1_pd(c[0]);
    for (int i = 1; i < n; ++i) r = _mm256_fmadd_pd(r, x, _mm256_set1_pd(c[i]));
    return r;
}

// Cephes exp: Pade form on [-ln2/2, ln2/2], 2^n assembled in the exponent bits.
// Arguments below -708 flush to zero; the kernel never feeds large positive ones.
__m256d exp_pd(__m256d x) {
    static const double P[] = {1.26177193074810590878e-4, 3.02994407707441961300e-2, 9.99999999999999999910e-1};
    static const double Q[] = {3.00198505138664455042e-6, 2.52448340349684104192e-3, 2.27265548208155028766e-1,
                               2.00000000000000000009e0};
    const __m256d lo = _mm256_set1_pd(-708.0);
    const __m256d hi = _mm256_set1_pd(709.0);
    const __m256d under = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    x = _mm256_max_pd(_mm256_min_pd(x, hi), lo);

    const __m256d fx = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                       _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(6.93145751953125e-1), x);
    x = _mm256_fnmadd_pd(fx, _mm256_set1_pd(1.42860682030941723212e-6), x);

    const __m256d xx = _mm256_mul_pd(x, x);
    const __m256d px = _mm256_mul_pd(x, poly(xx, P, 3));
    const __m256d qx = poly(xx, Q, 4);
    __m256d r = _mm256_div_pd(px, _mm256_sub_pd(qx, px));
    r = _mm256_fmadd_pd(_mm256_set1_pd(2.0), r, _mm256_set1_pd(1.0));

    const __m128i n32 = _mm256_cvtpd_epi32(fx);
    __m256i n64 = _mm256_cvtepi32_epi64(n32);
    n64 = _mm256_slli_epi64(_mm256_add_epi64(n64, _mm256_set1_epi64x(1023)), 52);
    r = _mm256_mul_pd(r, _mm256_castsi256_pd(n64));
    return _mm256_andnot_pd(under, r);
}

// Cephes sin/cos sharing one octant reduction.
void sincos_pd(__m256d x, __m256d& s, __m256d& c) {
    static const double sincof[] = {1.58962301576546568060e-10, -2.50507477628578072866e-8,
                                    2.75573136213857245213e-6,  -1.98412698295895385996e-4,
                                    8.33333333332211858878e-3,  -1.66666666666666307295e-1};
    static const double coscof[] = {-1.13585365213876817300e-11, 2.08757008419747316778e-9,
                                    -2.75573141792967388112e-7,  2.48015872888517045348e-5,
                                    -1.38888888888730564116e-3,  4.16666666666665929218e-2};
    const __m256d sign_bit = _mm256_set1_pd(-0.0);
    const __m256d sign_x = _mm256_and_pd(x, sign_bit);
    x = _mm256_andnot_pd(sign_bit, x);

    __m256d y = _mm256_floor_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.27323954473516268615)));  // 4/pi
    __m128i j = _mm256_cvttpd_epi32(y);
    const __m128i odd = _mm_and_si128(j, _mm_set1_epi32(1));
    j = _mm_add_epi32(j, odd);
    y = _mm256_add_pd(y, _mm256_cvtepi32_pd(odd));
    j = _mm_and_si128(j, _mm_set1_epi32(7));

    const __m256i j64 = _mm256_cvtepi32_epi64(j);
    const __m256d flip_half =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(j64, _mm256_set1_epi64x(4)), _mm256_set1_epi64x(4)));
    const __m256d swap =
        _mm256_castsi256_pd(_mm256_cmpeq_epi64(_mm256_and_si256(j64, _mm256_set1_epi64x(2)), _mm256_set1_epi64x(2)));

    __m256d z = _mm256_fnmadd_pd(y, _mm256_set1_pd(7.85398125648498535156e-1), x);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(3.77489470793079817668e-8), z);
    z = _mm256_fnmadd_pd(y, _mm256_set1_pd(2.69515142907905952645e-15), z);
    const __m256d zz = _mm256_mul_pd(z, z);

    const __m256d ps = _mm256_fmadd_pd(_mm256_mul_pd(z, zz), poly(zz, sincof, 6), z);
    __m256d pc = _mm256_fmadd_pd(_mm256_mul_pd(zz, zz), poly(zz, coscof, 6), _mm256_set1_pd(1.0));
    pc = _mm256_fnmadd_pd(_mm256_set1_pd(0.5), zz, pc);

    s = _mm256_blendv_pd(ps, pc, swap);
    c = _mm256_blendv_pd(pc, ps, swap);
    const __m256d s_sign = _mm256_xor_pd(sign_x, _mm256_and_pd(flip_half, sign_bit));
    const __m256d c_sign = _mm256_and_pd(_mm256_xor_pd(flip_half, swap), sign_bit);
    s = _mm256_xor_pd(s, s_sign);
    c = _mm256_xor_pd(c, c_sign);
}

}  // namespace

void envelope_line_avx2(const LineParams& p, std::span<const double> x, const LineSpans& out) {
    const std::size_t n = x.size();
    const std::size_t nv = n - n % 4;
    const __m256d ar = _mm256_set1_pd(p.alpha.real());
    const __m256d ai = _mm256_set1_pd(p.alpha.imag());
    const __m256d two_ar = _mm256_set1_pd(2.0 * p.alpha.real());
    const __m256d two_ai = _mm256_set1_pd(2.0 * p.alpha.imag());

    for (std::size_t i = 0; i < nv; i += 4) {
        const __m256d xv = _mm256_loadu_pd(x.data() + i);
        __m256d ur = _mm256_setzero_pd(), ui = _mm256_setzero_pd();
        __m256d dr = _mm256_setzero_pd(), di = _mm256_setzero_pd();
        for (int j = 0; j < p.terms; ++j) {
            const __m256d s = _mm256_sub_pd(xv, _mm256_set1_pd(p.centers[j]));
            const __m256d s2 = _mm256_mul_pd(s, s);
            const __m256d mag = exp_pd(_mm256_mul_pd(ar, s2));
            __m256d sn, cs;
            sincos_pd(_mm256_mul_pd(ai, s2), sn, cs);
            const __m256d er = _mm256_mul_pd(mag, cs);
            const __m256d ei = _mm256_mul_pd(mag, sn);
            const __m256d cr = _mm256_set1_pd(p.coef[j].real());
            const __m256d ci = _mm256_set1_pd(p.coef[j].imag());
            const __m256d gr = _mm256_fmsub_pd(cr, er, _mm256_mul_pd(ci, ei));
            const __m256d gi = _mm256_fmadd_pd(cr, ei, _mm256_mul_pd(ci, er));
            const __m256d fr = _mm256_mul_pd(two_ar, s);
            const __m256d fi = _mm256_mul_pd(two_ai, s);
            ur = _mm256_add_pd(ur, gr);
            ui = _mm256_add_pd(ui, gi);
            dr = _mm256_add_pd(dr, _mm256_fmsub_pd(fr, gr, _mm256_mul_pd(fi, gi)));
            di = _mm256_add_pd(di, _mm256_fmadd_pd(fr, gi, _mm256_mul_pd(fi, gr)));
        }
        _mm256_storeu_pd(out.u_re.data() + i, ur);
        _mm256_storeu_pd(out.u_im.data() + i, ui);
        _mm256_storeu_pd(out.du_re.data() + i, dr);
        _mm256_storeu_pd(out.du_im.data() + i, di);
    }
    if (nv < n) {
        const LineSpans tail{out.u_re.subspan(nv), out.u_im.subspan(nv), out.du_re.subspan(nv),
                             out.du_im.subspan(nv)};
        envelope_line_scalar(p, x.subspan(nv), tail);
    }
}

}  // namespace weakflow::detail

#include <cmath>

#include "weakflow/kernels.hpp"

namespace weakflow::detail {

void envelope_line_scalar(const LineParams& p, std::span<const double> x, const LineSpans& out) {
    const double ar = p.alpha.real();
    const double ai = p.alpha.imag();
    for (std::size_t i = 0; i < x.size(); ++i) {
        double ur = 0.0, ui = 0.0, dr = 0.0, di = 0.0;
        for (int j = 0; j < p.terms; ++j) {
            const double s = x[i] - p.centers[j];
            const double s2 = s * s;
            const double mag = std::exp(ar * s2);
            const double c = std::cos(ai * s2);
            const double sn = std::sin(ai * s2);
            // g = coef * mag * (c + i sn)
            const double er = mag * c;
            const double ei = mag * sn;
            const double gr = p.coef[j].real() * er - p.coef[j].imag() * ei;
            const double gi = p.coef[j].real() * ei + p.coef[j].imag() * er;
            // 2 alpha s g
            const double fr = 2.0 * ar * s;
            const double fi = 2.0 * ai * s;
            ur += gr;
            ui += gi;
            dr += fr * gr - fi * gi;
            di += fr * gi + fi * gr;
        }
        out.u_re[i] = ur;
        out.u_im[i] = ui;
        out.du_re[i] = dr;
        out.du_im[i] = di;
    }
}

}  // namespace weakflow::detail

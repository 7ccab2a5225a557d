#pragma once

#include <cmath>

#include "weakflow/beam.hpp"

namespace testing_support {

// 943 nm light, sigma0 = 100 um, lengths in units of sigma0.
inline constexpr double k_sigma0 = 2.0 * M_PI * 100.0 / 0.943;

inline weakflow::BeamModel two_slit(double d = 4.0) {
    weakflow::BeamModel m;
    m.wavenumber = k_sigma0;
    m.sigma0 = 1.0;
    m.slit_separation = d;
    m.amplitude_plus = 1.0;
    m.amplitude_minus = 1.0;
    return m;
}

inline weakflow::BeamModel single(double k = k_sigma0) {
    weakflow::BeamModel m;
    m.wavenumber = k;
    m.sigma0 = 1.0;
    m.slit_separation = 0.0;
    m.amplitude_plus = 1.0;
    m.amplitude_minus = 0.0;
    return m;
}

inline double rel(double a, double b, double scale) { return std::abs(a - b) / scale; }

}  // namespace testing_support

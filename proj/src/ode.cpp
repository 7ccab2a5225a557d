#include "weakflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "weakflow/errors.hpp"

namespace weakflow {

namespace {

constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// b - b*, the embedded 4th-order difference
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

constexpr double safety = 0.9;
constexpr double min_factor = 0.2;
constexpr double max_factor = 5.0;

}  // namespace

Dopri5::Dopri5(Rhs f, StepControl control) : f_(std::move(f)), ctl_(control) {
    if (!(ctl_.rtol >= 0.0) || !(ctl_.atol >= 0.0) || (ctl_.rtol == 0.0 && ctl_.atol == 0.0))
        throw DomainError("step control needs a positive tolerance");
    if (!(ctl_.max_step > 0.0)) throw DomainError("max_step must be positive");
}

double Dopri5::error_norm(const Vector& err, const Vector& y0, const Vector& y1) const {
    double sum = 0.0;
    for (Eigen::Index i = 0; i < err.size(); ++i) {
        const double sc = ctl_.atol + ctl_.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
        const double r = err[i] / sc;
        sum += r * r;
    }
    return std::sqrt(sum / static_cast<double>(std::max<Eigen::Index>(err.size(), 1)));
}

// Hairer, Norsett & Wanner, Solving ODEs I, II.4.
double Dopri5::initial_step(double t, const Vector& y, const Vector& f0, double t_end) {
    const double span = t_end - t;
    Vector sc = (ctl_.atol + ctl_.rtol * y.array().abs()).matrix();
    const double d0 = std::sqrt((y.array() / sc.array()).square().mean());
    const double d1 = std::sqrt((f0.array() / sc.array()).square().mean());
    double h0 = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
    h0 = std::min({h0, span, ctl_.max_step});

    Vector y1 = y + h0 * f0;
    Vector f1(y.size());
    try {
        f_(t + h0, y1, f1);
        ++stats_.evaluations;
    } catch (const NodeError&) {
        return h0 * 1e-3;
    }
    const double d2 = std::sqrt(((f1 - f0).array() / sc.array()).square().mean()) / h0;
    const double dm = std::max(d1, d2);
    const double h1 = dm <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / dm, 1.0 / 5.0);
    return std::min({100.0 * h0, h1, span, ctl_.max_step});
}

void Dopri5::advance(double& t, Vector& y, double t_end) {
    if (!(t_end > t)) {
        if (t_end == t) return;
        throw DomainError("integration must run forward");
    }
    const Eigen::Index n = y.size();
    Vector k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), yt(n), y_new(n), err(n);

    if (!(have_k1_ && k1_t_ == t && k1_y_.size() == n && k1_y_ == y)) {
        k1_.resize(n);
        f_(t, y, k1_);  // NodeError here is a real stop
        ++stats_.evaluations;
        have_k1_ = true;
        k1_t_ = t;
        k1_y_ = y;
    }
    if (ctl_.initial_step > 0.0 && h_ == 0.0) h_ = ctl_.initial_step;
    if (h_ <= 0.0) h_ = initial_step(t, y, k1_, t_end);

    std::optional<NodeError> last_node;
    std::size_t steps = 0;
    while (t < t_end) {
        if (++steps > ctl_.max_steps) throw StepFailure("maximum number of steps exceeded");
        const double h_min = 16.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(t), 1.0);
        double h = std::min(h_, ctl_.max_step);
        bool lands = false;
        if (t + h >= t_end || t_end - (t + h) < h_min) {
            h = t_end - t;
            lands = true;
        }
        if (h < h_min && !lands) {
            if (last_node) throw *last_node;
            throw StepFailure("step size underflow");
        }

        try {
            yt = y + h * a21 * k1_;
            f_(t + c2 * h, yt, k2);
            yt = y + h * (a31 * k1_ + a32 * k2);
            f_(t + c3 * h, yt, k3);
            yt = y + h * (a41 * k1_ + a42 * k2 + a43 * k3);
            f_(t + c4 * h, yt, k4);
            yt = y + h * (a51 * k1_ + a52 * k2 + a53 * k3 + a54 * k4);
            f_(t + c5 * h, yt, k5);
            yt = y + h * (a61 * k1_ + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
            f_(t + h, yt, k6);
            y_new = y + h * (b1 * k1_ + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
            f_(lands ? t_end : t + h, y_new, k7);
            stats_.evaluations += 6;
        } catch (const NodeError& e) {
            last_node = e;
            ++stats_.rejected;
            h_ = 0.25 * h;
            if (h_ < h_min) throw;
            continue;
        }

        err = h * (e1 * k1_ + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y_new);
        if (!std::isfinite(en)) {
            ++stats_.rejected;
            h_ = 0.25 * h;
            continue;
        }
        if (en <= 1.0) {
            t = lands ? t_end : t + h;
            y = y_new;
            k1_.swap(k7);
            k1_t_ = t;
            k1_y_ = y;
            ++stats_.accepted;
            stats_.min_step = std::min(stats_.min_step, h);
            stats_.max_step = std::max(stats_.max_step, h);
            last_node.reset();
            const double fac = en == 0.0 ? max_factor : std::clamp(safety * std::pow(en, -0.2), min_factor, max_factor);
            // a step shortened only to land on t_end says nothing about the proposal
            h_ = lands ? std::max(h_, h * fac) : h * fac;
        } else {
            ++stats_.rejected;
            h_ = h * std::clamp(safety * std::pow(en, -0.2), min_factor, 1.0);
        }
    }
}

}  // namespace weakflow

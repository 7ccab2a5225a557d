#pragma once

// Dormand-Prince 5(4) with elementary step-size control.
//
// The right-hand side may throw NodeError. At the start of a step that is a
// genuine stop; inside a trial step it only means the trial overshot toward a
// null, so the step is retried shorter.

#include <cstddef>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace weakflow {

struct StepControl {
    double rtol = 1e-9;
    double atol = 1e-12;
    double initial_step = 0.0;  ///< 0 picks one automatically
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 1000000;
};

struct StepStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
    double min_step = std::numeric_limits<double>::infinity();
    double max_step = 0.0;
};

class Dopri5 {
public:
    using Vector = Eigen::VectorXd;
    using Rhs = std::function<void(double t, const Vector& y, Vector& dydt)>;

    Dopri5(Rhs f, StepControl control);

    /// Advance (t, y) to exactly t_end > t. Throws StepFailure when the step
    /// size underflows or max_steps is exceeded; NodeError when the solution
    /// runs into a null of the underlying field.
    void advance(double& t, Vector& y, double t_end);

    const StepStats& stats() const { return stats_; }

private:
    double initial_step(double t, const Vector& y, const Vector& f0, double t_end);
    double error_norm(const Vector& err, const Vector& y0, const Vector& y1) const;

    Rhs f_;
    StepControl ctl_;
    StepStats stats_;
    double h_ = 0.0;
    bool have_k1_ = false;
    double k1_t_ = 0.0;
    Vector k1_y_;
    Vector k1_;
};

}  // namespace weakflow

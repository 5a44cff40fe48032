#pragma once

#include "jsq/regime.hpp"

#include <cstdint>
#include <vector>

namespace jsq
{
    /// Running pair of integrals compared by the idle-integral diagnostic:
    ///   a(t) = N^-(1/2+eps) * int_0^{N^(2 eps) t} I(s) ds      (real-time integral of idleness)
    ///   b(t) = int_0^t 1/X(s) ds                                (diffusion time, 1/X := 0 for X <= 0)
    /// Both integrands are piecewise constant between events, so |a - b| is piecewise linear
    /// and its supremum is attained at the recorded segment ends.
    class DriftIdentityTrace
    {
    public:
        struct Point
        {
            double t_diff;
            double idle_integral;
            double inverse_x_integral;
        };

        explicit DriftIdentityTrace(const ScalingRegime& regime);

        /// Holds (idle, total) for dt_real units of real time and appends the segment end.
        void append(double dt_real, std::int64_t idle, std::int64_t total);

        /// Stops accepting segments; end_time() is then where the window closed.
        void close() noexcept { closed_ = true; }
        bool closed() const noexcept { return closed_; }

        const std::vector<Point>& points() const noexcept { return points_; }
        double end_time() const noexcept { return points_.back().t_diff; }

    private:
        double space_scale_;
        double time_scale_;
        std::int64_t n_;
        bool closed_ = false;
        std::vector<Point> points_;
    };

    /// sup over t <= min(t_max, trace end) of |a(t) - b(t)|. Zero for t_max = 0.
    double drift_identity_diagnostic(const DriftIdentityTrace& trace, double t_max_diff);
}

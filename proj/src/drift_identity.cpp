#include "jsq/drift_identity.hpp"

#include <algorithm>
#include <cmath>

namespace jsq
{
    DriftIdentityTrace::DriftIdentityTrace(const ScalingRegime& regime)
        : space_scale_(regime.space_scale()), time_scale_(regime.time_scale()), n_(regime.n)
    {
        points_.push_back({0.0, 0.0, 0.0});
    }

    void DriftIdentityTrace::append(double dt_real, std::int64_t idle, std::int64_t total)
    {
        if (closed_)
        {
            return;
        }
        const Point& last = points_.back();
        const double dt_diff = dt_real / time_scale_;
        const double x = static_cast<double>(total - n_) / space_scale_;
        const double inv_x = x > 0.0 ? 1.0 / x : 0.0;
        points_.push_back({last.t_diff + dt_diff,
                           last.idle_integral + static_cast<double>(idle) * dt_real / space_scale_,
                           last.inverse_x_integral + inv_x * dt_diff});
    }

    double drift_identity_diagnostic(const DriftIdentityTrace& trace, double t_max_diff)
    {
        const auto& pts = trace.points();
        double sup = 0.0;
        for (std::size_t i = 0; i < pts.size(); ++i)
        {
            const auto& p = pts[i];
            if (p.t_diff <= t_max_diff)
            {
                sup = std::max(sup, std::abs(p.idle_integral - p.inverse_x_integral));
                continue;
            }
            // Segment straddles t_max: interpolate the linear pieces at t_max.
            const auto& q = pts[i - 1];
            const double w = (t_max_diff - q.t_diff) / (p.t_diff - q.t_diff);
            const double a = q.idle_integral + w * (p.idle_integral - q.idle_integral);
            const double b = q.inverse_x_integral + w * (p.inverse_x_integral - q.inverse_x_integral);
            sup = std::max(sup, std::abs(a - b));
            break;
        }
        return sup;
    }
}

#include "jsq/regime.hpp"

#include <cmath>
#include <sstream>

namespace jsq
{
    namespace
    {
        double power(std::int64_t n, double exponent) { return std::pow(static_cast<double>(n), exponent); }

        // pow() can land one ulp below an exact integer (10000^0.75 = 1000), so the floor is
        // taken after a relative nudge far below any threshold spacing.
        std::int64_t floor_nudged(double v) { return static_cast<std::int64_t>(std::floor(v * (1.0 + 1e-12))); }
    }

    double ScalingRegime::space_scale() const noexcept { return power(n, 0.5 + eps); }
    double ScalingRegime::idle_scale() const noexcept { return power(n, 0.5 - eps); }
    double ScalingRegime::time_scale() const noexcept { return power(n, 2.0 * eps); }

    std::string ScalingRegime::describe() const
    {
        std::ostringstream os;
        os.precision(12);
        os << "N=" << n << " beta=" << beta << " eps=" << eps << " lambda_total=" << lambda_total
           << " alpha=" << alpha;
        return os.str();
    }

    ScalingRegime make_regime(std::int64_t n, double beta, double eps)
    {
        if (n < 1)
        {
            throw ValidationError("number of servers must be >= 1, got " + std::to_string(n));
        }
        if (!(beta > 0.0) || !std::isfinite(beta))
        {
            throw ValidationError("beta must be a positive finite real, got " + std::to_string(beta));
        }
        if (!(eps >= 0.0 && eps < 0.5))
        {
            throw ValidationError("eps must lie in [0, 1/2), got " + std::to_string(eps));
        }
        ScalingRegime r;
        r.n = n;
        r.beta = beta;
        r.eps = eps;
        r.alpha = 0.5 + eps;
        r.lambda_total = static_cast<double>(n) - beta * power(n, 0.5 - eps);
        if (!(r.lambda_total > 0.0))
        {
            std::ostringstream os;
            os << "supercritical slack: lambda(N) = N - beta*N^(1/2-eps) = " << r.lambda_total
               << " <= 0 for N=" << n << ", beta=" << beta << ", eps=" << eps;
            throw ValidationError(os.str());
        }
        return r;
    }

    ScalingRegime regime_for_arrival_rate(std::int64_t n, double lambda_total, double eps)
    {
        if (n < 1)
        {
            throw ValidationError("number of servers must be >= 1, got " + std::to_string(n));
        }
        if (!(lambda_total > 0.0 && lambda_total < static_cast<double>(n)))
        {
            std::ostringstream os;
            os << "arrival rate must lie in (0, N) for a stable system, got " << lambda_total << " with N=" << n;
            throw ValidationError(os.str());
        }
        ScalingRegime r = make_regime(n, (static_cast<double>(n) - lambda_total) / power(n, 0.5 - eps), eps);
        r.lambda_total = lambda_total;
        return r;
    }

    std::int64_t space_threshold(const ScalingRegime& regime, double c)
    {
        return floor_nudged(c * regime.space_scale());
    }

    std::int64_t idle_threshold(const ScalingRegime& regime, double c)
    {
        return floor_nudged(c * regime.idle_scale());
    }
}

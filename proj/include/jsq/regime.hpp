#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace jsq
{
    /// Thrown for any parameter combination that cannot describe a stable system.
    class ValidationError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// One system instance in the heavy-traffic family: N servers, per-server load
    /// 1 - beta / N^(1/2 + eps), so the aggregate arrival rate is N - beta N^(1/2 - eps).
    ///
    /// All conversions between real time, diffusion time and the scaled coordinates go
    /// through the accessors below so that the exponents live in exactly one place.
    struct ScalingRegime
    {
        std::int64_t n = 1;
        double beta = 1.0;
        double eps = 0.0;
        double lambda_total = 0.0; // N * lambda_N
        double alpha = 0.5;        // 1/2 + eps

        double per_server_load() const noexcept { return lambda_total / static_cast<double>(n); }

        /// N^(1/2 + eps): scale of S - N and of Q2.
        double space_scale() const noexcept;
        /// N^(1/2 - eps): scale of the idle count.
        double idle_scale() const noexcept;
        /// N^(2 eps): real time per unit of diffusion time.
        double time_scale() const noexcept;

        double to_diffusion_time(double t_real) const noexcept { return t_real / time_scale(); }
        double to_real_time(double t_diff) const noexcept { return t_diff * time_scale(); }

        std::string describe() const;
    };

    /// Validates (n, beta, eps) and fills in the derived rates.
    ScalingRegime make_regime(std::int64_t n, double beta, double eps);

    /// Same regime family parameterised by the aggregate arrival rate instead of beta.
    /// Used for tiny oracle instances (N = 1, 2, 3) where the rate is the natural input.
    ScalingRegime regime_for_arrival_rate(std::int64_t n, double lambda_total, double eps = 0.0);

    /// floor(c * N^(1/2 + eps)); the integer thresholds used by every Q2 / S stopping time.
    std::int64_t space_threshold(const ScalingRegime& regime, double c);
    /// floor(c * N^(1/2 - eps)); the integer thresholds used by idle-count stopping times.
    std::int64_t idle_threshold(const ScalingRegime& regime, double c);
}

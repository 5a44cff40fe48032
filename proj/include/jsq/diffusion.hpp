#pragma once

#include "jsq/rng.hpp"

#include <cstdint>
#include <vector>

namespace jsq
{
    /// 1/x - beta; rejects x <= 0.
    double drift(double x, double beta);

    /// Drift-implicit Euler step for dX = (1/X - beta) dt + sqrt(2) dW: the positive root of
    /// x'^2 - b x' - h = 0 with b = x - beta h + sqrt(2) dw. Positive for every input when h > 0.
    double implicit_step(double x, double h, double dw, double beta);

    struct SdeConfig
    {
        double beta = 1.0;
        double step = 1e-3;
        double x0 = 1.0;
        std::uint64_t steps = 0;
        std::uint64_t seed = 0;
        /// Keep every record_stride-th value (plus the start); 1 keeps the full path.
        std::uint64_t record_stride = 1;
    };

    void validate(const SdeConfig& config);

    struct DiffusionPath
    {
        std::vector<double> times;
        std::vector<double> values;
    };

    /// Path of the drift-implicit scheme; deterministic in the seed.
    DiffusionPath simulate_sde(const SdeConfig& config);

    /// Defaults for stationary statistics: burn-in 10/beta, stride 100.
    struct SdeStationaryOptions
    {
        double burn_in = -1.0; // negative: 10 / beta
        std::uint64_t stride = 100;
    };

    /// Post-burn-in values at every stride-th step, for histogram and moment estimates.
    std::vector<double> sde_stationary_samples(const SdeConfig& config, const SdeStationaryOptions& options = {});

    // Gamma(2, beta): density beta^2 x e^{-beta x}.
    double gamma2_density(double x, double beta);
    double gamma2_cdf(double x, double beta);
    double gamma2_quantile(double p, double beta);
    double gamma2_sample(Rng& rng, double beta);
    /// Gamma(p + 2) / beta^p.
    double gamma2_moment(double p, double beta);
}

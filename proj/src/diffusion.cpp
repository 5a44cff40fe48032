#include "jsq/diffusion.hpp"

#include "jsq/regime.hpp"

#include <cmath>
#include <numbers>

namespace jsq
{
    namespace
    {
        void check_beta(double beta)
        {
            if (!(beta > 0.0) || !std::isfinite(beta))
            {
                throw ValidationError("beta must be positive and finite");
            }
        }
    }

    double drift(double x, double beta)
    {
        if (!(x > 0.0))
        {
            throw ValidationError("drift is defined for x > 0 only");
        }
        return 1.0 / x - beta;
    }

    double implicit_step(double x, double h, double dw, double beta)
    {
        const double b = x - beta * h + std::numbers::sqrt2 * dw;
        const double r = std::sqrt(b * b + 4.0 * h);
        // For b < 0 the textbook form cancels; 2h / (r - b) is the same root.
        return b >= 0.0 ? 0.5 * (b + r) : 2.0 * h / (r - b);
    }

    void validate(const SdeConfig& config)
    {
        check_beta(config.beta);
        if (!(config.step > 0.0) || !std::isfinite(config.step))
        {
            throw ValidationError("SDE step must be positive");
        }
        if (!(config.x0 > 0.0) || !std::isfinite(config.x0))
        {
            throw ValidationError("SDE start point must be positive");
        }
        if (config.record_stride == 0)
        {
            throw ValidationError("record stride must be at least 1");
        }
    }

    DiffusionPath simulate_sde(const SdeConfig& config)
    {
        validate(config);
        DiffusionPath path;
        const std::uint64_t kept = config.steps / config.record_stride + 1;
        path.times.reserve(kept);
        path.values.reserve(kept);
        path.times.push_back(0.0);
        path.values.push_back(config.x0);

        Rng rng = make_rng(config.seed);
        const double sqrt_h = std::sqrt(config.step);
        double x = config.x0;
        for (std::uint64_t i = 1; i <= config.steps; ++i)
        {
            x = implicit_step(x, config.step, sqrt_h * std_normal(rng), config.beta);
            if (i % config.record_stride == 0)
            {
                path.times.push_back(static_cast<double>(i) * config.step);
                path.values.push_back(x);
            }
        }
        return path;
    }

    std::vector<double> sde_stationary_samples(const SdeConfig& config, const SdeStationaryOptions& options)
    {
        validate(config);
        if (options.stride == 0)
        {
            throw ValidationError("subsampling stride must be at least 1");
        }
        const double burn_in = options.burn_in >= 0.0 ? options.burn_in : 10.0 / config.beta;
        const auto skip = static_cast<std::uint64_t>(std::ceil(burn_in / config.step));
        std::vector<double> out;
        if (config.steps > skip)
        {
            out.reserve((config.steps - skip) / options.stride + 1);
        }
        Rng rng = make_rng(config.seed);
        const double sqrt_h = std::sqrt(config.step);
        double x = config.x0;
        for (std::uint64_t i = 1; i <= config.steps; ++i)
        {
            x = implicit_step(x, config.step, sqrt_h * std_normal(rng), config.beta);
            if (i > skip && (i - skip) % options.stride == 0)
            {
                out.push_back(x);
            }
        }
        return out;
    }

    double gamma2_density(double x, double beta)
    {
        check_beta(beta);
        if (!(x >= 0.0))
        {
            throw ValidationError("Gamma(2, beta) density needs x >= 0");
        }
        return beta * beta * x * std::exp(-beta * x);
    }

    double gamma2_cdf(double x, double beta)
    {
        check_beta(beta);
        if (!(x >= 0.0))
        {
            throw ValidationError("Gamma(2, beta) CDF needs x >= 0");
        }
        const double bx = beta * x;
        // 1 - (1 + bx) e^{-bx}, written to keep precision for small bx.
        return -std::expm1(-bx) - bx * std::exp(-bx);
    }

    double gamma2_quantile(double p, double beta)
    {
        check_beta(beta);
        if (!(p >= 0.0 && p < 1.0))
        {
            throw ValidationError("quantile level must lie in [0, 1)");
        }
        if (p == 0.0)
        {
            return 0.0;
        }
        // Newton on the CDF in units of 1/beta, safeguarded by bisection.
        double lo = 0.0;
        double hi = 1.0;
        while (gamma2_cdf(hi, 1.0) < p)
        {
            hi *= 2.0;
        }
        double y = 0.5 * (lo + hi);
        for (int it = 0; it < 200; ++it)
        {
            const double f = gamma2_cdf(y, 1.0) - p;
            if (f > 0.0)
            {
                hi = y;
            }
            else
            {
                lo = y;
            }
            const double d = gamma2_density(y, 1.0);
            double next = d > 0.0 ? y - f / d : 0.5 * (lo + hi);
            if (!(next > lo && next < hi))
            {
                next = 0.5 * (lo + hi);
            }
            if (std::abs(next - y) <= 1e-15 * std::max(1.0, y))
            {
                y = next;
                break;
            }
            y = next;
        }
        return y / beta;
    }

    double gamma2_sample(Rng& rng, double beta)
    {
        check_beta(beta);
        return (exp1(rng) + exp1(rng)) / beta;
    }

    double gamma2_moment(double p, double beta)
    {
        check_beta(beta);
        if (!(p > 0.0))
        {
            throw ValidationError("moment order must be positive");
        }
        return std::exp(std::lgamma(p + 2.0) - p * std::log(beta));
    }
}

#include "jsq/birth_death.hpp"

#include "jsq/oracle.hpp"

#include <cmath>
#include <numeric>
#include <string>

namespace jsq
{
    void validate(const BirthDeathParams& params)
    {
        if (!(params.up_rate > 0.0) || !(params.down_rate > 0.0) || !std::isfinite(params.up_rate) ||
            !std::isfinite(params.down_rate))
        {
            throw ValidationError("birth-death rates must be positive and finite");
        }
    }

    BirthDeathParams make_idle_bound_params(const ScalingRegime& regime, double b_const)
    {
        const double n = static_cast<double>(regime.n);
        const double b_scaled = b_const * regime.space_scale();
        const double slack = regime.beta * regime.idle_scale();
        if (!(n > b_scaled && b_scaled > slack))
        {
            throw ValidationError("idle bound needs N > B N^(1/2+eps) > beta N^(1/2-eps); got N=" +
                                  std::to_string(regime.n) + ", B N^(1/2+eps)=" + std::to_string(b_scaled) +
                                  ", beta N^(1/2-eps)=" + std::to_string(slack));
        }
        return BirthDeathParams{n - b_scaled, regime.lambda_total, true};
    }

    double BirthDeathTrajectory::observed_time() const noexcept
    {
        return std::accumulate(occupation.begin(), occupation.end(), 0.0);
    }

    double BirthDeathTrajectory::fraction_at(std::int64_t k) const noexcept
    {
        const double total = observed_time();
        if (k < 0 || static_cast<std::size_t>(k) >= occupation.size() || total <= 0.0)
        {
            return 0.0;
        }
        return occupation[static_cast<std::size_t>(k)] / total;
    }

    double BirthDeathTrajectory::fraction_at_least(std::int64_t k) const noexcept
    {
        const double total = observed_time();
        double sum = 0.0;
        for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(k, 0)); i < occupation.size(); ++i)
        {
            sum += occupation[i];
        }
        return total > 0.0 ? sum / total : 0.0;
    }

    namespace
    {
        void add_at(std::vector<double>& v, std::int64_t k, double dt)
        {
            const auto i = static_cast<std::size_t>(k);
            if (i >= v.size())
            {
                v.resize(i + 1 + v.size() / 2, 0.0);
            }
            v[i] += dt;
        }

        void bump(std::vector<std::uint64_t>& v, std::int64_t k)
        {
            const auto i = static_cast<std::size_t>(k);
            if (i >= v.size())
            {
                v.resize(i + 1 + v.size() / 2, 0);
            }
            ++v[i];
        }
    }

    BirthDeathTrajectory run_birth_death(const BirthDeathParams& params, std::int64_t init, double horizon,
                                         const BirthDeathOptions& options)
    {
        validate(params);
        if (init < 0 || !(horizon >= 0.0) || !(options.warmup >= 0.0) || options.warmup > horizon)
        {
            throw ValidationError("birth-death run needs init >= 0 and 0 <= warmup <= horizon");
        }
        BirthDeathTrajectory out;
        Rng rng = make_rng(options.seed);
        const double window = horizon - options.warmup;
        if (options.batches > 0)
        {
            out.batch_time = window / static_cast<double>(options.batches);
            out.batch_occupation.assign(options.batches, {});
        }

        // Spreads the holding interval [a, b) in state k over the steady accumulators.
        auto integrate = [&](double a, double b, std::int64_t k) {
            a = std::max(a, options.warmup);
            if (b <= a)
            {
                return;
            }
            add_at(out.occupation, k, b - a);
            if (options.batches == 0)
            {
                return;
            }
            while (a < b)
            {
                auto idx = std::min(static_cast<std::size_t>((a - options.warmup) / out.batch_time),
                                    options.batches - 1);
                double end = std::min(b, options.warmup + static_cast<double>(idx + 1) * out.batch_time);
                if (end <= a)
                {
                    if (idx + 1 >= options.batches)
                    {
                        end = b;
                    }
                    else
                    {
                        ++idx;
                        end = std::min(b, options.warmup + static_cast<double>(idx + 1) * out.batch_time);
                    }
                }
                add_at(out.batch_occupation[idx], k, end - a);
                a = end;
            }
        };

        std::int64_t k = init;
        double t = 0.0;
        for (;;)
        {
            const bool absorbed = k == 0 && !params.reflect_at_zero;
            const double down = k > 0 ? params.down_rate : 0.0;
            const double rate = absorbed ? 0.0 : params.up_rate + down;
            const double t_next = rate > 0.0 ? t + exp1(rng) / rate : horizon;
            if (t_next >= horizon)
            {
                integrate(t, horizon, k);
                t = horizon;
                break;
            }
            integrate(t, t_next, k);
            t = t_next;
            if (uniform01(rng) * rate < params.up_rate)
            {
                bump(out.up_moves, k);
                ++k;
            }
            else
            {
                --k;
                bump(out.down_moves, k);
            }
            ++out.events;
        }
        out.t_real = t;
        out.final_state = k;
        return out;
    }

    double birth_death_stationary(const BirthDeathParams& params, std::int64_t k)
    {
        validate(params);
        return bd_geometric(params.up_rate, params.down_rate, k);
    }
}

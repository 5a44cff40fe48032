#include "jsq/renewal.hpp"

#include "jsq/engine.hpp"
#include "jsq/parallel.hpp"
#include "jsq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace jsq
{
    namespace
    {
        constexpr std::size_t kCyclesPerChunk = 8;

        const Functional kStandard[] = {
            {FunctionalKind::time},  {FunctionalKind::idle},           {FunctionalKind::centered_total},
            {FunctionalKind::q2},    {FunctionalKind::qbar3},          {FunctionalKind::qbar3_positive},
            {FunctionalKind::idle_zero},
        };

        struct CycleContext
        {
            const ScalingRegime& regime;
            std::int64_t lower;
            std::int64_t upper;
            std::uint64_t max_events;
            const RenewalOptions& options;
        };

        RenewalCycle run_one_cycle(const CycleContext& ctx, Rng& rng, std::size_t index, OccupationAccumulator& acc)
        {
            const ScalingRegime& regime = ctx.regime;
            OccupancyState s = heavy_state(regime.n, ctx.upper);
            RenewalCycle cycle;

            StateView v = view_of(s);
            std::int64_t sup_idle = v.idle;
            std::int64_t sup_total = v.total;
            std::int64_t sup_q2 = v.q2;
            std::int64_t sup_qbar3 = v.qbar3;

            const double n = static_cast<double>(regime.n);
            double t = 0.0;
            bool going_down = true;
            std::uint64_t events = 0;
            std::int64_t pairs = 0;
            std::int64_t crossings = 0;
            for (;;)
            {
                const double dt = exp1(rng) / (regime.lambda_total + n - static_cast<double>(v.idle));
                acc.add(v, dt);
                t += dt;
                jsq_jump(s, regime, uniform01(rng));
                v = view_of(s);
                if (++events > ctx.max_events)
                {
                    std::ostringstream os;
                    os << "renewal cycle " << index << " exceeded " << ctx.max_events << " events at t=" << t
                       << " (" << regime.describe() << ", Q2=" << v.q2 << ", Qbar3=" << v.qbar3
                       << ", k=" << pairs << ")";
                    throw WatchdogError(os.str());
                }

                const std::int64_t q2 = v.q2;
                sup_q2 = std::max(sup_q2, q2);
                sup_total = std::max(sup_total, v.total);
                sup_idle = std::max(sup_idle, v.idle);
                sup_qbar3 = std::max(sup_qbar3, v.qbar3);

                if (going_down)
                {
                    if (q2 <= ctx.lower)
                    {
                        going_down = false;
                        if (crossings == 0)
                        {
                            cycle.first_down_crossing = t;
                        }
                        ++crossings;
                        if (ctx.options.record_crossings)
                        {
                            cycle.crossings.emplace_back(StoppingKind::sigma, 1.0, ctx.lower).mark(t);
                        }
                    }
                }
                else if (q2 >= ctx.upper)
                {
                    ++pairs;
                    if (crossings == 1)
                    {
                        cycle.first_up_crossing = t - cycle.first_down_crossing;
                    }
                    ++crossings;
                    if (ctx.options.record_crossings)
                    {
                        cycle.crossings.emplace_back(StoppingKind::sigma, 2.0, ctx.upper).mark(t);
                    }
                    if (v.qbar3 == 0)
                    {
                        break;
                    }
                    going_down = true;
                }
            }
            if (ctx.options.record_crossings)
            {
                cycle.crossings.emplace_back(StoppingKind::theta, 0.0, 0).mark(t);
            }

            cycle.theta = t;
            cycle.k_bar = pairs;
            cycle.events = events;
            for (const auto& f : kStandard)
            {
                cycle.integrals[f.name()] = acc.integral(f, regime);
            }
            for (const auto& f : ctx.options.functionals)
            {
                cycle.integrals[f.name()] = acc.integral(f, regime);
            }
            cycle.sup_records["idle"] = static_cast<double>(sup_idle);
            cycle.sup_records["centered_total"] = static_cast<double>(sup_total - regime.n);
            cycle.sup_records["q2"] = static_cast<double>(sup_q2);
            cycle.sup_records["qbar3"] = static_cast<double>(sup_qbar3);
            return cycle;
        }
    }

    double RenewalCycle::integral(const std::string& name) const
    {
        const auto it = integrals.find(name);
        if (it == integrals.end())
        {
            throw std::out_of_range("functional '" + name + "' was not accumulated in this cycle");
        }
        return it->second;
    }

    std::uint64_t RenewalRun::total_events() const noexcept
    {
        std::uint64_t sum = 0;
        for (const auto& c : cycles)
        {
            sum += c.events;
        }
        return sum;
    }

    double default_b_const(const ScalingRegime& regime)
    {
        double b = 1.0;
        while (space_threshold(regime, 2.0 * b) >= regime.n && b > 1e-6)
        {
            b /= 2.0;
        }
        return b;
    }

    OccupancyState renewal_state(const ScalingRegime& regime, double b_const)
    {
        return heavy_state(regime.n, space_threshold(regime, 2.0 * b_const));
    }

    RenewalRun run_renewal_cycles(const ScalingRegime& regime, double b_const, std::size_t n_cycles,
                                  std::uint64_t seed, const RenewalOptions& options)
    {
        if (!(b_const > 0.0))
        {
            throw ValidationError("renewal constant B must be positive");
        }
        if (n_cycles == 0)
        {
            throw ValidationError("need at least one renewal cycle");
        }
        RenewalRun run;
        run.regime = regime;
        run.b_const = b_const;
        run.seed = seed;
        run.lower = space_threshold(regime, b_const);
        run.upper = space_threshold(regime, 2.0 * b_const);
        if (!(run.lower < run.upper) || run.upper > regime.n)
        {
            std::ostringstream os;
            os << "renewal levels floor(B N^(1/2+eps))=" << run.lower << " and floor(2B N^(1/2+eps))=" << run.upper
               << " must satisfy lower < upper <= N=" << regime.n << " (B=" << b_const << ")";
            throw ValidationError(os.str());
        }

        const double beta2 = regime.beta * regime.beta;
        std::uint64_t max_events = options.max_events_per_cycle;
        if (max_events == 0)
        {
            const double per_diff_unit = (regime.lambda_total + static_cast<double>(regime.n)) * regime.time_scale();
            max_events = static_cast<std::uint64_t>(std::min(per_diff_unit * 1000.0 / std::min(beta2, 1.0), 1e18));
        }
        const double slow = regime.to_real_time(options.slow_down_crossing_diff > 0.0
                                                    ? options.slow_down_crossing_diff
                                                    : 50.0 / beta2);

        const CycleContext ctx{regime, run.lower, run.upper, max_events, options};
        run.cycles.resize(n_cycles);
        const std::size_t chunks = (n_cycles + kCyclesPerChunk - 1) / kCyclesPerChunk;
        std::vector<OccupationAccumulator> pooled(chunks);

        std::vector<std::size_t> finished(chunks, 0);

        parallel_for(chunks, options.workers, [&](std::size_t c) {
            OccupationAccumulator local;
            const std::size_t end = std::min(n_cycles, (c + 1) * kCyclesPerChunk);
            for (std::size_t k = c * kCyclesPerChunk; k < end; ++k)
            {
                if (options.deadline && std::chrono::steady_clock::now() >= *options.deadline)
                {
                    return;
                }
                Rng rng = make_rng(seed, k);
                local.clear();
                run.cycles[k] = run_one_cycle(ctx, rng, k, local);
                pooled[c].merge(local);
                ++finished[c];
            }
        });

        // Keep the completed prefix so cycle k is always driven by stream k.
        std::size_t kept = 0;
        for (std::size_t c = 0; c < chunks; ++c)
        {
            run.pooled.merge(pooled[c]);
            kept += finished[c];
            if (kept < std::min(n_cycles, (c + 1) * kCyclesPerChunk))
            {
                break;
            }
        }
        if (kept < n_cycles)
        {
            run.deadline_hit = true;
            run.cycles.resize(kept);
        }
        for (const auto& cyc : run.cycles)
        {
            if (cyc.first_down_crossing > slow)
            {
                ++run.slow_down_crossings;
            }
        }
        return run;
    }
}

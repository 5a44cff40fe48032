#include "jsq/engine.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace jsq
{
    double JumpRates::total() const noexcept
    {
        return std::accumulate(departure.begin(), departure.end(), arrival);
    }

    JumpRates jsq_rates(const OccupancyState& state, const ScalingRegime& regime)
    {
        JumpRates r;
        r.arrival = regime.lambda_total;
        r.departure.reserve(state.max_level());
        for (std::size_t l = 1; l <= state.max_level(); ++l)
        {
            r.departure.push_back(static_cast<double>(state.exact(l)));
        }
        return r;
    }

    namespace
    {
        /// The M/M/N chain as a single counter.
        struct MmnChain
        {
            std::int64_t n;
            std::int64_t total;

            StateView view() const noexcept
            {
                const std::int64_t busy = std::min(total, n);
                return StateView{n - busy, total, total - busy, 0};
            }
            std::size_t longest() const noexcept { return total > n ? 2 : (total > 0 ? 1 : 0); }
            double rate(const ScalingRegime& regime) const noexcept
            {
                return regime.lambda_total + static_cast<double>(std::min(total, n));
            }
            void jump(const ScalingRegime& regime, Rng& rng)
            {
                if (uniform01(rng) * rate(regime) < regime.lambda_total)
                {
                    ++total;
                }
                else
                {
                    --total;
                }
            }
        };

        struct JsqChain
        {
            OccupancyState state;

            StateView view() const noexcept { return view_of(state); }
            std::size_t longest() const noexcept { return state.max_level(); }
            double rate(const ScalingRegime& regime) const noexcept
            {
                return regime.lambda_total + static_cast<double>(state.busy());
            }
            void jump(const ScalingRegime& regime, Rng& rng) { jsq_jump(state, regime, uniform01(rng)); }
        };

        /// Shared bookkeeping for both long-run chains: the post-warm-up occupation
        /// measure, observer integrals, the sampling grid with its windows, stopping
        /// times, the idle-integral trace and the memory alarm.
        template <class Chain>
        TrajectorySummary run_chain(Chain chain, const ScalingRegime& regime, double horizon_diff,
                                    const RunOptions& options)
        {
            if (!(horizon_diff >= 0.0) || !std::isfinite(horizon_diff))
            {
                throw ValidationError("horizon must be a non-negative finite diffusion time");
            }
            if (!(options.warmup_diff >= 0.0) || !(options.grid_step_diff >= 0.0))
            {
                throw ValidationError("warm-up and grid step must be non-negative");
            }

            TrajectorySummary out;
            out.regime = regime;
            out.seed = options.seed;
            Rng rng = make_rng(options.seed);

            const double horizon = regime.to_real_time(horizon_diff);
            const double warmup = std::min(regime.to_real_time(options.warmup_diff), horizon);
            const double grid = regime.to_real_time(options.grid_step_diff);
            const std::size_t n_obs = options.observers.size();

            std::size_t grid_points = 0;
            if (grid > 0.0)
            {
                grid_points = static_cast<std::size_t>(std::floor(horizon / grid * (1.0 + 1e-12))) + 1;
                out.path.reserve(grid_points);
                out.windows.window_real = grid;
                out.windows.observers = n_obs;
                out.windows.first_steady = static_cast<std::size_t>(std::ceil(warmup / grid - 1e-9));
                if (n_obs > 0 && grid_points > 1)
                {
                    out.windows.integrals.assign((grid_points - 1) * n_obs, 0.0);
                }
            }
            out.observer_integrals.assign(n_obs, 0.0);

            for (const auto& rule : options.stopping_times)
            {
                out.stopping.push_back(StoppingTimeRecord::from_rule(rule, regime));
            }
            std::optional<StoppingTimeRecord> drift_stop;
            if (options.record_drift_trace)
            {
                out.drift_trace.emplace(regime);
                drift_stop = StoppingTimeRecord::from_rule({StoppingKind::tau2, options.drift_window_b}, regime);
            }
            const double drift_end = regime.to_real_time(options.drift_window_t);

            double t = 0.0;
            std::size_t next_grid = 0;
            StateView view = chain.view();
            out.max_level_seen = chain.longest();

            auto observe_stops = [&](double now) {
                for (auto& rec : out.stopping)
                {
                    rec.observe(view, now);
                }
                if (drift_stop && !out.drift_trace->closed() && drift_stop->observe(view, now))
                {
                    out.drift_trace->close();
                }
            };
            observe_stops(0.0);

            // Integrates the current state over [from, to) into windows, the steady-state
            // accumulators, and the drift trace.
            auto integrate = [&](double from, double to) {
                if (to <= from)
                {
                    return;
                }
                if (to > warmup)
                {
                    const double a = std::max(from, warmup);
                    const double dt = to - a;
                    out.occupation.add(view, dt);
                    for (std::size_t k = 0; k < n_obs; ++k)
                    {
                        out.observer_integrals[k] += options.observers[k](view, regime) * dt;
                    }
                }
                if (n_obs > 0 && !out.windows.integrals.empty())
                {
                    const std::size_t windows = grid_points - 1;
                    const double limit = std::min(to, static_cast<double>(windows) * grid);
                    double a = from;
                    while (a < limit)
                    {
                        auto w = std::min(static_cast<std::size_t>(a / grid), windows - 1);
                        double b = std::min(limit, static_cast<double>(w + 1) * grid);
                        if (b <= a)
                        {
                            if (w + 1 >= windows)
                            {
                                break;
                            }
                            ++w;
                            b = std::min(limit, static_cast<double>(w + 1) * grid);
                        }
                        for (std::size_t k = 0; k < n_obs; ++k)
                        {
                            out.windows.integrals[w * n_obs + k] += options.observers[k](view, regime) * (b - a);
                        }
                        a = b;
                    }
                }
                if (out.drift_trace && !out.drift_trace->closed())
                {
                    const double b = std::min(to, drift_end);
                    if (b > from)
                    {
                        out.drift_trace->append(b - from, view.idle, view.total);
                    }
                    if (to >= drift_end)
                    {
                        out.drift_trace->close();
                    }
                }
            };

            for (;;)
            {
                const double t_next = t + exp1(rng) / chain.rate(regime);
                const bool last = t_next >= horizon;
                const double seg_end = last ? horizon : t_next;
                while (next_grid < grid_points && (last || static_cast<double>(next_grid) * grid < t_next))
                {
                    ScaledObservation obs;
                    obs.t_diff = regime.to_diffusion_time(static_cast<double>(next_grid) * grid);
                    obs.x = scaled_total(view.total, regime);
                    obs.i_scaled = static_cast<double>(view.idle) / regime.idle_scale();
                    obs.q2_scaled = static_cast<double>(view.q2) / regime.space_scale();
                    out.path.push_back(obs);
                    ++next_grid;
                }
                integrate(t, seg_end);
                if (last)
                {
                    t = horizon;
                    break;
                }
                t = t_next;
                chain.jump(regime, rng);
                ++out.clock.event_count;
                view = chain.view();
                const std::size_t longest = chain.longest();
                if (longest > out.max_level_seen)
                {
                    out.max_level_seen = longest;
                    if (longest > options.alarm_level)
                    {
                        out.alarm = true;
                    }
                }
                observe_stops(t);
            }
            out.clock.t_real = t;
            if (out.drift_trace)
            {
                out.drift_trace->close();
            }
            if constexpr (std::is_same_v<Chain, JsqChain>)
            {
                out.final_state = chain.state;
                out.final_total = chain.state.total();
            }
            else
            {
                out.final_total = chain.total;
            }
            return out;
        }
    }

    TrajectorySummary run_jsq(const ScalingRegime& regime, const OccupancyState& init, double horizon_diff,
                              const RunOptions& options)
    {
        if (init.servers() != regime.n)
        {
            throw ValidationError("initial state has " + std::to_string(init.servers()) + " servers, regime has " +
                                  std::to_string(regime.n));
        }
        return run_chain(JsqChain{init}, regime, horizon_diff, options);
    }

    TrajectorySummary run_mmn(const ScalingRegime& regime, std::int64_t init_total, double horizon_diff,
                              const RunOptions& options)
    {
        if (init_total < 0)
        {
            throw ValidationError("initial task count must be non-negative");
        }
        return run_chain(MmnChain{regime.n, init_total}, regime, horizon_diff, options);
    }
}

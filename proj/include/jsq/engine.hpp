#pragma once

#include "jsq/drift_identity.hpp"
#include "jsq/functional.hpp"
#include "jsq/occupancy.hpp"
#include "jsq/regime.hpp"
#include "jsq/rng.hpp"
#include "jsq/stopping.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

namespace jsq
{
    struct SimulationClock
    {
        double t_real = 0.0;
        std::uint64_t event_count = 0;
    };

    enum class EventKind
    {
        arrival,
        departure,
    };

    struct Event
    {
        EventKind kind = EventKind::arrival;
        std::size_t level = 0; // queue position joined (arrival) or vacated (departure)
    };

    /// Rates out of one occupancy state: lambda(N) for arrivals and Q_l - Q_{l+1} for a
    /// departure from a server holding exactly l tasks.
    struct JumpRates
    {
        double arrival = 0.0;
        std::vector<double> departure; // index l-1 for level l
        double total() const noexcept;
    };

    JumpRates jsq_rates(const OccupancyState& state, const ScalingRegime& regime);

    inline StateView view_of(const OccupancyState& s) noexcept
    {
        return StateView{s.idle(), s.total(), s.q2(), s.qbar3()};
    }

    struct StepResult
    {
        double dt = 0.0;
        Event event;
    };

    /// Applies the transition selected by u ~ Uniform(0, 1) from `state` (the categorical
    /// half of a Gillespie step). Returns the event.
    inline Event jsq_jump(OccupancyState& state, const ScalingRegime& regime, double u)
    {
        const double busy = static_cast<double>(state.busy());
        u *= regime.lambda_total + busy;
        if (u < regime.lambda_total || busy == 0.0)
        {
            return {EventKind::arrival, state.arrive()};
        }
        u -= regime.lambda_total;
        const std::size_t top = state.max_level();
        std::size_t level = 1;
        for (; level < top; ++level)
        {
            const double w = static_cast<double>(state.exact(level));
            if (u < w)
            {
                break;
            }
            u -= w;
        }
        state.depart_unchecked(level);
        return {EventKind::departure, level};
    }

    /// One Gillespie transition of the JSQ occupancy chain, applied to `state` in place.
    /// Holding time ~ Exp(lambda(N) + Q1); the event is an arrival w.p. lambda(N)/R, else a
    /// departure at level l w.p. (Q_l - Q_{l+1})/R.
    inline StepResult jsq_step(OccupancyState& state, const ScalingRegime& regime, Rng& rng)
    {
        StepResult r;
        r.dt = exp1(rng) / (regime.lambda_total + static_cast<double>(state.busy()));
        r.event = jsq_jump(state, regime, uniform01(rng));
        return r;
    }

    /// Options shared by the long-run JSQ and M/M/N runners.
    struct RunOptions
    {
        std::uint64_t seed = 0;
        /// Diffusion-time prefix excluded from the occupation statistics.
        double warmup_diff = 0.0;
        /// Spacing of the path-sample / window grid in diffusion time; 0 disables both.
        double grid_step_diff = 0.0;
        /// Functionals integrated per grid window (for batch means).
        std::vector<Functional> observers;
        std::vector<StoppingRule> stopping_times;
        /// Memory-growth alarm when the longest queue exceeds this many tasks.
        std::size_t alarm_level = 50;
        /// Record the idle-integral trace on [0, min(drift_window_t, tau2(drift_window_b)))].
        bool record_drift_trace = false;
        double drift_window_t = 1.0;
        double drift_window_b = 0.5;
    };

    /// Per-window integrals of the observers, on the diffusion-time grid.
    struct WindowSeries
    {
        double window_real = 0.0;
        std::size_t observers = 0;
        /// Index of the first window lying entirely after the warm-up.
        std::size_t first_steady = 0;
        std::vector<double> integrals; // row-major: window x observer

        std::size_t windows() const noexcept { return observers == 0 ? 0 : integrals.size() / observers; }
        double at(std::size_t window, std::size_t observer) const { return integrals[window * observers + observer]; }
    };

    struct TrajectorySummary
    {
        ScalingRegime regime;
        std::uint64_t seed = 0;
        SimulationClock clock;
        std::optional<OccupancyState> final_state; // JSQ only
        std::int64_t final_total = 0;
        /// Occupation statistics after the warm-up.
        OccupationAccumulator occupation;
        /// Post-warm-up integrals of RunOptions::observers, same order.
        std::vector<double> observer_integrals;
        std::vector<ScaledObservation> path;
        WindowSeries windows;
        std::vector<StoppingTimeRecord> stopping;
        std::size_t max_level_seen = 0;
        bool alarm = false;
        std::optional<DriftIdentityTrace> drift_trace;

        double observed_time() const noexcept { return occupation.time(); }
        double time_average(const Functional& f) const { return occupation.average(f, regime); }
    };

    /// Simulates the JSQ chain from `init` for `horizon_diff` units of diffusion time
    /// (N^(2 eps) * horizon_diff real time). Deterministic in (options.seed, arguments).
    TrajectorySummary run_jsq(const ScalingRegime& regime, const OccupancyState& init, double horizon_diff,
                              const RunOptions& options);

    /// M/M/N comparison chain on the total count S: up rate lambda(N), down rate min(S, N).
    TrajectorySummary run_mmn(const ScalingRegime& regime, std::int64_t init_total, double horizon_diff,
                              const RunOptions& options);
}

#pragma once

#include "jsq/functional.hpp"
#include "jsq/occupancy.hpp"
#include "jsq/regime.hpp"
#include "jsq/stopping.hpp"

#include <cstdint>
#include <chrono>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace jsq
{
    /// Raised when a single cycle exceeds its event budget.
    class WatchdogError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    /// One regenerative cycle started from the renewal state (I = 0, Q2 = upper, Qbar3 = 0).
    /// Q2 alternates down to `lower` and back up to `upper` until an up-crossing finds
    /// Qbar3 = 0; theta is the time of that up-crossing.
    struct RenewalCycle
    {
        double theta = 0.0;
        std::int64_t k_bar = 0;
        std::uint64_t events = 0;
        double first_down_crossing = 0.0; // sigma_1
        double first_up_crossing = 0.0;   // sigma_2 - sigma_1
        /// Integrals over [0, theta) keyed by Functional::name(); always contains
        /// time, idle, centered_total, q2, qbar3, qbar3_positive, idle_zero.
        std::map<std::string, double> integrals;
        /// Cycle maxima of idle, centered_total, q2, qbar3.
        std::map<std::string, double> sup_records;
        /// sigma_1 .. sigma_{2 k_bar} and theta, when requested.
        std::vector<StoppingTimeRecord> crossings;

        double integral(const std::string& name) const;
    };

    struct RenewalOptions
    {
        std::vector<Functional> functionals;
        /// Per-cycle event budget; 0 picks roughly 1000/beta^2 diffusion-time units.
        std::uint64_t max_events_per_cycle = 0;
        /// sigma_1 longer than this (diffusion time) counts as a slow down-crossing;
        /// 0 picks 50/beta^2.
        double slow_down_crossing_diff = 0.0;
        unsigned workers = 0;
        bool record_crossings = false;
        /// Cycles not started by this time are skipped; the run keeps the completed prefix.
        std::optional<std::chrono::steady_clock::time_point> deadline;
    };

    struct RenewalRun
    {
        ScalingRegime regime;
        double b_const = 1.0;
        std::int64_t lower = 0; // floor(B N^(1/2+eps))
        std::int64_t upper = 0; // floor(2B N^(1/2+eps))
        std::uint64_t seed = 0;
        std::vector<RenewalCycle> cycles;
        /// Occupation measure pooled over all cycles (the numerator of every ratio estimate).
        OccupationAccumulator pooled;
        std::size_t slow_down_crossings = 0;
        bool deadline_hit = false;

        std::uint64_t total_events() const noexcept;
    };

    /// B = 1 unless floor(2 N^(1/2+eps)) reaches N, in which case B is halved until the
    /// renewal level fits below N.
    double default_b_const(const ScalingRegime& regime);

    OccupancyState renewal_state(const ScalingRegime& regime, double b_const);

    /// Simulates n_cycles i.i.d. cycles. Cycle k draws from substream (seed, k), so results
    /// do not depend on the worker count.
    RenewalRun run_renewal_cycles(const ScalingRegime& regime, double b_const, std::size_t n_cycles,
                                  std::uint64_t seed, const RenewalOptions& options = {});
}

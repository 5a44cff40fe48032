#pragma once

#include "jsq/occupancy.hpp"
#include "jsq/regime.hpp"

#include <cstdint>

namespace jsq
{
    struct CouplingReport
    {
        std::uint64_t events = 0;
        double t_real = 0.0;
        /// Steps after which the claimed order was violated (expected 0).
        std::uint64_t violations = 0;
        /// Smallest observed value of (dominating - dominated).
        std::int64_t min_gap = 0;
        /// True when the run ended at the coupling's validity boundary instead of the horizon.
        bool stopped_early = false;
    };

    /// JSQ and M/M/N driven by one uniformised event stream at rate lambda(N) + N: arrivals are
    /// shared, and a potential departure with mark U ~ Uniform[0, N) completes service in JSQ
    /// iff U < Q1 (band of levels picks the queue length) and in M/M/N iff U < min(S, N).
    /// Starting from equal totals, S_JSQ >= S_MMN after every step.
    CouplingReport run_coupled_jsq_mmn(const ScalingRegime& regime, const OccupancyState& init, double horizon_real,
                                       std::uint64_t seed);

    /// JSQ idle count against the bounding birth-death process with up rate N - B N^(1/2+eps):
    /// arrivals are shared; JSQ level-1 completions are a thinning of the bound's up moves;
    /// completions at level >= 2 come from a separate stream. I <= bound holds until Q2 first
    /// reaches floor(B N^(1/2+eps)), where the run stops.
    CouplingReport run_coupled_idle_bound(const ScalingRegime& regime, double b_const, const OccupancyState& init,
                                          std::int64_t bound_init, double horizon_real, std::uint64_t seed);
}

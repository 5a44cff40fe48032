#pragma once

#include "jsq/regime.hpp"
#include "jsq/rng.hpp"

#include <cstdint>
#include <vector>

namespace jsq
{
    /// Constant-rate birth-death chain on {0, 1, 2, ...}.
    /// With reflect_at_zero = false the state 0 is absorbing.
    struct BirthDeathParams
    {
        double up_rate = 1.0;
        double down_rate = 1.0;
        bool reflect_at_zero = true;

        double rho() const noexcept { return up_rate / down_rate; }
    };

    void validate(const BirthDeathParams& params);

    /// Upper-bounding idle process for the heavily loaded phase: up rate N - B N^(1/2+eps),
    /// down rate N - beta N^(1/2-eps), reflecting at zero. Requires
    /// N > B N^(1/2+eps) > beta N^(1/2-eps).
    BirthDeathParams make_idle_bound_params(const ScalingRegime& regime, double b_const);

    struct BirthDeathTrajectory
    {
        double t_real = 0.0;
        std::uint64_t events = 0;
        std::int64_t final_state = 0;
        /// Time spent in each state after the warm-up, index = state.
        std::vector<double> occupation;
        /// Equal-length batches of the post-warm-up window; each row indexed by state.
        double batch_time = 0.0;
        std::vector<std::vector<double>> batch_occupation;
        /// Count of k -> k+1 and k+1 -> k transitions (index k), whole run.
        std::vector<std::uint64_t> up_moves;
        std::vector<std::uint64_t> down_moves;

        double observed_time() const noexcept;
        double fraction_at(std::int64_t k) const noexcept;
        double fraction_at_least(std::int64_t k) const noexcept;
    };

    struct BirthDeathOptions
    {
        std::uint64_t seed = 0;
        double warmup = 0.0; // real time
        std::size_t batches = 0;
    };

    /// Gillespie run for `horizon` units of real time.
    BirthDeathTrajectory run_birth_death(const BirthDeathParams& params, std::int64_t init, double horizon,
                                         const BirthDeathOptions& options);

    /// (1 - rho) rho^k; rejects up_rate >= down_rate.
    double birth_death_stationary(const BirthDeathParams& params, std::int64_t k);
}

#include "jsq/occupancy.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace jsq
{
    OccupancyState::OccupancyState(std::int64_t n) : n_(n)
    {
        if (n < 1)
        {
            throw ValidationError("number of servers must be >= 1, got " + std::to_string(n));
        }
    }

    OccupancyState::OccupancyState(std::int64_t n, std::vector<std::int64_t> levels) : OccupancyState(n)
    {
        while (!levels.empty() && levels.back() == 0)
        {
            levels.pop_back();
        }
        std::int64_t prev = n;
        for (std::size_t i = 0; i < levels.size(); ++i)
        {
            if (levels[i] < 0 || levels[i] > prev)
            {
                throw ValidationError("occupancy levels must satisfy N >= Q1 >= Q2 >= ... >= 0 (violated at Q" +
                                      std::to_string(i + 1) + ")");
            }
            prev = levels[i];
            total_ += levels[i];
            if (i >= 2)
            {
                qbar3_ += levels[i];
            }
        }
        q_ = std::move(levels);
    }

    OccupancyState OccupancyState::from_queue_lengths(std::span<const std::int64_t> lengths)
    {
        if (lengths.empty())
        {
            throw ValidationError("need at least one server");
        }
        const auto longest = *std::max_element(lengths.begin(), lengths.end());
        if (*std::min_element(lengths.begin(), lengths.end()) < 0)
        {
            throw ValidationError("queue lengths must be non-negative");
        }
        std::vector<std::int64_t> levels(static_cast<std::size_t>(longest), 0);
        for (auto len : lengths)
        {
            for (std::int64_t i = 0; i < len; ++i)
            {
                ++levels[static_cast<std::size_t>(i)];
            }
        }
        return OccupancyState(static_cast<std::int64_t>(lengths.size()), std::move(levels));
    }

    std::vector<std::int64_t> OccupancyState::queue_lengths() const
    {
        std::vector<std::int64_t> out;
        out.reserve(static_cast<std::size_t>(n_));
        for (std::size_t l = q_.size(); l >= 1; --l)
        {
            out.insert(out.end(), static_cast<std::size_t>(exact(l)), static_cast<std::int64_t>(l));
        }
        out.insert(out.end(), static_cast<std::size_t>(idle()), 0);
        return out;
    }

    OccupancyState apply_arrival(OccupancyState state)
    {
        state.arrive();
        return state;
    }

    OccupancyState apply_departure(OccupancyState state, std::size_t level)
    {
        state.depart(level);
        return state;
    }

    OccupancyState heavy_state(std::int64_t n, std::int64_t q2)
    {
        return OccupancyState(n, {n, q2});
    }

    double scaled_total(std::int64_t total, const ScalingRegime& regime) noexcept
    {
        return static_cast<double>(total - regime.n) / regime.space_scale();
    }

    std::int64_t unscale_total(double x, const ScalingRegime& regime) noexcept
    {
        return regime.n + std::llround(x * regime.space_scale());
    }

    ScaledObservation scale_state(const OccupancyState& state, const ScalingRegime& regime, double t_real)
    {
        ScaledObservation obs;
        obs.t_diff = regime.to_diffusion_time(t_real);
        obs.x = scaled_total(state.total(), regime);
        obs.i_scaled = static_cast<double>(state.idle()) / regime.idle_scale();
        obs.q2_scaled = static_cast<double>(state.q2()) / regime.space_scale();
        return obs;
    }
}

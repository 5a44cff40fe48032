#pragma once

#include "jsq/regime.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace jsq
{
    /// Occupancy descriptor (Q1, Q2, ...) of an N-server system, where Qi counts the
    /// servers holding at least i tasks. Trailing zero levels are never stored, so
    /// `levels().size()` is the longest queue length in the system.
    ///
    /// The vector is the whole Markovian state of the JSQ chain; server identities and
    /// tie-breaking among equally short queues do not affect it.
    class OccupancyState
    {
    public:
        OccupancyState() = default;
        /// Empty system with n servers.
        explicit OccupancyState(std::int64_t n);
        /// Validates n >= Q1 >= Q2 >= ... >= 0 and trims trailing zeros.
        OccupancyState(std::int64_t n, std::vector<std::int64_t> levels);

        /// Builds the occupancy vector from one queue length per server (any order).
        static OccupancyState from_queue_lengths(std::span<const std::int64_t> lengths);
        /// Per-server queue lengths, longest first; the inverse of from_queue_lengths.
        std::vector<std::int64_t> queue_lengths() const;

        std::int64_t servers() const noexcept { return n_; }
        /// Q_i for i >= 1, with the convention Q_0 = N.
        std::int64_t level(std::size_t i) const noexcept
        {
            if (i == 0)
            {
                return n_;
            }
            return i <= q_.size() ? q_[i - 1] : 0;
        }
        /// Number of servers with exactly i tasks (i >= 1).
        std::int64_t exact(std::size_t i) const noexcept { return level(i) - level(i + 1); }
        std::int64_t busy() const noexcept { return level(1); }
        std::int64_t idle() const noexcept { return n_ - level(1); }
        std::int64_t q2() const noexcept { return level(2); }
        std::int64_t total() const noexcept { return total_; }
        /// Q3 + Q4 + ...: tasks sitting in third or later positions.
        std::int64_t qbar3() const noexcept { return qbar3_; }
        std::size_t max_level() const noexcept { return q_.size(); }
        std::span<const std::int64_t> levels() const noexcept { return q_; }

        /// JSQ arrival: the task joins a server at the current minimum queue length,
        /// i.e. increments Q_j with j = 1 + max{i >= 0 : Q_i = N}. Returns j.
        std::size_t arrive()
        {
            std::size_t j = 1;
            while (j <= q_.size() && q_[j - 1] == n_)
            {
                ++j;
            }
            if (j > q_.size())
            {
                q_.push_back(0);
            }
            ++q_[j - 1];
            ++total_;
            if (j >= 3)
            {
                ++qbar3_;
            }
            return j;
        }

        /// Service completion at a server holding exactly `level` tasks.
        void depart(std::size_t level)
        {
            if (level == 0 || exact(level) < 1)
            {
                throw std::invalid_argument("no server holds exactly " + std::to_string(level) + " tasks");
            }
            depart_unchecked(level);
        }

        /// depart() without the precondition check, for the event loop where the level
        /// was drawn proportionally to exact(level).
        void depart_unchecked(std::size_t level) noexcept
        {
            --q_[level - 1];
            --total_;
            if (level >= 3)
            {
                --qbar3_;
            }
            if (q_.back() == 0)
            {
                q_.pop_back();
            }
        }

        friend bool operator==(const OccupancyState&, const OccupancyState&) = default;

    private:
        std::int64_t n_ = 1;
        std::vector<std::int64_t> q_;
        std::int64_t total_ = 0;
        std::int64_t qbar3_ = 0;
    };

    OccupancyState apply_arrival(OccupancyState state);
    OccupancyState apply_departure(OccupancyState state, std::size_t level);

    /// State with I = 0, Q2 = q2, and nothing beyond the second position.
    OccupancyState heavy_state(std::int64_t n, std::int64_t q2);

    /// Scaled coordinates of one observation.
    struct ScaledObservation
    {
        double t_diff = 0.0;
        double x = 0.0;         // (S - N) / N^(1/2+eps)
        double i_scaled = 0.0;  // I / N^(1/2-eps)
        double q2_scaled = 0.0; // Q2 / N^(1/2+eps)
    };

    ScaledObservation scale_state(const OccupancyState& state, const ScalingRegime& regime, double t_real);
    double scaled_total(std::int64_t total, const ScalingRegime& regime) noexcept;
    /// Inverse of scaled_total, rounded to the nearest task count.
    std::int64_t unscale_total(double x, const ScalingRegime& regime) noexcept;
}

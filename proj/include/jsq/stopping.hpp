#pragma once

#include "jsq/functional.hpp"
#include "jsq/regime.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace jsq
{
    enum class StoppingKind
    {
        tau1,  // first time I  = floor(level * N^(1/2-eps))
        tau2,  // first time Q2 = floor(level * N^(1/2+eps))
        tau_s, // first time S  = floor(level * N^(1/2+eps))
        sigma, // alternating Q2 crossings inside a renewal cycle
        theta, // end of a renewal cycle
    };

    std::string to_string(StoppingKind kind);

    struct StoppingRule
    {
        StoppingKind kind = StoppingKind::tau2;
        double level = 0.0; // threshold argument in scaled units
    };

    /// One hitting time. `t_hit` is real time and is written at most once.
    class StoppingTimeRecord
    {
    public:
        StoppingTimeRecord(StoppingKind kind, double level, std::int64_t threshold)
            : kind_(kind), level_(level), threshold_(threshold)
        {
        }

        /// Integer threshold derived from the rule with the exact floors used throughout.
        static StoppingTimeRecord from_rule(const StoppingRule& rule, const ScalingRegime& regime);

        StoppingKind kind() const noexcept { return kind_; }
        double level() const noexcept { return level_; }
        std::int64_t threshold() const noexcept { return threshold_; }
        const std::optional<double>& t_hit() const noexcept { return t_hit_; }
        bool resolved() const noexcept { return t_hit_.has_value(); }

        /// Records the hit if the state satisfies the condition and nothing was recorded yet.
        bool observe(const StateView& state, double t_real);
        /// Marks the hit unconditionally (renewal bookkeeping). No-op if already set.
        void mark(double t_real);

    private:
        StoppingKind kind_;
        double level_;
        std::int64_t threshold_;
        std::optional<double> t_hit_;
    };
}

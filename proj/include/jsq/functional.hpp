#pragma once

#include "jsq/regime.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace jsq
{
    /// The coordinates every path functional is allowed to depend on.
    /// For the M/M/N comparison chain, q2 holds the number of waiting tasks and qbar3 is 0.
    struct StateView
    {
        std::int64_t idle = 0;
        std::int64_t total = 0;
        std::int64_t q2 = 0;
        std::int64_t qbar3 = 0;
    };

    enum class FunctionalKind
    {
        time,           // 1
        idle,           // I
        centered_total, // S - N
        q2,             // Q2
        qbar3,          // Q3 + Q4 + ...
        qbar3_positive, // 1{Qbar3 > 0}
        idle_zero,      // 1{I = 0}
        idle_equals,    // 1{I = k}
        total_equals,   // 1{S = k}
        x_positive_pow, // (X^+)^p
        x_at_most,      // 1{X <= x}
    };

    /// A named integrand f(state) for time integrals and stationary estimates.
    /// Text form: "idle", "q2", "idle_eq:3", "x_pos_pow:2", "x_le:1.5", ...
    struct Functional
    {
        FunctionalKind kind = FunctionalKind::time;
        double param = 0.0;

        static Functional parse(std::string_view text);
        std::string name() const;

        /// True when f depends on the state only through S.
        bool total_only() const noexcept;
        /// True when f depends on the state only through I.
        bool idle_only() const noexcept;

        double operator()(const StateView& s, const ScalingRegime& regime) const;

        friend bool operator==(const Functional&, const Functional&) = default;
    };

    std::vector<Functional> parse_functionals(const std::vector<std::string>& names);

    /// Integer-indexed histogram of time spent at each value, growing in both directions.
    class OccupationHistogram
    {
    public:
        void add(std::int64_t value, double dt)
        {
            if (value < base_ || value >= base_ + static_cast<std::int64_t>(bins_.size()))
            {
                grow_to(value);
            }
            bins_[static_cast<std::size_t>(value - base_)] += dt;
        }
        double at(std::int64_t value) const noexcept
        {
            if (value < base_ || value >= base_ + static_cast<std::int64_t>(bins_.size()))
            {
                return 0.0;
            }
            return bins_[static_cast<std::size_t>(value - base_)];
        }
        bool empty() const noexcept { return bins_.empty(); }
        std::int64_t lowest() const noexcept { return base_; }
        std::int64_t highest() const noexcept { return base_ + static_cast<std::int64_t>(bins_.size()) - 1; }
        double total() const noexcept;

        void merge(const OccupationHistogram& other);
        void clear() noexcept { bins_.clear(); }

        template <class F>
        void for_each(F&& f) const
        {
            for (std::size_t i = 0; i < bins_.size(); ++i)
            {
                if (bins_[i] != 0.0)
                {
                    f(base_ + static_cast<std::int64_t>(i), bins_[i]);
                }
            }
        }

    private:
        void grow_to(std::int64_t value);

        std::int64_t base_ = 0;
        std::vector<double> bins_;
    };

    /// Time integrals of the standard integrands plus occupation histograms of S and I, from
    /// which any S-only or I-only functional is recovered exactly after the fact.
    class OccupationAccumulator
    {
    public:
        void add(const StateView& s, double dt)
        {
            time_ += dt;
            idle_ += static_cast<double>(s.idle) * dt;
            q2_ += static_cast<double>(s.q2) * dt;
            qbar3_ += static_cast<double>(s.qbar3) * dt;
            if (s.qbar3 > 0)
            {
                qbar3_positive_ += dt;
            }
            total_hist_.add(s.total, dt);
            idle_hist_.add(s.idle, dt);
        }

        /// Integral of f over the recorded time.
        double integral(const Functional& f, const ScalingRegime& regime) const;
        double time() const noexcept { return time_; }
        /// Integral divided by recorded time.
        double average(const Functional& f, const ScalingRegime& regime) const;

        const OccupationHistogram& total_occupation() const noexcept { return total_hist_; }
        const OccupationHistogram& idle_occupation() const noexcept { return idle_hist_; }

        void merge(const OccupationAccumulator& other);
        void clear() noexcept;

    private:
        double time_ = 0.0;
        double idle_ = 0.0;
        double q2_ = 0.0;
        double qbar3_ = 0.0;
        double qbar3_positive_ = 0.0;
        OccupationHistogram total_hist_;
        OccupationHistogram idle_hist_;
    };
}

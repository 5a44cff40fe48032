#pragma once

#include "jsq/renewal.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace jsq
{
    enum class EstimateMethod
    {
        regenerative,
        batch_means,
        exact,
        sample,
    };

    std::string_view to_string(EstimateMethod m) noexcept;

    struct StationaryEstimate
    {
        double value = 0.0;
        double std_err = 0.0;
        std::size_t n_units = 0;
        EstimateMethod method = EstimateMethod::regenerative;
        /// True when the regenerative SE came from the jackknife (cycle-length CV above 2).
        bool jackknife = false;
    };

    /// mean(numerators) / mean(lengths) with a delta-method standard error; falls back to the
    /// delete-one jackknife when the coefficient of variation of the lengths exceeds 2.
    StationaryEstimate regenerative_ratio(std::span<const double> numerators, std::span<const double> lengths);

    /// Ratio estimate of the stationary mean of a functional accumulated in every cycle.
    StationaryEstimate regenerative_ratio(const std::vector<RenewalCycle>& cycles, const std::string& functional);

    /// Piecewise-constant path given as (duration, value) segments.
    class TimeWeightedSeries
    {
    public:
        void add(double duration, double value);
        std::size_t segments() const noexcept { return durations_.size(); }
        double duration() const noexcept { return total_; }
        double time_average() const;

        StationaryEstimate batch_means(std::size_t n_batches) const;

    private:
        std::vector<double> durations_;
        std::vector<double> values_;
        double total_ = 0.0;
    };

    /// Mean and standard error of precomputed batch averages.
    StationaryEstimate batch_means(std::span<const double> batch_averages);

    /// sup_x |F_n(x) - F(x)| including left limits; the samples are copied and sorted.
    double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf);

    /// Kolmogorov distance between a weighted atomic law (values with masses, any order)
    /// and a continuous CDF. Masses need not be normalised.
    double ks_distance_weighted(std::span<const double> values, std::span<const double> masses,
                                const std::function<double(double)>& cdf);

    /// Sample mean of x^p (p > 0) with its CLT standard error.
    StationaryEstimate moment_estimate(std::span<const double> samples, double p);

    /// Fraction of samples >= x with its binomial standard error.
    StationaryEstimate tail_estimate(std::span<const double> samples, double x);

    /// Least-squares slope of log P(X >= x) over a grid of points in [lo, hi] where the
    /// empirical tail is positive.
    double log_tail_slope(std::span<const double> samples, double lo, double hi, std::size_t points = 16);

    /// Sample mean and standard error of the mean.
    StationaryEstimate sample_mean(std::span<const double> samples);

    double median(std::vector<double> values);

    /// Kolmogorov distance between the time-weighted law of X = (S - N) / N^(1/2+eps) in an
    /// occupation measure and Gamma(2, beta).
    double x_ks_distance(const OccupationAccumulator& occupation, const ScalingRegime& regime);

    /// Centre of the fullest bin [origin + k w, origin + (k+1) w) of the samples.
    double histogram_mode(std::span<const double> samples, double width, double origin = 0.0);
}

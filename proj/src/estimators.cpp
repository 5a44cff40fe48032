#include "jsq/estimators.hpp"

#include "jsq/diffusion.hpp"
#include "jsq/regime.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace jsq
{
    namespace
    {
        // F(x-) for step CDFs with jumps at the sample points; equals F(x) for continuous F.
        double left_limit(const std::function<double(double)>& cdf, double x)
        {
            return cdf(std::nextafter(x, -std::numeric_limits<double>::infinity()));
        }
    }

    std::string_view to_string(EstimateMethod m) noexcept
    {
        switch (m)
        {
        case EstimateMethod::regenerative:
            return "regenerative";
        case EstimateMethod::batch_means:
            return "batch_means";
        case EstimateMethod::exact:
            return "exact";
        case EstimateMethod::sample:
            return "sample";
        }
        return "unknown";
    }

    StationaryEstimate regenerative_ratio(std::span<const double> numerators, std::span<const double> lengths)
    {
        if (numerators.size() != lengths.size())
        {
            throw ValidationError("numerator and cycle-length lists differ in size");
        }
        const std::size_t n = lengths.size();
        if (n < 2)
        {
            throw ValidationError("ratio estimate needs at least 2 cycles");
        }
        const double dn = static_cast<double>(n);
        const double my = std::accumulate(numerators.begin(), numerators.end(), 0.0) / dn;
        const double mt = std::accumulate(lengths.begin(), lengths.end(), 0.0) / dn;
        if (!(mt > 0.0))
        {
            throw ValidationError("cycle lengths must have a positive mean");
        }
        const double r = my / mt;

        StationaryEstimate e;
        e.value = r;
        e.n_units = n;
        e.method = EstimateMethod::regenerative;

        double var_t = 0.0;
        double var_z = 0.0; // residuals Y - r T
        for (std::size_t i = 0; i < n; ++i)
        {
            const double dt = lengths[i] - mt;
            const double z = numerators[i] - r * lengths[i];
            var_t += dt * dt;
            var_z += z * z;
        }
        var_t /= dn - 1.0;
        var_z /= dn - 1.0;
        const double cv = std::sqrt(var_t) / mt;

        if (cv <= 2.0)
        {
            e.std_err = std::sqrt(var_z / dn) / mt;
            return e;
        }

        e.jackknife = true;
        const double sy = my * dn;
        const double st = mt * dn;
        double mean_loo = 0.0;
        std::vector<double> loo(n);
        for (std::size_t i = 0; i < n; ++i)
        {
            loo[i] = (sy - numerators[i]) / (st - lengths[i]);
            mean_loo += loo[i];
        }
        mean_loo /= dn;
        double ss = 0.0;
        for (double v : loo)
        {
            ss += (v - mean_loo) * (v - mean_loo);
        }
        e.std_err = std::sqrt((dn - 1.0) / dn * ss);
        return e;
    }

    StationaryEstimate regenerative_ratio(const std::vector<RenewalCycle>& cycles, const std::string& functional)
    {
        if (cycles.empty())
        {
            throw ValidationError("no renewal cycles to estimate from");
        }
        std::vector<double> num;
        std::vector<double> len;
        num.reserve(cycles.size());
        len.reserve(cycles.size());
        for (const auto& c : cycles)
        {
            num.push_back(c.integral(functional));
            len.push_back(c.theta);
        }
        return regenerative_ratio(num, len);
    }

    void TimeWeightedSeries::add(double duration, double value)
    {
        if (!(duration >= 0.0))
        {
            throw ValidationError("segment duration must be non-negative");
        }
        durations_.push_back(duration);
        values_.push_back(value);
        total_ += duration;
    }

    double TimeWeightedSeries::time_average() const
    {
        if (!(total_ > 0.0))
        {
            throw ValidationError("series has zero duration");
        }
        double s = 0.0;
        for (std::size_t i = 0; i < values_.size(); ++i)
        {
            s += durations_[i] * values_[i];
        }
        return s / total_;
    }

    StationaryEstimate TimeWeightedSeries::batch_means(std::size_t n_batches) const
    {
        if (n_batches < 2)
        {
            throw ValidationError("batch means needs at least 2 batches");
        }
        if (segments() < n_batches)
        {
            throw ValidationError("series has fewer segments than batches");
        }
        if (!(total_ > 0.0))
        {
            throw ValidationError("series has zero duration");
        }
        const double width = total_ / static_cast<double>(n_batches);
        std::vector<double> sums(n_batches, 0.0);
        std::size_t b = 0;
        double room = width;
        for (std::size_t i = 0; i < values_.size(); ++i)
        {
            double d = durations_[i];
            while (d > 0.0)
            {
                const double take = (b + 1 == n_batches) ? d : std::min(d, room);
                sums[b] += take * values_[i];
                d -= take;
                room -= take;
                if (room <= 0.0 && b + 1 < n_batches)
                {
                    ++b;
                    room = width;
                }
            }
        }
        for (auto& s : sums)
        {
            s /= width;
        }
        return jsq::batch_means(sums);
    }

    StationaryEstimate batch_means(std::span<const double> batch_averages)
    {
        StationaryEstimate e = sample_mean(batch_averages);
        e.method = EstimateMethod::batch_means;
        return e;
    }

    StationaryEstimate sample_mean(std::span<const double> samples)
    {
        if (samples.size() < 2)
        {
            throw ValidationError("need at least 2 values for a standard error");
        }
        const double n = static_cast<double>(samples.size());
        const double m = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
        double ss = 0.0;
        for (double v : samples)
        {
            ss += (v - m) * (v - m);
        }
        StationaryEstimate e;
        e.value = m;
        e.std_err = std::sqrt(ss / (n - 1.0) / n);
        e.n_units = samples.size();
        e.method = EstimateMethod::sample;
        return e;
    }

    double ks_distance(std::vector<double> samples, const std::function<double(double)>& cdf)
    {
        if (samples.empty())
        {
            throw ValidationError("KS distance needs at least one sample");
        }
        std::sort(samples.begin(), samples.end());
        const double n = static_cast<double>(samples.size());
        double d = 0.0;
        std::size_t i = 0;
        while (i < samples.size())
        {
            std::size_t j = i;
            while (j < samples.size() && samples[j] == samples[i])
            {
                ++j;
            }
            const double f = cdf(samples[i]);
            const double f_left = left_limit(cdf, samples[i]);
            d = std::max({d, std::abs(static_cast<double>(j) / n - f), std::abs(f_left - static_cast<double>(i) / n)});
            i = j;
        }
        return std::min(d, 1.0);
    }

    double ks_distance_weighted(std::span<const double> values, std::span<const double> masses,
                                const std::function<double(double)>& cdf)
    {
        if (values.size() != masses.size() || values.empty())
        {
            throw ValidationError("weighted KS needs matching non-empty value and mass lists");
        }
        std::vector<std::size_t> order(values.size());
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const double total = std::accumulate(masses.begin(), masses.end(), 0.0);
        if (!(total > 0.0))
        {
            throw ValidationError("weighted KS needs positive total mass");
        }
        double below = 0.0;
        double d = 0.0;
        for (std::size_t k = 0; k < order.size();)
        {
            const double v = values[order[k]];
            double at = 0.0;
            while (k < order.size() && values[order[k]] == v)
            {
                at += masses[order[k]];
                ++k;
            }
            const double f = cdf(v);
            d = std::max({d, std::abs(left_limit(cdf, v) - below / total), std::abs((below + at) / total - f)});
            below += at;
        }
        return std::min(d, 1.0);
    }

    StationaryEstimate moment_estimate(std::span<const double> samples, double p)
    {
        if (samples.empty())
        {
            throw ValidationError("moment estimate needs samples");
        }
        if (!(p > 0.0))
        {
            throw ValidationError("moment order must be positive");
        }
        std::vector<double> powered(samples.size());
        std::transform(samples.begin(), samples.end(), powered.begin(), [p](double x) { return std::pow(x, p); });
        if (powered.size() == 1)
        {
            return {powered[0], 0.0, 1, EstimateMethod::sample, false};
        }
        return sample_mean(powered);
    }

    StationaryEstimate tail_estimate(std::span<const double> samples, double x)
    {
        if (samples.empty())
        {
            throw ValidationError("tail estimate needs samples");
        }
        const double n = static_cast<double>(samples.size());
        const auto hits = std::count_if(samples.begin(), samples.end(), [x](double v) { return v >= x; });
        const double q = static_cast<double>(hits) / n;
        return {q, std::sqrt(q * (1.0 - q) / n), samples.size(), EstimateMethod::sample, false};
    }

    double log_tail_slope(std::span<const double> samples, double lo, double hi, std::size_t points)
    {
        if (samples.empty() || !(hi > lo) || points < 2)
        {
            throw ValidationError("tail slope needs samples, hi > lo and at least 2 points");
        }
        std::vector<double> sorted(samples.begin(), samples.end());
        std::sort(sorted.begin(), sorted.end());
        const double n = static_cast<double>(sorted.size());
        std::vector<double> xs;
        std::vector<double> ys;
        for (std::size_t i = 0; i < points; ++i)
        {
            const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
            const auto at_least = sorted.end() - std::lower_bound(sorted.begin(), sorted.end(), x);
            if (at_least > 0)
            {
                xs.push_back(x);
                ys.push_back(std::log(static_cast<double>(at_least) / n));
            }
        }
        if (xs.size() < 2)
        {
            throw ValidationError("empirical tail is empty over the fit range");
        }
        const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
        const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
        double sxy = 0.0;
        double sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
        {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        return sxy / sxx;
    }

    double median(std::vector<double> values)
    {
        if (values.empty())
        {
            throw ValidationError("median of an empty list");
        }
        const std::size_t mid = values.size() / 2;
        std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
        const double upper = values[mid];
        if (values.size() % 2 == 1)
        {
            return upper;
        }
        return 0.5 * (*std::max_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid)) + upper);
    }

    double x_ks_distance(const OccupationAccumulator& occupation, const ScalingRegime& regime)
    {
        std::vector<double> xs;
        std::vector<double> mass;
        occupation.total_occupation().for_each([&](std::int64_t total, double dt) {
            xs.push_back(scaled_total(total, regime));
            mass.push_back(dt);
        });
        if (xs.empty())
        {
            throw ValidationError("occupation measure is empty");
        }
        const double beta = regime.beta;
        return ks_distance_weighted(xs, mass, [beta](double x) { return x > 0.0 ? gamma2_cdf(x, beta) : 0.0; });
    }

    double histogram_mode(std::span<const double> samples, double width, double origin)
    {
        if (samples.empty() || !(width > 0.0))
        {
            throw ValidationError("mode needs samples and a positive bin width");
        }
        auto bin = [&](double x) { return static_cast<std::int64_t>(std::floor((x - origin) / width)); };
        const auto [lo, hi] = std::minmax_element(samples.begin(), samples.end());
        const std::int64_t first = bin(*lo);
        const std::int64_t span = bin(*hi) - first + 1;
        if (span > 100'000'000)
        {
            throw ValidationError("mode histogram would need more than 1e8 bins");
        }
        std::vector<std::size_t> counts(static_cast<std::size_t>(span), 0);
        for (double x : samples)
        {
            ++counts[static_cast<std::size_t>(bin(x) - first)];
        }
        const auto best = std::max_element(counts.begin(), counts.end()) - counts.begin();
        return origin + (static_cast<double>(first + best) + 0.5) * width;
    }
}

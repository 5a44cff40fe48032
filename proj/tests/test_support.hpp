#pragma once

#include "jsq/engine.hpp"
#include "jsq/estimators.hpp"

#include <cmath>
#include <vector>

namespace jsq::testing
{
    /// Batch averages of observer k over the post-warm-up windows of a run.
    inline std::vector<double> window_averages(const TrajectorySummary& s, std::size_t k)
    {
        std::vector<double> out;
        for (std::size_t w = s.windows.first_steady; w < s.windows.windows(); ++w)
        {
            out.push_back(s.windows.at(w, k) / s.windows.window_real);
        }
        return out;
    }

    inline StationaryEstimate window_estimate(const TrajectorySummary& s, std::size_t k)
    {
        return batch_means(window_averages(s, k));
    }

    inline bool within_se(const StationaryEstimate& e, double reference, double k = 3.0)
    {
        return std::abs(e.value - reference) <= k * e.std_err;
    }

    /// Balance recursion for the M/M/n birth-death chain, normalised over [0, k_max].
    inline std::vector<double> mmn_by_recursion(std::int64_t n, double lambda, std::int64_t k_max)
    {
        std::vector<double> p(static_cast<std::size_t>(k_max + 1));
        p[0] = 1.0;
        for (std::int64_t k = 1; k <= k_max; ++k)
        {
            p[static_cast<std::size_t>(k)] =
                p[static_cast<std::size_t>(k - 1)] * lambda / static_cast<double>(std::min(k, n));
        }
        double z = 0.0;
        for (double v : p)
        {
            z += v;
        }
        for (double& v : p)
        {
            v /= z;
        }
        return p;
    }
}

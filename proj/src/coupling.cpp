#include "jsq/coupling.hpp"

#include "jsq/rng.hpp"

#include <algorithm>
#include <limits>

namespace jsq
{
    namespace
    {
        /// Level whose band [Q_{l+1}, Q_l) contains the mark; requires mark < Q_from.
        std::size_t level_for_mark(const OccupancyState& s, double mark, std::size_t from)
        {
            std::size_t level = from;
            while (level < s.max_level() && mark < static_cast<double>(s.level(level + 1)))
            {
                ++level;
            }
            return level;
        }
    }

    CouplingReport run_coupled_jsq_mmn(const ScalingRegime& regime, const OccupancyState& init, double horizon_real,
                                       std::uint64_t seed)
    {
        if (init.servers() != regime.n)
        {
            throw ValidationError("initial state does not match the regime's server count");
        }
        Rng rng = make_rng(seed);
        const double n = static_cast<double>(regime.n);
        const double rate = regime.lambda_total + n;

        OccupancyState jsq = init;
        std::int64_t mmn = init.total();
        CouplingReport rep;
        rep.min_gap = jsq.total() - mmn;
        double t = 0.0;
        for (;;)
        {
            t += exp1(rng) / rate;
            if (t >= horizon_real)
            {
                break;
            }
            const double u = uniform01(rng) * rate;
            if (u < regime.lambda_total)
            {
                jsq.arrive();
                ++mmn;
            }
            else
            {
                const double mark = u - regime.lambda_total;
                if (mark < static_cast<double>(jsq.busy()))
                {
                    jsq.depart_unchecked(level_for_mark(jsq, mark, 1));
                }
                if (mark < static_cast<double>(std::min(mmn, regime.n)))
                {
                    --mmn;
                }
            }
            ++rep.events;
            const std::int64_t gap = jsq.total() - mmn;
            rep.min_gap = std::min(rep.min_gap, gap);
            if (gap < 0)
            {
                ++rep.violations;
            }
        }
        rep.t_real = std::min(t, horizon_real);
        return rep;
    }

    CouplingReport run_coupled_idle_bound(const ScalingRegime& regime, double b_const, const OccupancyState& init,
                                          std::int64_t bound_init, double horizon_real, std::uint64_t seed)
    {
        if (init.servers() != regime.n)
        {
            throw ValidationError("initial state does not match the regime's server count");
        }
        const double b_scaled = b_const * regime.space_scale();
        const std::int64_t stop_level = space_threshold(regime, b_const);
        if (!(static_cast<double>(init.q2()) > b_scaled))
        {
            throw ValidationError("idle-bound coupling needs Q2(0) > B N^(1/2+eps)");
        }
        if (bound_init < init.idle())
        {
            throw ValidationError("bounding process must start at or above I(0)");
        }
        const double n = static_cast<double>(regime.n);
        const double up = n - b_scaled;
        if (!(up > 0.0))
        {
            throw ValidationError("idle-bound coupling needs N > B N^(1/2+eps)");
        }
        const double rate = regime.lambda_total + up + n;

        Rng rng = make_rng(seed);
        OccupancyState jsq = init;
        std::int64_t bound = bound_init;
        CouplingReport rep;
        rep.min_gap = bound - jsq.idle();
        double t = 0.0;
        for (;;)
        {
            t += exp1(rng) / rate;
            if (t >= horizon_real)
            {
                break;
            }
            const double u = uniform01(rng) * rate;
            if (u < regime.lambda_total)
            {
                jsq.arrive();
                bound = std::max<std::int64_t>(bound - 1, 0);
            }
            else if (u < regime.lambda_total + up)
            {
                const double mark = u - regime.lambda_total;
                const double singles = static_cast<double>(jsq.exact(1));
                if (singles > up)
                {
                    rep.stopped_early = true; // thinning no longer valid
                    break;
                }
                ++bound;
                if (mark < singles)
                {
                    jsq.depart_unchecked(1);
                }
            }
            else
            {
                const double mark = u - regime.lambda_total - up;
                if (mark < static_cast<double>(jsq.q2()))
                {
                    jsq.depart_unchecked(level_for_mark(jsq, mark, 2));
                }
            }
            ++rep.events;
            const std::int64_t gap = bound - jsq.idle();
            rep.min_gap = std::min(rep.min_gap, gap);
            if (gap < 0)
            {
                ++rep.violations;
            }
            if (jsq.q2() <= stop_level)
            {
                rep.stopped_early = true;
                break;
            }
        }
        rep.t_real = std::min(t, horizon_real);
        return rep;
    }
}

#include "properties.hpp"

#include "jsq/diffusion.hpp"
#include "jsq/engine.hpp"
#include "jsq/estimators.hpp"
#include "jsq/experiment.hpp"
#include "jsq/io.hpp"
#include "jsq/oracle.hpp"
#include "jsq/renewal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

using namespace jsq;
using Clock = std::chrono::steady_clock;

namespace
{
    // Pinned tolerances and workloads.
    constexpr std::size_t kCycles = 1000;
    constexpr double kIdleSe = 3.0;
    constexpr double kIdleBudgetSec = 600.0;
    constexpr double kMeanRel = 0.15;
    constexpr double kKsMax = 0.08;
    constexpr double kLongQueueMax = 0.02;
    constexpr double kLittleRel = 0.15;
    constexpr double kContrastRel = 0.20;
    constexpr double kSdeKs = 0.01;
    constexpr double kSdeMomentRel = 0.02;
    constexpr double kSdeBudgetSec = 120.0;
    constexpr double kThetaSpread = 3.0;
    constexpr double kThetaShare = 0.25;
    constexpr std::size_t kDriftSeeds = 50;
    constexpr std::size_t kPropertyCases = 1000;
    constexpr double kSlopeTol = 0.1;
    constexpr std::uint64_t kSeed = 1;

    int failures = 0;

    void report(int id, const char* title, bool ok, const std::string& detail)
    {
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << id << " (" << title << "): " << detail << std::endl;
        failures += ok ? 0 : 1;
    }

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    std::string fmt(double v)
    {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.4g", v);
        return buf;
    }

    struct IdlePoint
    {
        ScalingRegime reg;
        std::size_t cycles = 0;
        double value = 0.0;
        double se = 0.0;
        bool ok = false;
    };

    IdlePoint idle_check(const RenewalRun& run)
    {
        IdlePoint p;
        p.reg = run.regime;
        p.cycles = run.cycles.size();
        if (p.cycles < 2)
        {
            return p;
        }
        const StationaryEstimate e = regenerative_ratio(run.cycles, "idle");
        const double s = run.regime.idle_scale();
        p.value = e.value / s;
        p.se = e.std_err / s;
        p.ok = p.cycles >= kCycles && std::abs(p.value - run.regime.beta) <= kIdleSe * p.se;
        return p;
    }

    StationaryEstimate scaled_x(const RenewalRun& run)
    {
        StationaryEstimate e = regenerative_ratio(run.cycles, "centered_total");
        e.value /= run.regime.space_scale();
        e.std_err /= run.regime.space_scale();
        return e;
    }

    StationaryEstimate waiting_count(const RenewalRun& run)
    {
        std::vector<double> num;
        std::vector<double> len;
        for (const auto& c : run.cycles)
        {
            num.push_back(c.integral("q2") + c.integral("qbar3"));
            len.push_back(c.theta);
        }
        return regenerative_ratio(num, len);
    }

    double percent(double rel) { return 100.0 * rel; }
}

int main()
{
    std::cout << "build " << build_tag() << std::endl;

    // ---- Renewal cycles. The two beta=1, eps=0.25 points feed criteria 1-6 and 8.
    const Clock::time_point idle_t0 = Clock::now();
    const Clock::time_point idle_deadline =
        idle_t0 + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(kIdleBudgetSec));
    const std::int64_t sizes[] = {1000, 10000};
    std::vector<RenewalRun> shared;
    for (auto n : sizes)
    {
        const ScalingRegime reg = make_regime(n, 1.0, 0.25);
        shared.push_back(run_renewal_cycles(reg, 1.0, kCycles, derive_seed(kSeed, static_cast<std::uint64_t>(n))));
    }

    std::vector<ScalingRegime> rest;
    for (auto n : sizes)
    {
        for (double beta : {0.5, 1.0})
        {
            for (double eps : {0.1, 0.25, 0.4})
            {
                if (!(beta == 1.0 && eps == 0.25))
                {
                    rest.push_back(make_regime(n, beta, eps));
                }
            }
        }
    }
    // cheapest first: events per cycle grow like N^(1+2 eps) / beta^2
    auto cost = [](const ScalingRegime& r) {
        return std::pow(static_cast<double>(r.n), 1.0 + 2.0 * r.eps) / (r.beta * r.beta);
    };
    std::sort(rest.begin(), rest.end(), [&](const auto& a, const auto& b) { return cost(a) < cost(b); });

    std::vector<IdlePoint> idle_points;
    for (const auto& run : shared)
    {
        idle_points.push_back(idle_check(run));
    }
    for (const auto& reg : rest)
    {
        RenewalOptions o;
        o.deadline = idle_deadline;
        const RenewalRun run = run_renewal_cycles(reg, default_b_const(reg), kCycles,
                                                  derive_seed(kSeed, static_cast<std::uint64_t>(reg.n) + 7), o);
        idle_points.push_back(idle_check(run));
    }
    const double idle_secs = seconds_since(idle_t0);
    {
        std::size_t complete = 0;
        std::size_t within = 0;
        std::ostringstream bad;
        for (const auto& p : idle_points)
        {
            complete += p.cycles >= kCycles ? 1 : 0;
            within += p.ok ? 1 : 0;
            if (!p.ok)
            {
                bad << " [N=" << p.reg.n << " beta=" << p.reg.beta << " eps=" << p.reg.eps << ": "
                    << p.cycles << " cycles";
                if (p.cycles >= 2)
                {
                    bad << ", " << fmt(p.value) << " +- " << fmt(p.se);
                }
                bad << "]";
            }
        }
        const bool ok = within == idle_points.size() && idle_secs <= kIdleBudgetSec;
        report(1, "idle identity", ok,
               std::to_string(within) + "/" + std::to_string(idle_points.size()) + " points within " +
                   fmt(kIdleSe) + " SE of beta with " + std::to_string(kCycles) + " cycles; " +
                   std::to_string(complete) + " points completed in " + fmt(idle_secs) + " s (budget " +
                   fmt(kIdleBudgetSec) + " s)" + bad.str());
    }

    const RenewalRun& r3 = shared[0];
    const RenewalRun& r4 = shared[1];
    const double beta = 1.0;

    {
        const StationaryEstimate x3 = scaled_x(r3);
        const StationaryEstimate x4 = scaled_x(r4);
        const double e3 = x3.value - 2.0 / beta;
        const double e4 = x4.value - 2.0 / beta;
        const bool close = std::abs(e4) <= kMeanRel * 2.0 / beta;
        const bool trend = std::abs(e4) <= std::abs(e3) + 2.0 * std::hypot(x3.std_err, x4.std_err);
        report(2, "steady-state mean", close && trend,
               "E[X] = " + fmt(x3.value) + " +- " + fmt(x3.std_err) + " (N=1e3), " + fmt(x4.value) + " +- " +
                   fmt(x4.std_err) + " (N=1e4) vs 2/beta = 2; relative error at 1e4 " + fmt(percent(e4 / 2.0)) + "%");
    }

    {
        const double k3 = x_ks_distance(r3.pooled, r3.regime);
        const double k4 = x_ks_distance(r4.pooled, r4.regime);
        report(3, "distributional fit", k4 < k3 && k4 <= kKsMax,
               "KS to Gamma(2,beta): " + fmt(k3) + " (N=1e3), " + fmt(k4) + " (N=1e4), limit " + fmt(kKsMax));
    }

    {
        const StationaryEstimate q3 = regenerative_ratio(r3.cycles, "qbar3_positive");
        const StationaryEstimate q4 = regenerative_ratio(r4.cycles, "qbar3_positive");
        report(4, "vanishing long queues", q4.value < kLongQueueMax && q4.value < q3.value,
               "P(Qbar3 > 0) = " + fmt(q3.value) + " (N=1e3), " + fmt(q4.value) + " (N=1e4), limit " +
                   fmt(kLongQueueMax));
    }

    {
        const StationaryEstimate w = waiting_count(r4);
        const ScalingRegime& reg = r4.regime;
        const double scaled = w.value / reg.lambda_total * reg.idle_scale();
        const double rel = scaled / (2.0 / beta) - 1.0;
        report(5, "Little's law", std::abs(rel) <= kLittleRel,
               "N^(1/2-eps) E[W] = " + fmt(scaled) + " vs 2/beta = 2 (" + fmt(percent(rel)) + "%)");
    }

    {
        const ScalingRegime& reg = r4.regime;
        const double jsq = scaled_x(r4).value;
        const double mmn = (mmn_mean_total(reg.n, reg.lambda_total) - static_cast<double>(reg.n)) / reg.space_scale();
        const double ratio = jsq / mmn;
        report(6, "JSQ vs M/M/N", std::abs(ratio / 2.0 - 1.0) <= kContrastRel,
               "scaled centered means " + fmt(jsq) + " (JSQ) / " + fmt(mmn) + " (M/M/N) = " + fmt(ratio));
    }

    {
        const Clock::time_point t0 = Clock::now();
        SdeConfig cfg;
        cfg.beta = beta;
        cfg.step = 1e-3;
        cfg.steps = 10'000'000;
        cfg.x0 = 1.0 / beta;
        cfg.seed = kSeed;
        const std::vector<double> xs = sde_stationary_samples(cfg);
        const double ks = ks_distance(xs, [&](double x) { return gamma2_cdf(std::max(x, 0.0), beta); });
        const double m1 = moment_estimate(xs, 1).value / gamma2_moment(1, beta) - 1.0;
        const double m2 = moment_estimate(xs, 2).value / gamma2_moment(2, beta) - 1.0;
        const double secs = seconds_since(t0);
        report(7, "SDE stationary law",
               ks < kSdeKs && std::abs(m1) <= kSdeMomentRel && std::abs(m2) <= kSdeMomentRel && secs <= kSdeBudgetSec,
               "KS " + fmt(ks) + " (limit " + fmt(kSdeKs) + "), moment errors " + fmt(percent(m1)) + "% / " +
                   fmt(percent(m2)) + "% (limit " + fmt(percent(kSdeMomentRel)) + "%), " +
                   std::to_string(xs.size()) + " samples in " + fmt(secs) + " s");
    }

    {
        double lo = INFINITY;
        double hi = 0.0;
        double worst_share = 0.0;
        for (const auto& run : shared)
        {
            double sum = 0.0;
            double sum2 = 0.0;
            double top = 0.0;
            for (const auto& c : run.cycles)
            {
                const double t = run.regime.to_diffusion_time(c.theta);
                sum += t;
                sum2 += t * t;
                top = std::max(top, t * t);
            }
            const double mean = sum / static_cast<double>(run.cycles.size());
            lo = std::min(lo, mean);
            hi = std::max(hi, mean);
            worst_share = std::max(worst_share, top / sum2);
        }
        report(8, "renewal scaling", hi / lo <= kThetaSpread && worst_share <= kThetaShare,
               "E[Theta]/N^(2 eps) spread factor " + fmt(hi / lo) + " (limit " + fmt(kThetaSpread) +
                   "), largest single-cycle share of sum Theta^2 " + fmt(worst_share) + " (limit " +
                   fmt(kThetaShare) + ")");
    }

    {
        ExperimentConfig cfg;
        cfg.scenario = Scenario::oracle_check;
        cfg.grid.n = {100};
        cfg.grid.beta = {1.0};
        cfg.grid.eps = {0.1};
        cfg.seed = kSeed;
        cfg.horizon = 1e6;
        cfg.warmup = 100.0;
        cfg.batches = 40;
        cfg.load = 0.75;
        cfg.cap = 100;
        cfg.mmn_n = {2, 10};
        const ExperimentResult res = run_experiment(cfg);
        std::size_t checks = 0;
        std::ostringstream bad;
        for (const auto& row : res.rows)
        {
            if (row.status == CheckStatus::none)
            {
                continue;
            }
            ++checks;
            if (row.status == CheckStatus::fail)
            {
                bad << " [" << row.quantity << " n=" << row.n.value_or(0) << ": " << fmt(row.value) << " +- "
                    << fmt(row.std_err.value_or(0.0)) << " vs " << fmt(row.reference.value_or(0.0)) << "]";
            }
        }
        report(9, "oracle equivalence", res.ok() && checks == 11,
               std::to_string(checks - res.failed_checks) + "/" + std::to_string(checks) +
                   " checks within 3 SE (N=2 JSQ exact, M/M/2, M/M/10, idle bound)" + bad.str());
    }

    {
        double med[2];
        for (std::size_t k = 0; k < 2; ++k)
        {
            const ScalingRegime reg = make_regime(sizes[k], 1.0, 0.25);
            std::vector<double> d;
            for (std::size_t s = 0; s < kDriftSeeds; ++s)
            {
                RunOptions o;
                o.seed = derive_seed(kSeed + 100, s);
                o.record_drift_trace = true;
                const TrajectorySummary run = run_jsq(reg, renewal_state(reg, 1.0), 1.0, o);
                d.push_back(drift_identity_diagnostic(*run.drift_trace, 1.0));
            }
            med[k] = median(d);
        }
        report(10, "drift-identity diagnostic", med[1] < med[0],
               "median sup discrepancy over " + std::to_string(kDriftSeeds) + " seeds: " + fmt(med[0]) +
                   " (N=1e3), " + fmt(med[1]) + " (N=1e4)");
    }

    {
        std::size_t passed = 0;
        std::ostringstream bad;
        const auto& list = props::all_properties();
        for (const auto& p : list)
        {
            const Clock::time_point t0 = Clock::now();
            props::PropertyReport rep;
            try
            {
                rep = p.run(kPropertyCases, kSeed);
            }
            catch (const std::exception& e)
            {
                rep.name = p.name;
                rep.detail = std::string("aborted: ") + e.what();
            }
            std::cout << "  property " << rep.name << ": " << (rep.passed() ? "ok" : "VIOLATED") << ", "
                      << rep.violations << "/" << rep.cases << " violations (allowed " << rep.allowed << ")";
            if (!rep.detail.empty())
            {
                std::cout << "; " << rep.detail;
            }
            std::cout << " [" << fmt(seconds_since(t0)) << " s]" << std::endl;
            if (rep.passed())
            {
                ++passed;
            }
            else
            {
                bad << " " << rep.name;
            }
        }

        ExperimentConfig rt;
        rt.scenario = Scenario::regime_table;
        rt.grid.n = {1000, 10000};
        rt.grid.beta = {1.0};
        rt.grid.eps = {0.0, 0.1, 0.25, 0.4};
        rt.seed = kSeed;
        rt.cycles = 100;
        const ExperimentResult res = run_experiment(rt);
        std::size_t slopes = 0;
        std::size_t slopes_ok = 0;
        for (const auto& row : res.rows)
        {
            if (row.method == "summary")
            {
                ++slopes;
                const bool ok = row.status == CheckStatus::pass;
                slopes_ok += ok ? 1 : 0;
                std::cout << "  regime slope eps=" << fmt(row.eps.value_or(0.0)) << ": " << fmt(row.value) << " vs "
                          << fmt(row.reference.value_or(0.0)) << (ok ? " ok" : " OUT OF RANGE") << std::endl;
            }
        }
        const bool rt_ok = res.ok() && slopes == 4 && slopes_ok == 4;
        report(11, "invariant suites", passed == list.size() && rt_ok,
               std::to_string(passed) + "/" + std::to_string(list.size()) + " properties hold over " +
                   std::to_string(kPropertyCases) + " cases; regime slopes " + std::to_string(slopes_ok) + "/" +
                   std::to_string(slopes) + " within " + fmt(kSlopeTol) + bad.str());
    }

    std::cout << (failures == 0 ? "all criteria met" : std::to_string(failures) + " criteria not met") << std::endl;
    return failures == 0 ? 0 : 1;
}

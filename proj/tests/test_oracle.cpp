#include "doctest.h"
#include "test_support.hpp"

#include "jsq/oracle.hpp"
#include "jsq/regime.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>
#include <vector>

using namespace jsq;

namespace
{
    /// Stationary law of two-server JSQ on {x >= y >= 0, x + y <= cap} by Gauss-Seidel sweeps
    /// over the global balance equations. States are sorted queue lengths (x, y).
    std::map<std::pair<int, int>, double> jsq2_gauss_seidel(double lambda, int cap)
    {
        std::map<std::pair<int, int>, double> pi;
        for (int x = 0; x <= cap; ++x)
        {
            for (int y = 0; y <= x && x + y <= cap; ++y)
            {
                pi[{x, y}] = 1.0;
            }
        }
        auto sorted = [](int a, int b) { return a >= b ? std::pair{a, b} : std::pair{b, a}; };
        // inflow lists: (source, rate)
        std::map<std::pair<int, int>, std::vector<std::pair<std::pair<int, int>, double>>> in;
        std::map<std::pair<int, int>, double> out;
        for (const auto& [s, _] : pi)
        {
            const auto [x, y] = s;
            double o = 0.0;
            if (x + y < cap)
            {
                in[sorted(x, y + 1)].push_back({s, lambda});
                o += lambda;
            }
            if (x > 0)
            {
                in[sorted(x - 1, y)].push_back({s, 1.0});
                o += 1.0;
            }
            if (y > 0)
            {
                in[sorted(x, y - 1)].push_back({s, 1.0});
                o += 1.0;
            }
            out[s] = o;
        }
        for (int sweep = 0; sweep < 200000; ++sweep)
        {
            double change = 0.0;
            for (auto& [s, p] : pi)
            {
                double flow = 0.0;
                for (const auto& [src, rate] : in[s])
                {
                    flow += pi[src] * rate;
                }
                const double next = flow / out[s];
                change = std::max(change, std::abs(next - p) / std::max(next, 1e-300));
                p = next;
            }
            if (change < 1e-14)
            {
                break;
            }
        }
        double z = 0.0;
        for (const auto& [s, p] : pi)
        {
            z += p;
        }
        for (auto& [s, p] : pi)
        {
            p /= z;
        }
        return pi;
    }
}

TEST_SUITE("oracle")
{
    TEST_CASE("single server is geometric")
    {
        const auto p = mmn_stationary(1, 0.5, 40);
        for (int k = 0; k <= 40; ++k)
        {
            CHECK(p[static_cast<std::size_t>(k)] == doctest::Approx(std::pow(0.5, k + 1)).epsilon(1e-12));
        }
        CHECK(mmn_mean_total(1, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    }

    TEST_CASE("two servers at unit arrival rate")
    {
        const auto p = mmn_stationary(2, 1.0);
        CHECK(p[0] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        const auto ref = jsq::testing::mmn_by_recursion(2, 1.0, 200);
        double waiting = 0.0;
        for (std::size_t k = 2; k < ref.size(); ++k)
        {
            waiting += static_cast<double>(k - 2) * ref[k];
        }
        CHECK(mmn_mean_waiting(2, 1.0) == doctest::Approx(waiting).epsilon(1e-10));
        CHECK(mmn_mean_waiting(2, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
        CHECK(mmn_wait_probability(2, 1.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }

    TEST_CASE("closed form matches the balance recursion")
    {
        for (auto [n, lambda] : {std::pair<std::int64_t, double>{10, 7.5}, {50, 45.0}, {3, 0.3}})
        {
            const auto ref = jsq::testing::mmn_by_recursion(n, lambda, 2000);
            const auto p = mmn_stationary(n, lambda, 2000);
            for (std::size_t k = 0; k < 200; ++k)
            {
                CHECK(p[k] == doctest::Approx(ref[k]).epsilon(1e-10));
            }
            double mean = 0.0;
            for (std::size_t k = 0; k < ref.size(); ++k)
            {
                mean += static_cast<double>(k) * ref[k];
            }
            CHECK(mmn_mean_total(n, lambda) == doctest::Approx(mean).epsilon(1e-10));
        }
    }

    TEST_CASE("M/M/N scaled centered mean within 10% of 1/beta at N=1e4")
    {
        const ScalingRegime r = make_regime(10000, 1.0, 0.25);
        const double scaled = (mmn_mean_total(10000, r.lambda_total) - 10000.0) / r.space_scale();
        CHECK(std::abs(scaled - 1.0) <= 0.1);
    }

    TEST_CASE("M/M/N scaled centered mean against the Halfin-Whitt waiting probability")
    {
        const ScalingRegime r = make_regime(10000, 1.0, 0.25);
        const double scaled = (mmn_mean_total(10000, r.lambda_total) - 10000.0) / r.space_scale();
        // Halfin-Whitt waiting probability at b = beta N^-eps = 0.1; the 1/beta limit is reached slowly
        const double b = 0.1;
        const double phi = std::exp(-0.5 * b * b) / std::sqrt(2.0 * M_PI);
        const double cdf = 0.5 * std::erfc(-b / std::sqrt(2.0));
        const double wait = 1.0 / (1.0 + b * cdf / phi);
        CHECK(scaled == doctest::Approx(0.999 * wait - 0.01).epsilon(0.01));
        CHECK(scaled < 1.0);
    }

    TEST_CASE("detailed balance of the closed form")
    {
        const double lambda = 95.0;
        const auto p = mmn_stationary(100, lambda);
        for (std::size_t k = 0; k + 1 < p.size(); ++k)
        {
            const double lhs = lambda * p[k];
            const double rhs = static_cast<double>(std::min<std::size_t>(k + 1, 100)) * p[k + 1];
            if (lhs > 1e-300)
            {
                CHECK(std::abs(lhs - rhs) <= 1e-12 * lhs);
            }
        }
        CHECK(mmn_tail_beyond(100, lambda, static_cast<std::int64_t>(p.size()) - 1) < 1e-12);
    }

    TEST_CASE("exact single-server solve equals M/M/1")
    {
        const auto sol = jsq_exact_small(1, 0.4, 60);
        const auto p = mmn_stationary(1, 0.4, 60);
        REQUIRE(sol.total_marginal.size() == 61);
        for (std::size_t k = 0; k <= 60; ++k)
        {
            CHECK(std::abs(sol.total_marginal[k] - p[k]) <= 1e-10);
        }
    }

    TEST_CASE("exact two-server solve against Gauss-Seidel")
    {
        const auto sol = jsq_exact_small(2, 1.5, 100);
        CHECK(sol.boundary_mass < 1e-9);
        CHECK(sol.mean_total() == doctest::Approx(3.6720802902).epsilon(1e-9));

        const auto gs = jsq2_gauss_seidel(1.5, 100);
        REQUIRE(sol.states.size() == gs.size());
        double worst = 0.0;
        for (std::size_t i = 0; i < sol.states.size(); ++i)
        {
            const auto& q = sol.states[i];
            const int x = q.size() > 0 ? static_cast<int>(q[0]) : 0;
            const int y = q.size() > 1 ? static_cast<int>(q[1]) : 0;
            worst = std::max(worst, std::abs(sol.pi[i] - gs.at({x, y})));
        }
        CHECK(worst < 1e-10);

        double idle0 = 0.0;
        for (const auto& [s, p] : gs)
        {
            idle0 += s.second > 0 ? p : 0.0;
        }
        CHECK(sol.idle_probability(0) == doctest::Approx(idle0).epsilon(1e-9));
    }

    TEST_CASE("truncation too tight for the requested accuracy")
    {
        CHECK_THROWS_AS(jsq_exact_small(2, 1.5, 60), TruncationError);
        try
        {
            jsq_exact_small(2, 1.5, 60);
        }
        catch (const TruncationError& e)
        {
            CHECK(e.boundary_mass() > 1e-9);
        }
        CHECK_THROWS_AS(jsq_exact_small(4, 1.0, 20), ValidationError);
        CHECK_THROWS_AS(jsq_exact_small(2, 2.5, 50), ValidationError);
    }

    TEST_CASE("flow balance of the exact solve")
    {
        for (auto [n, lambda, cap] : {std::tuple<std::int64_t, double, std::int64_t>{2, 1.0, 80}, {3, 2.0, 90}, {2, 1.5, 100}})
        {
            const auto sol = jsq_exact_small(n, lambda, cap);
            const double blocked = sol.total_marginal[static_cast<std::size_t>(cap)];
            CHECK(std::abs(lambda * (1.0 - blocked) - sol.mean_busy()) < 1e-9);
            CHECK(std::abs(lambda - sol.mean_busy()) < 1e-9);
        }
    }

    TEST_CASE("geometric law of the idle bound")
    {
        CHECK(bd_geometric(1.0, 2.0, 0) == doctest::Approx(0.5));
        CHECK(bd_geometric(1.0, 2.0, 3) == doctest::Approx(0.0625));
        CHECK_THROWS_AS(bd_geometric(2.0, 2.0, 1), ValidationError);
        CHECK_THROWS_AS(bd_geometric(1.0, 2.0, -1), ValidationError);
    }
}

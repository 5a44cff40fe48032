#include "properties.hpp"

#include <doctest.h>

#include <map>

using namespace jsq::props;

// Short smoke runs; the acceptance binary drives the full case counts.
TEST_SUITE("properties")
{
    TEST_CASE("every property passes a short run")
    {
        const std::map<std::string, std::size_t> heavy = {
            {"renewal_consistency", 10}, {"regenerative_vs_batch", 10}, {"gamma_sampler_ks", 3},
            {"sde_weak_order", 20},      {"sde_mode", 3},               {"output_determinism", 20},
            {"scale_round_trip", 20},
        };
        for (const auto& p : all_properties())
        {
            const auto it = heavy.find(p.name);
            const std::size_t cases = it == heavy.end() ? 100 : it->second;
            const PropertyReport rep = p.run(cases, 7);
            INFO(rep.name, ": ", rep.violations, " violations (allowed ", rep.allowed, ") ", rep.detail);
            CHECK(rep.cases >= cases);
            CHECK(rep.passed());
        }
    }

    TEST_CASE("binomial allowance")
    {
        CHECK(binomial_allowance(1000, 0.0) == 0);
        CHECK(binomial_allowance(100, 1.0) == 100);
        // P(Bin(1000, 0.01) > 21) is about 6.5e-4, P(> 20) about 1.5e-3
        CHECK(binomial_allowance(1000, 0.01) == 21);
    }
}

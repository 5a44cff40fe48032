#include "doctest.h"

#include "jsq/experiment.hpp"
#include "jsq/io.hpp"

#include "json.hpp"

#include <set>
#include <sstream>
#include <string>

using namespace jsq;

TEST_SUITE("experiment")
{
    TEST_CASE("config parsing")
    {
        const ExperimentConfig c = parse_config(R"(
scenario: idle_identity
grid:
  n: [1000, 10000]
  beta: 1
  eps: [0.1, 0.25]
cycles: 50
seed: 9
format: ndjson
)");
        CHECK(c.scenario == Scenario::idle_identity);
        CHECK(c.grid.n == std::vector<std::int64_t>{1000, 10000});
        CHECK(c.grid.beta == std::vector<double>{1.0});
        CHECK(c.cycles == 50);
        CHECK(c.seed == 9);
        CHECK(c.format == OutputFormat::ndjson);
        CHECK(expand_grid(c).size() == 4);
        CHECK(describe(c).find("scenario=idle_identity") != std::string::npos);
    }

    TEST_CASE("config errors")
    {
        CHECK_THROWS_AS(parse_config("scenario: nope\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("scenario: idle_identity\ncycels: 3\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("scenario: [unclosed\n"), ConfigError);
        CHECK_THROWS_AS(parse_config("scenario: idle_identity\ncycles: many\n"), ConfigError);
        CHECK_THROWS_AS(load_config("/nonexistent/config"), ConfigError);

        const ExperimentConfig bad = parse_config("scenario: little_law\ngrid: {n: [100], beta: [20], eps: [0]}\n");
        CHECK_THROWS_AS(expand_grid(bad), ConfigError);
    }

    TEST_CASE("empty grid is rejected before anything runs")
    {
        const ExperimentConfig c = parse_config("scenario: idle_identity\ngrid: {n: [], beta: [1], eps: [0.1]}\n");
        CHECK_THROWS_AS(expand_grid(c), ConfigError);
        CHECK_THROWS_AS(run_experiment(c), ConfigError);
    }

    TEST_CASE("rows carry their parameters")
    {
        ExperimentConfig c = parse_config("scenario: idle_identity\ngrid: {n: [200], beta: [1], eps: [0.2]}\n");
        c.cycles = 40;
        c.replications = 2;
        c.workers = 1;
        const ExperimentResult r = run_experiment(c);
        CHECK(r.errors == 0);
        REQUIRE(r.rows.size() == 2);
        std::set<std::uint64_t> seeds;
        for (const auto& row : r.rows)
        {
            CHECK(row.scenario == "idle_identity");
            CHECK(row.n == 200);
            CHECK(row.beta == 1.0);
            CHECK(row.eps == 0.2);
            REQUIRE(row.seed.has_value());
            seeds.insert(*row.seed);
            CHECK(row.status != CheckStatus::none);
            CHECK(row.reference == doctest::Approx(1.0));
        }
        CHECK(seeds.size() == 2);
    }

    TEST_CASE("failures of one grid point are isolated")
    {
        ExperimentConfig c = parse_config("scenario: renewal_scaling\ngrid: {n: [300], beta: [1], eps: [0.1], b_const: [1, 100]}\n");
        c.cycles = 20;
        c.workers = 1;
        const ExperimentResult r = run_experiment(c);
        CHECK(r.errors == 1);
        CHECK_FALSE(r.ok());
        bool have_error = false;
        bool have_theta = false;
        for (const auto& row : r.rows)
        {
            have_error = have_error || row.quantity == "error";
            have_theta = have_theta || row.quantity == "theta_mean_diffusion";
        }
        CHECK(have_error);
        CHECK(have_theta);
    }

    TEST_CASE("cross-N summary when the automatic B changes with N")
    {
        // eps=0.25: B=0.5 at N=10 (2 N^0.75 >= N), B=1 at N=40
        ExperimentConfig c = parse_config("scenario: regime_table\ngrid: {n: [10, 40], beta: [1], eps: [0.25]}\n");
        c.cycles = 20;
        c.workers = 1;
        const ExperimentResult r = run_experiment(c);
        std::set<double> bs;
        int slopes = 0;
        for (const auto& row : r.rows)
        {
            if (row.quantity == "excess_mean")
            {
                bs.insert(*row.b_const);
            }
            if (row.quantity == "excess_loglog_slope")
            {
                ++slopes;
                CHECK_FALSE(row.b_const.has_value());
                CHECK(row.n_units == 2u);
            }
        }
        CHECK(bs == std::set<double>{0.5, 1.0});
        CHECK(slopes == 1);
    }

    TEST_CASE("CSV quoting and number formatting")
    {
        CHECK(csv_field("plain") == "plain");
        CHECK(csv_field("a,b") == "\"a,b\"");
        CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
        CHECK(csv_field("line\nbreak") == "\"line\nbreak\"");
        CHECK(format_number(0.1) == "0.1");
        CHECK(format_number(2.0) == "2");
        CHECK(format_number(1e-20) == "1e-20");
    }

    TEST_CASE("writers")
    {
        ResultRow row;
        row.scenario = "little_law";
        row.n = 1000;
        row.beta = 1.0;
        row.eps = 0.25;
        row.seed = 3;
        row.quantity = "wait_mean";
        row.value = 0.5;
        row.method = "regenerative";
        row.note = "a, b";

        std::ostringstream csv;
        ResultWriter w(csv, OutputFormat::csv, "v1");
        w.comment("hello");
        w.write(row);
        w.write(row);
        const std::string text = csv.str();
        CHECK(text.rfind("# hello\n", 0) == 0);
        CHECK(text.find("scenario,n,beta,eps,b_const,seed,build,quantity") != std::string::npos);
        CHECK(text.find("little_law,1000,1,0.25,,3,v1,wait_mean,,0.5,,,regenerative,,,\"a, b\"") !=
              std::string::npos);

        std::ostringstream nd;
        ResultWriter j(nd, OutputFormat::ndjson, "v1");
        j.comment("ignored");
        j.write(row);
        const auto parsed = nlohmann::json::parse(nd.str());
        CHECK(parsed["quantity"] == "wait_mean");
        CHECK(parsed["n"] == 1000);
        CHECK(parsed["b_const"].is_null());
        CHECK(parsed["build"] == "v1");

        CHECK(parse_format("csv") == OutputFormat::csv);
        CHECK_THROWS(parse_format("xml"));
    }
}

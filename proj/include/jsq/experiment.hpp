#pragma once

#include "jsq/io.hpp"
#include "jsq/regime.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jsq
{
    /// Configuration problems (unknown keys, bad values, unreadable files): exit code 2.
    class ConfigError : public std::runtime_error
    {
    public:
        using std::runtime_error::runtime_error;
    };

    enum class Scenario
    {
        steady_state_gamma,
        idle_identity,
        little_law,
        jsq_vs_mmn,
        renewal_scaling,
        sde_stationary,
        process_overlay,
        hitting_times,
        regime_table,
        oracle_check,
    };

    Scenario parse_scenario(std::string_view text);
    std::string_view to_string(Scenario s) noexcept;

    struct ParameterGrid
    {
        std::vector<std::int64_t> n;
        std::vector<double> beta;
        std::vector<double> eps;
        /// Empty: pick B per point with default_b_const.
        std::vector<double> b_const;
    };

    struct ExperimentConfig
    {
        Scenario scenario = Scenario::idle_identity;
        ParameterGrid grid;
        std::size_t replications = 1;
        std::uint64_t seed = 1;
        std::size_t cycles = 1000;
        /// Diffusion-time horizon of long runs and path overlays.
        double horizon = 100.0;
        double warmup = 10.0;
        std::size_t batches = 20;
        double grid_step = 0.01;
        /// SDE integrator.
        double step = 1e-3;
        std::uint64_t steps = 10'000'000;
        /// Small-system oracle checks: per-server load, truncation cap, M/M/N sizes.
        double load = 0.75;
        std::int64_t cap = 100;
        std::vector<std::int64_t> mmn_n = {2, 10};
        unsigned workers = 0;
        std::string output;
        OutputFormat format = OutputFormat::csv;
    };

    /// Parses the YAML experiment schema; throws ConfigError.
    ExperimentConfig parse_config(const std::string& text);
    /// Reads `path`, or `path.yaml` when `path` has no extension and does not exist.
    ExperimentConfig load_config(const std::string& path);

    struct GridPoint
    {
        std::int64_t n = 0;
        double beta = 1.0;
        double eps = 0.0;
        std::optional<double> b_const;
    };

    /// Cartesian product of the grid lists; sde_stationary only uses beta.
    /// Every point is validated before anything runs; throws ConfigError.
    std::vector<GridPoint> expand_grid(const ExperimentConfig& config);

    struct ExperimentResult
    {
        std::vector<ResultRow> rows;
        std::size_t failed_checks = 0;
        std::size_t errors = 0;

        bool ok() const noexcept { return failed_checks == 0 && errors == 0; }
    };

    /// Runs every (grid point, replication) task on the worker pool. A failing task becomes
    /// an "error" row; the other rows are kept.
    ExperimentResult run_experiment(const ExperimentConfig& config);

    /// One-line "key=value ..." summary of the resolved configuration.
    std::string describe(const ExperimentConfig& config);
}

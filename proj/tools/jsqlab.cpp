#include "jsq/diffusion.hpp"
#include "jsq/engine.hpp"
#include "jsq/estimators.hpp"
#include "jsq/experiment.hpp"
#include "jsq/io.hpp"
#include "jsq/oracle.hpp"
#include "jsq/renewal.hpp"
#include "jsq/rng.hpp"

#include "CLI11.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace
{
    using namespace jsq;

    struct Common
    {
        std::string out;
        std::string format = "csv";
        std::uint64_t seed = 1;
    };

    /// Writes to --out when given, stdout otherwise.
    class Sink
    {
    public:
        explicit Sink(const std::string& path)
        {
            if (!path.empty())
            {
                file_ = std::make_unique<std::ofstream>(path);
                if (!*file_)
                {
                    throw ConfigError("cannot open output file '" + path + "'");
                }
            }
        }
        std::ostream& stream() { return file_ ? *file_ : std::cout; }

    private:
        std::unique_ptr<std::ofstream> file_;
    };

    std::string utc_now()
    {
        const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
        std::tm tm{};
        gmtime_r(&t, &tm);
        char buf[32];
        std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
        return buf;
    }

    void announce(const std::string& command, const std::string& params)
    {
        std::cerr << "# jsqlab " << command << ' ' << params << '\n';
    }

    void provenance(ResultWriter& w, const std::string& command, const std::string& params)
    {
        w.comment("jsqlab " + std::string(build_tag()) + " " + command);
        w.comment(params);
        w.comment("generated " + utc_now());
    }

    ResultRow row(const std::string& scenario, const ScalingRegime& reg, std::uint64_t seed, std::string quantity)
    {
        ResultRow r;
        r.scenario = scenario;
        r.n = reg.n;
        r.beta = reg.beta;
        r.eps = reg.eps;
        r.seed = seed;
        r.quantity = std::move(quantity);
        return r;
    }

    // ---------------------------------------------------------------- simulate

    struct SimulateArgs
    {
        Common common;
        std::int64_t n = 1000;
        double beta = 1.0;
        double eps = 0.25;
        double b_const = 0.0;
        double horizon = 100.0;
        double warmup = 10.0;
        double grid_step = 0.01;
        std::size_t batches = 20;
        std::size_t reps = 1;
        bool path = false;
    };

    int run_simulate(const SimulateArgs& a)
    {
        const ScalingRegime reg = make_regime(a.n, a.beta, a.eps);
        const double b = a.b_const > 0.0 ? a.b_const : default_b_const(reg);
        std::ostringstream params;
        params << reg.describe() << " b_const=" << b << " horizon=" << a.horizon << " warmup=" << a.warmup
               << " grid_step=" << a.grid_step << " batches=" << a.batches << " reps=" << a.reps
               << " seed=" << a.common.seed << " path=" << a.path << " format=" << a.common.format;
        announce("simulate", params.str());
        const OutputFormat fmt = parse_format(a.common.format);
        Sink sink(a.common.out);

        RunOptions opt;
        opt.warmup_diff = a.warmup;
        if (a.path)
        {
            opt.seed = a.common.seed;
            opt.grid_step_diff = a.grid_step;
            const TrajectorySummary s = run_jsq(reg, renewal_state(reg, b), a.horizon, opt);
            write_path(sink.stream(), fmt, path_points(s.path));
            return 0;
        }
        if (!(a.horizon > a.warmup) || a.batches < 2)
        {
            throw ValidationError("need horizon > warmup and at least 2 batches");
        }
        opt.grid_step_diff = (a.horizon - a.warmup) / static_cast<double>(a.batches);
        opt.observers = parse_functionals({"centered_total", "idle", "q2", "qbar3_positive"});
        const std::array<std::pair<const char*, double>, 4> names = {{
            {"x_mean", 1.0 / reg.space_scale()},
            {"idle_scaled_mean", 1.0 / reg.idle_scale()},
            {"q2_scaled_mean", 1.0 / reg.space_scale()},
            {"qbar3_positive_fraction", 1.0},
        }};
        ResultWriter w(sink.stream(), fmt, std::string(build_tag()));
        provenance(w, "simulate", params.str());
        for (std::size_t rep = 0; rep < a.reps; ++rep)
        {
            opt.seed = derive_seed(a.common.seed, rep);
            const TrajectorySummary s = run_jsq(reg, renewal_state(reg, b), a.horizon, opt);
            for (std::size_t k = 0; k < names.size(); ++k)
            {
                std::vector<double> batch;
                for (std::size_t win = s.windows.first_steady; win < s.windows.windows(); ++win)
                {
                    batch.push_back(s.windows.at(win, k) / s.windows.window_real * names[k].second);
                }
                ResultRow r = row("simulate", reg, opt.seed, names[k].first);
                r.b_const = b;
                set_estimate(r, batch_means(batch));
                w.write(r);
            }
        }
        return 0;
    }

    // ---------------------------------------------------------------- renewal

    struct RenewalArgs
    {
        Common common;
        std::int64_t n = 1000;
        double beta = 1.0;
        double eps = 0.25;
        double b_const = 0.0;
        std::size_t cycles = 1000;
        std::size_t reps = 1;
        unsigned workers = 0;
        std::vector<std::string> functionals;
    };

    int run_renewal(const RenewalArgs& a)
    {
        const ScalingRegime reg = make_regime(a.n, a.beta, a.eps);
        const double b = a.b_const > 0.0 ? a.b_const : default_b_const(reg);
        std::ostringstream params;
        params << reg.describe() << " b_const=" << b << " cycles=" << a.cycles << " reps=" << a.reps
               << " seed=" << a.common.seed << " workers=" << a.workers << " format=" << a.common.format;
        for (const auto& f : a.functionals)
        {
            params << " functional=" << f;
        }
        announce("renewal", params.str());
        const OutputFormat fmt = parse_format(a.common.format);
        RenewalOptions opt;
        opt.functionals = parse_functionals(a.functionals);
        opt.workers = a.workers;
        Sink sink(a.common.out);
        ResultWriter w(sink.stream(), fmt, std::string(build_tag()));
        provenance(w, "renewal", params.str());
        for (std::size_t rep = 0; rep < a.reps; ++rep)
        {
            const std::uint64_t seed = derive_seed(a.common.seed, rep);
            const RenewalRun run = run_renewal_cycles(reg, b, a.cycles, seed, opt);
            auto emit = [&](const std::string& name, StationaryEstimate e, double factor) {
                ResultRow r = row("renewal", reg, seed, name);
                r.b_const = b;
                e.value *= factor;
                e.std_err *= factor;
                set_estimate(r, e);
                w.write(r);
            };
            emit("idle_scaled_mean", regenerative_ratio(run.cycles, "idle"), 1.0 / reg.idle_scale());
            emit("x_mean", regenerative_ratio(run.cycles, "centered_total"), 1.0 / reg.space_scale());
            emit("qbar3_positive_fraction", regenerative_ratio(run.cycles, "qbar3_positive"), 1.0);
            for (const auto& f : opt.functionals)
            {
                emit(f.name(), regenerative_ratio(run.cycles, f.name()), 1.0);
            }
            std::vector<double> th;
            for (const auto& c : run.cycles)
            {
                th.push_back(reg.to_diffusion_time(c.theta));
            }
            emit("theta_mean_diffusion", sample_mean(th), 1.0);
        }
        return 0;
    }

    // ---------------------------------------------------------------- sde

    struct SdeArgs
    {
        Common common;
        double beta = 1.0;
        double step = 1e-3;
        std::uint64_t steps = 1000;
        double x0 = 0.0;
        std::uint64_t stride = 1;
    };

    int run_sde(const SdeArgs& a)
    {
        SdeConfig c;
        c.beta = a.beta;
        c.step = a.step;
        c.steps = a.steps;
        c.seed = a.common.seed;
        c.x0 = a.x0 > 0.0 ? a.x0 : 1.0 / a.beta;
        c.record_stride = a.stride;
        std::ostringstream params;
        params << "beta=" << c.beta << " step=" << c.step << " steps=" << c.steps << " x0=" << c.x0
               << " stride=" << c.record_stride << " seed=" << c.seed << " format=" << a.common.format;
        announce("sde", params.str());
        const OutputFormat fmt = parse_format(a.common.format);
        const DiffusionPath path = simulate_sde(c);
        Sink sink(a.common.out);
        write_path(sink.stream(), fmt, path_points(path));
        return 0;
    }

    // ---------------------------------------------------------------- oracle

    struct OracleArgs
    {
        Common common;
        std::string kind = "mmn";
        std::int64_t n = 1;
        double lambda = 0.5;
        std::int64_t k_max = 0;
        std::int64_t cap = 100;
        double up = 1.0;
        double down = 2.0;
    };

    int run_oracle(const OracleArgs& a)
    {
        std::ostringstream params;
        params << "kind=" << a.kind << " n=" << a.n << " lambda=" << a.lambda << " k_max=" << a.k_max
               << " cap=" << a.cap << " up=" << a.up << " down=" << a.down << " format=" << a.common.format;
        announce("oracle", params.str());
        const OutputFormat fmt = parse_format(a.common.format);
        Sink sink(a.common.out);
        ResultWriter w(sink.stream(), fmt, std::string(build_tag()));
        provenance(w, "oracle", params.str());
        auto exact = [&](std::string quantity, double v) {
            ResultRow r;
            r.scenario = "oracle_" + a.kind;
            if (a.kind != "bd")
            {
                r.n = a.n;
            }
            r.quantity = std::move(quantity);
            r.value = v;
            r.method = "exact";
            w.write(r);
        };
        if (a.kind == "mmn")
        {
            const std::vector<double> pi = mmn_stationary(a.n, a.lambda, a.k_max);
            for (std::size_t k = 0; k < pi.size(); ++k)
            {
                exact("pi_" + std::to_string(k), pi[k]);
            }
            exact("mean_total", mmn_mean_total(a.n, a.lambda));
            exact("mean_waiting", mmn_mean_waiting(a.n, a.lambda));
            exact("wait_probability", mmn_wait_probability(a.n, a.lambda));
        }
        else if (a.kind == "jsq")
        {
            const JsqExactSolution s = jsq_exact_small(a.n, a.lambda, a.cap);
            for (std::size_t k = 0; k < s.total_marginal.size(); ++k)
            {
                exact("total_prob_" + std::to_string(k), s.total_marginal[k]);
            }
            for (std::size_t k = 0; k < s.idle_marginal.size(); ++k)
            {
                exact("idle_prob_" + std::to_string(k), s.idle_marginal[k]);
            }
            for (std::size_t k = 0; k < s.q2_marginal.size(); ++k)
            {
                exact("q2_prob_" + std::to_string(k), s.q2_marginal[k]);
            }
            exact("mean_total", s.mean_total());
            exact("boundary_mass", s.boundary_mass);
        }
        else if (a.kind == "bd")
        {
            const double rho = a.up / a.down;
            std::int64_t k_max = a.k_max;
            if (k_max == 0)
            {
                k_max = rho < 1.0 && rho > 0.0 ? static_cast<std::int64_t>(std::ceil(std::log(1e-12) / std::log(rho)))
                                               : 0;
            }
            for (std::int64_t k = 0; k <= k_max; ++k)
            {
                exact("pi_" + std::to_string(k), bd_geometric(a.up, a.down, k));
            }
        }
        else
        {
            throw ValidationError("unknown oracle kind '" + a.kind + "' (expected mmn, jsq or bd)");
        }
        return 0;
    }

    // ---------------------------------------------------------------- experiment / compare-mmn

    int run_config(ExperimentConfig c, const std::string& command, const std::string& out_override,
                   const std::string& format_override)
    {
        if (!out_override.empty())
        {
            c.output = out_override;
        }
        if (!format_override.empty())
        {
            c.format = parse_format(format_override);
        }
        expand_grid(c); // fail fast on bad grids, before any output exists
        const std::string params = describe(c);
        announce(command, params);
        const ExperimentResult res = run_experiment(c);
        Sink sink(c.output);
        ResultWriter w(sink.stream(), c.format, std::string(build_tag()));
        provenance(w, command, params);
        for (const auto& r : res.rows)
        {
            w.write(r);
        }
        if (!res.ok())
        {
            std::cerr << "jsqlab: " << res.failed_checks << " check(s) failed, " << res.errors << " task error(s)\n";
            return 1;
        }
        return 0;
    }

    struct CompareArgs
    {
        Common common;
        std::int64_t n = 1000;
        double beta = 1.0;
        double eps = 0.25;
        double b_const = 0.0;
        std::size_t cycles = 1000;
        std::size_t reps = 1;
        double horizon = 10.0;
    };

    template <class T>
    void add_common(CLI::App* cmd, T& args)
    {
        cmd->add_option("--seed", args.common.seed, "Master seed");
        cmd->add_option("--out", args.common.out, "Output file (default stdout)");
        cmd->add_option("--format", args.common.format, "Output format")->check(CLI::IsMember({"csv", "ndjson"}));
    }
}

int main(int argc, char** argv)
{
    CLI::App app{"JSQ many-server simulation laboratory"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* c_sim = app.add_subcommand("simulate", "Long JSQ run from the renewal state");
    add_common(c_sim, sim);
    c_sim->add_option("--n", sim.n, "Number of servers");
    c_sim->add_option("--beta", sim.beta, "Slack parameter beta");
    c_sim->add_option("--eps", sim.eps, "Regime exponent eps");
    c_sim->add_option("--b-const", sim.b_const, "Renewal constant B (default: automatic)");
    c_sim->add_option("--horizon", sim.horizon, "Horizon in diffusion time");
    c_sim->add_option("--warmup", sim.warmup, "Warm-up in diffusion time");
    c_sim->add_option("--grid-step", sim.grid_step, "Path sampling step (with --path)");
    c_sim->add_option("--batches", sim.batches, "Batches for standard errors");
    c_sim->add_option("--reps", sim.reps, "Replications");
    c_sim->add_flag("--path", sim.path, "Write the scaled path instead of estimates");

    RenewalArgs ren;
    auto* c_ren = app.add_subcommand("renewal", "Regenerative estimates from renewal cycles");
    add_common(c_ren, ren);
    c_ren->add_option("--n", ren.n, "Number of servers");
    c_ren->add_option("--beta", ren.beta, "Slack parameter beta");
    c_ren->add_option("--eps", ren.eps, "Regime exponent eps");
    c_ren->add_option("--b-const", ren.b_const, "Renewal constant B (default: automatic)");
    c_ren->add_option("--cycles", ren.cycles, "Cycles per replication");
    c_ren->add_option("--reps", ren.reps, "Replications");
    c_ren->add_option("--workers", ren.workers, "Worker threads (0: all cores)");
    c_ren->add_option("--functional", ren.functionals, "Extra functional, e.g. idle_eq:0, x_pos_pow:2, x_le:1.5");

    SdeArgs sde;
    auto* c_sde = app.add_subcommand("sde", "Drift-implicit path of the limit diffusion");
    add_common(c_sde, sde);
    c_sde->add_option("--beta", sde.beta, "Drift parameter beta");
    c_sde->add_option("--step", sde.step, "Time step h");
    c_sde->add_option("--steps", sde.steps, "Number of steps");
    c_sde->add_option("--x0", sde.x0, "Start point (default 1/beta)");
    c_sde->add_option("--stride", sde.stride, "Keep every stride-th point");

    OracleArgs ora;
    auto* c_ora = app.add_subcommand("oracle", "Exact stationary laws (M/M/N, small JSQ, birth-death)");
    add_common(c_ora, ora);
    c_ora->add_option("--kind", ora.kind, "mmn, jsq or bd")->check(CLI::IsMember({"mmn", "jsq", "bd"}));
    c_ora->add_option("--n", ora.n, "Number of servers");
    c_ora->add_option("--lambda", ora.lambda, "Total arrival rate");
    c_ora->add_option("--k-max", ora.k_max, "Largest state listed (0: tail below 1e-12)");
    c_ora->add_option("--cap", ora.cap, "Truncation cap on total tasks (jsq)");
    c_ora->add_option("--up", ora.up, "Up rate (bd)");
    c_ora->add_option("--down", ora.down, "Down rate (bd)");

    std::string config_path;
    std::string exp_out;
    std::string exp_format;
    unsigned exp_workers = 0;
    bool exp_workers_set = false;
    auto* c_exp = app.add_subcommand("experiment", "Run a YAML experiment configuration");
    c_exp->add_option("config", config_path, "Config file (\".yaml\" may be omitted)")->required();
    c_exp->add_option("--out", exp_out, "Override the output path");
    c_exp->add_option("--format", exp_format, "Override the output format")->check(CLI::IsMember({"csv", "ndjson"}));
    auto* w_opt = c_exp->add_option("--workers", exp_workers, "Worker threads (0: all cores)");

    CompareArgs cmp;
    auto* c_cmp = app.add_subcommand("compare-mmn", "JSQ against M/M/N at the same load");
    add_common(c_cmp, cmp);
    c_cmp->add_option("--n", cmp.n, "Number of servers");
    c_cmp->add_option("--beta", cmp.beta, "Slack parameter beta");
    c_cmp->add_option("--eps", cmp.eps, "Regime exponent eps");
    c_cmp->add_option("--b-const", cmp.b_const, "Renewal constant B (default: automatic)");
    c_cmp->add_option("--cycles", cmp.cycles, "Renewal cycles");
    c_cmp->add_option("--reps", cmp.reps, "Replications");
    c_cmp->add_option("--horizon", cmp.horizon, "Coupled-run horizon in diffusion time");

    try
    {
        app.parse(argc, argv);
    }
    catch (const CLI::CallForHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::CallForAllHelp& e)
    {
        return app.exit(e);
    }
    catch (const CLI::ParseError& e)
    {
        std::cerr << "jsqlab: error: " << e.what() << '\n';
        return 2;
    }
    exp_workers_set = w_opt->count() > 0;

    try
    {
        if (c_sim->parsed())
        {
            return run_simulate(sim);
        }
        if (c_ren->parsed())
        {
            return run_renewal(ren);
        }
        if (c_sde->parsed())
        {
            return run_sde(sde);
        }
        if (c_ora->parsed())
        {
            return run_oracle(ora);
        }
        if (c_exp->parsed())
        {
            ExperimentConfig c = load_config(config_path);
            if (exp_workers_set)
            {
                c.workers = exp_workers;
            }
            return run_config(c, "experiment", exp_out, exp_format);
        }
        if (c_cmp->parsed())
        {
            ExperimentConfig c;
            c.scenario = Scenario::jsq_vs_mmn;
            c.grid.n = {cmp.n};
            c.grid.beta = {cmp.beta};
            c.grid.eps = {cmp.eps};
            if (cmp.b_const > 0.0)
            {
                c.grid.b_const = {cmp.b_const};
            }
            c.cycles = cmp.cycles;
            c.replications = cmp.reps;
            c.horizon = cmp.horizon;
            c.seed = cmp.common.seed;
            return run_config(c, "compare-mmn", cmp.common.out, cmp.common.format);
        }
    }
    catch (const ConfigError& e)
    {
        std::cerr << "jsqlab: config error: " << e.what() << '\n';
        return 2;
    }
    catch (const ValidationError& e)
    {
        std::cerr << "jsqlab: invalid parameters: " << e.what() << '\n';
        return 2;
    }
    catch (const std::exception& e)
    {
        std::cerr << "jsqlab: error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

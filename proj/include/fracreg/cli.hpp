#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fracreg/io.hpp"

namespace fracreg::cli {

namespace detail {

inline void print_row_summary(std::ostream& out, const McReport& report) {
    out << "  n        lambda    estimate        target          rel_error     status\n";
    for (const McRow& row : report.rows) {
        char line[160];
        std::snprintf(line, sizeof(line), "  %-8zu %-9.4g %-15.8g %-15.8g %-13.4g %s\n", row.n,
                      row.lambda, row.estimate, row.target, row.rel_error,
                      row.pass ? "pass" : "FAIL");
        out << line;
    }
    char timing[96];
    std::snprintf(timing, sizeof(timing), "  wall time: %.2fs\n", report.wall_time_seconds);
    out << timing;
    out << (report.all_pass() ? "ALL CHECKS PASSED\n" : "CHECKS FAILED\n");
}

struct OutputOptions {
    std::string out_dir = ".";
    std::string format = "both";   // csv | json | both

    bool want_csv() const { return format == "csv" || format == "both"; }
    bool want_json() const { return format == "json" || format == "both"; }
};

inline void ensure_dir(const std::string& dir) {
    std::filesystem::create_directories(dir);
}

inline void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open output file " + path);
    out << content;
}

template <typename CsvWriter>
void emit_report(const McReport& report, const OutputOptions& output, const std::string& stem,
                 CsvWriter&& write_csv) {
    ensure_dir(output.out_dir);
    if (output.want_json())
        write_file(output.out_dir + "/" + stem + ".json", report_to_json(report).dump(2) + "\n");
    if (output.want_csv()) {
        std::ostringstream csv;
        write_csv(csv);
        write_file(output.out_dir + "/" + stem + ".csv", csv.str());
    }
    print_row_summary(std::cout, report);
}

/// Shared state for the verify-* subcommands: a plan assembled from an
/// optional JSON config file with explicit flags taking precedence.
struct PlanOptions {
    std::string config_file;
    double h1 = 0.5, h2 = 0.5, alpha = 0.25, x0 = 0.0;
    std::vector<std::size_t> n_list;
    std::size_t n_single = 0;
    std::size_t reps = 0;
    std::uint64_t seed = 0;
    std::vector<double> lambda_grid;
    double bandwidth = 0.05;
    double eps = 0.0;
    std::size_t threads = 0;
    bool force_region = false;

    CLI::Option* opt_h1 = nullptr;
    CLI::Option* opt_h2 = nullptr;
    CLI::Option* opt_alpha = nullptr;
    CLI::Option* opt_x0 = nullptr;
    CLI::Option* opt_nlist = nullptr;
    CLI::Option* opt_n = nullptr;
    CLI::Option* opt_reps = nullptr;
    CLI::Option* opt_lambda = nullptr;
    CLI::Option* opt_bandwidth = nullptr;
    CLI::Option* opt_eps = nullptr;
    CLI::Option* opt_threads = nullptr;
    CLI::Option* opt_seed = nullptr;

    void attach(CLI::App* cmd, bool with_lambda) {
        cmd->add_option("--config", config_file, "JSON plan file; explicit flags override it");
        opt_h1 = cmd->add_option("--h1", h1, "Hurst exponent of the regressor path, in (0,1)");
        opt_h2 = cmd->add_option("--h2", h2, "Hurst exponent of the error path, in (0,1)");
        opt_alpha = cmd->add_option("--alpha", alpha,
                                    "bandwidth exponent (dimensionless); kernel scale is n^alpha");
        opt_x0 = cmd->add_option("--x0", x0, "evaluation point of the statistic");
        opt_nlist = cmd->add_option("--n-list", n_list,
                                    "increasing sample sizes (comma separated)")
                        ->delimiter(',');
        opt_n = cmd->add_option("--n", n_single, "single sample size (shorthand for --n-list)");
        opt_reps = cmd->add_option("--reps", reps, "Monte Carlo replicates per sample size");
        opt_seed = cmd->add_option("--seed", seed,
                                   "master seed (64-bit); required, there is no wall-clock default")
                       ->required();
        if (with_lambda)
            opt_lambda = cmd->add_option("--lambda-grid", lambda_grid,
                                         "frequencies for characteristic-function checks "
                                         "(comma separated)")
                             ->delimiter(',');
        opt_bandwidth = cmd->add_option("--bandwidth", bandwidth,
                                        "occupation band half-width h on the unit-time grid");
        opt_eps = cmd->add_option(
            "--eps", eps, "heat-kernel smoothing variance; defaults to bandwidth^2 when omitted");
        opt_threads = cmd->add_option("--threads", threads,
                                      "worker threads (0: FRACREG_THREADS env var, then hardware)");
        cmd->add_flag("--force-region", force_region,
                      "run even when (h1,h2,alpha) violates the admissible bandwidth region");
    }

    ExperimentPlan build(std::vector<std::size_t> default_n_list, std::size_t default_reps,
                         std::vector<double> default_lambda) const {
        ExperimentPlan plan{ModelConfig{HurstParam(0.5), HurstParam(0.5), 0.25, 1, 0.0},
                            std::move(default_n_list),
                            default_reps,
                            0,
                            std::move(default_lambda)};
        if (!config_file.empty()) {
            std::ifstream in(config_file);
            if (!in) throw std::runtime_error("cannot read config file " + config_file);
            ordered_json j;
            in >> j;
            plan = plan_from_json(j);
        }
        if (opt_h1->count()) plan.config.h1 = HurstParam(h1);
        if (opt_h2->count()) plan.config.h2 = HurstParam(h2);
        if (opt_alpha->count()) plan.config.alpha = alpha;
        if (opt_x0->count()) plan.config.x0 = x0;
        if (opt_nlist->count()) plan.n_list = n_list;
        else if (opt_n->count()) plan.n_list = {n_single};
        if (opt_reps->count()) plan.replicates = reps;
        plan.master_seed = seed;
        if (opt_lambda && opt_lambda->count()) plan.lambda_grid = lambda_grid;
        if (opt_bandwidth->count()) plan.bandwidth = bandwidth;
        if (opt_eps->count()) plan.eps = eps;
        if (opt_threads->count()) plan.threads = threads;
        if (force_region) plan.force_region = true;
        if (!plan.n_list.empty()) plan.config.n = plan.n_list.back();
        return plan;
    }
};

} // namespace detail

/// Parses argv (program name excluded) and dispatches. Returns the process
/// exit status: 0 when every check passed, 1 when a check failed, 2 on
/// configuration errors.
inline int run(std::vector<std::string> args) {
    CLI::App app{"fracreg: fractional Brownian motion simulation and verification of the "
                 "kernel-regression statistic's limit laws"};
    app.require_subcommand(1);

    int exit_status = 0;

    // fbm-generate
    auto* gen = app.add_subcommand("fbm-generate", "sample one fBm path and emit CSV (t,value)");
    struct {
        std::size_t n = 0;
        double h1 = 0.5;
        std::uint64_t seed = 0;
        std::string method = "circulant";
        std::string out_dir;
    } gen_opts;
    gen->add_option("--n", gen_opts.n, "number of unit-spaced steps")->required();
    gen->add_option("--h1", gen_opts.h1, "Hurst exponent of the path, in (0,1)")->required();
    gen->add_option("--seed", gen_opts.seed, "master seed (64-bit); required")->required();
    gen->add_option("--method", gen_opts.method, "sampler: circulant (O(n log n)) or cholesky")
        ->check(CLI::IsMember({"circulant", "cholesky"}));
    gen->add_option("--out", gen_opts.out_dir, "output directory (path.csv inside); stdout if omitted");
    gen->callback([&] {
        GaussianStream stream = seeded_substream(gen_opts.seed, 0, StreamRole::path1);
        const HurstParam hurst(gen_opts.h1);
        const FbmPath path = gen_opts.method == "cholesky"
                                 ? generate_cholesky(gen_opts.n, hurst, stream)
                                 : generate_circulant(gen_opts.n, hurst, stream);
        if (gen_opts.out_dir.empty()) {
            write_path_csv(std::cout, path);
        } else {
            detail::ensure_dir(gen_opts.out_dir);
            std::ofstream out(gen_opts.out_dir + "/path.csv");
            write_path_csv(out, path);
            std::cout << "wrote " << gen_opts.out_dir << "/path.csv\n";
        }
    });

    // region
    auto* region_cmd = app.add_subcommand(
        "region", "print the admissible bandwidth-exponent interval as JSON");
    struct {
        double h1 = 0.5, h2 = 0.5;
    } region_opts;
    region_cmd->add_option("--h1", region_opts.h1, "Hurst exponent of the regressor, in (0,1)")
        ->required();
    region_cmd->add_option("--h2", region_opts.h2, "Hurst exponent of the error, in (0,1)")
        ->required();
    region_cmd->callback([&] {
        const AdmissibleRegion region =
            admissible_region(HurstParam(region_opts.h1), HurstParam(region_opts.h2));
        ordered_json j;
        j["lower"] = region.lower;
        j["upper"] = region.upper;
        j["nonempty"] = region.nonempty();
        std::cout << j.dump() << "\n";
    });

    // verify-chaos (deterministic; no seed)
    auto* chaos_cmd = app.add_subcommand(
        "verify-chaos", "chaos partial sums of the heat kernel against the closed form");
    struct {
        double eps = 0.25;
        double z = 0.3;
        int order = 80;
        detail::OutputOptions output;
    } chaos_opts;
    chaos_cmd->add_option("--eps", chaos_opts.eps, "heat-kernel variance (default 0.25)");
    chaos_cmd->add_option("--z", chaos_opts.z, "evaluation point of the traced expansion");
    chaos_cmd->add_option("--order", chaos_opts.order, "truncation order M (default 80)");
    chaos_cmd->add_option("--out", chaos_opts.output.out_dir, "output directory for reports");
    chaos_cmd->add_option("--format", chaos_opts.output.format, "report format: csv, json or both")
        ->check(CLI::IsMember({"csv", "json", "both"}));
    chaos_cmd->callback([&] {
        const double tol = 1e-6;
        const ChaosSeries traced = make_chaos_series(chaos_opts.eps, 1.0, chaos_opts.order);
        detail::ensure_dir(chaos_opts.output.out_dir);
        if (chaos_opts.output.want_csv()) {
            std::ostringstream csv;
            write_chaos_csv(csv, chaos_opts.z, traced);
            detail::write_file(chaos_opts.output.out_dir + "/chaos.csv", csv.str());
        }
        bool all_ok = true;
        ordered_json checks = ordered_json::array();
        for (const double eps : {0.25, 0.5, 1.0}) {
            const ChaosSeries series = make_chaos_series(eps, 1.0, chaos_opts.order);
            for (const double z : {-2.0, -0.3, 0.0, 0.7, 2.0}) {
                const double err = std::abs(chaos_eval(z, series) - heat_kernel(z, eps));
                const bool ok = err <= tol;
                all_ok = all_ok && ok;
                ordered_json c;
                c["eps"] = eps;
                c["z"] = z;
                c["abs_error"] = err;
                c["pass"] = ok;
                checks.push_back(std::move(c));
                std::printf("  eps=%-5.3g z=%-5.3g abs_error=%-12.4g %s\n", eps, z, err,
                            ok ? "pass" : "FAIL");
            }
        }
        if (chaos_opts.output.want_json()) {
            ordered_json j;
            j["order"] = chaos_opts.order;
            j["tolerance"] = tol;
            j["checks"] = checks;
            j["all_pass"] = all_ok;
            detail::write_file(chaos_opts.output.out_dir + "/chaos.json", j.dump(2) + "\n");
        }
        std::cout << (all_ok ? "ALL CHECKS PASSED\n" : "CHECKS FAILED\n");
        if (!all_ok) exit_status = 1;
    });

    // verify-* experiment subcommands
    struct CommandDef {
        const char* name;
        const char* help;
        bool with_lambda;
        std::vector<std::size_t> default_n;
        std::size_t default_reps;
        std::vector<double> default_lambda;
    };
    const std::vector<CommandDef> commands = {
        {"verify-variance", "Monte Carlo check of the variance scaling law", false,
         {1024, 4096}, 2000, {}},
        {"verify-bracket", "bracket-implied against occupation-band local time", false,
         {4096}, 500, {}},
        {"verify-limit", "two-sample check of the mixed-normal limit law", true,
         {1024, 4096}, 2000, {0.0, 0.5, 1.0, 2.0}},
        {"verify-conditional", "exact conditional characteristic-function identity", true,
         {64}, 20000, {0.5, 1.0, 2.0}},
        {"verify-riemann", "Riemann-sum versus pathwise-integral discrepancy trend", false,
         {256, 1024, 4096}, 200, {}},
    };
    std::vector<std::unique_ptr<detail::PlanOptions>> plan_opts;
    std::vector<std::unique_ptr<detail::OutputOptions>> output_opts;
    for (const CommandDef& def : commands) {
        auto* cmd = app.add_subcommand(def.name, def.help);
        auto opts = std::make_unique<detail::PlanOptions>();
        auto output = std::make_unique<detail::OutputOptions>();
        opts->attach(cmd, def.with_lambda);
        cmd->add_option("--out", output->out_dir, "output directory for reports");
        cmd->add_option("--format", output->format, "report format: csv, json or both")
            ->check(CLI::IsMember({"csv", "json", "both"}));
        detail::PlanOptions* opts_ptr = opts.get();
        detail::OutputOptions* output_ptr = output.get();
        const std::string name = def.name;
        const CommandDef def_copy = def;
        cmd->callback([&, opts_ptr, output_ptr, name, def_copy] {
            const ExperimentPlan plan =
                opts_ptr->build(def_copy.default_n, def_copy.default_reps,
                                def_copy.default_lambda);
            bool all_pass = true;
            if (name == "verify-variance") {
                const McReport report = run_variance_experiment(plan);
                detail::emit_report(report, *output_ptr, "variance",
                                    [&](std::ostream& os) { write_variance_csv(os, report); });
                all_pass = report.all_pass();
            } else if (name == "verify-bracket") {
                const McReport report = run_bracket_experiment(plan);
                detail::ensure_dir(output_ptr->out_dir);
                if (output_ptr->want_csv())
                    for (const std::size_t n : plan.n_list) {
                        std::ostringstream csv;
                        write_bracket_csv(csv, report, n);
                        detail::write_file(output_ptr->out_dir + "/bracket_n" + std::to_string(n) +
                                               ".csv",
                                           csv.str());
                    }
                detail::emit_report(report, *output_ptr, "bracket",
                                    [&](std::ostream& os) { write_rows_csv(os, report); });
                all_pass = report.all_pass();
            } else if (name == "verify-limit") {
                const McReport report = run_limit_experiment(plan);
                detail::emit_report(report, *output_ptr, "limit",
                                    [&](std::ostream& os) { write_rows_csv(os, report); });
                all_pass = report.all_pass();
            } else if (name == "verify-conditional") {
                const McReport report = run_conditional_experiment(plan);
                detail::emit_report(report, *output_ptr, "conditional", [&](std::ostream& os) {
                    os << "n,lambda,lambda_n,e_cos,std_error,conditional_char,dev_cos,e_sin,pass\n";
                    for (const McRow& row : report.rows) {
                        const auto extra = [&](const char* key) {
                            const auto it = row.extras.find(key);
                            return it != row.extras.end() ? it->second : kAbsent;
                        };
                        os << row.n << ',' << fracreg::detail::format_g17(row.lambda) << ','
                           << fracreg::detail::format_g17(extra("lambda_n")) << ','
                           << fracreg::detail::format_g17(row.estimate) << ','
                           << fracreg::detail::format_g17(row.std_error) << ','
                           << fracreg::detail::format_g17(row.target) << ','
                           << fracreg::detail::format_g17(extra("dev_cos")) << ','
                           << fracreg::detail::format_g17(extra("e_sin")) << ','
                           << (row.pass ? 1 : 0) << '\n';
                    }
                });
                all_pass = report.all_pass();
            } else {
                const McReport report = run_riemann_experiment(plan);
                detail::emit_report(report, *output_ptr, "riemann",
                                    [&](std::ostream& os) { write_rows_csv(os, report); });
                all_pass = report.all_pass();
            }
            if (!all_pass) exit_status = 1;
        });
        plan_opts.push_back(std::move(opts));
        output_opts.push_back(std::move(output));
    }

    std::reverse(args.begin(), args.end());   // CLI11's vector overload wants a reversed stack
    try {
        app.parse(std::move(args));
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const RegionError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return exit_status;
}

} // namespace fracreg::cli

// Command-line front end: run experiments from config files or presets,
// print theoretical step-size caps and bound tables, and execute the
// built-in verification battery. Worker count comes from RCLMC_WORKERS
// (default: all hardware threads).

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rclmc/checks.hpp"
#include "rclmc/harness.hpp"

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int execute_spec(rclmc::ExperimentSpec spec, const std::string& out_override,
                 bool echo) {
    if (!out_override.empty()) spec.out = out_override;
    if (echo) {
        std::cout << rclmc::emit_config(spec);
        return 0;
    }
    const std::string csv = rclmc::default_out_path(spec);
    const rclmc::ExperimentOutput out = rclmc::run_experiment(spec);
    rclmc::append_csv(csv, out.rows);
    const std::string tsv = rclmc::saturation_tsv_path(csv);
    rclmc::write_saturation_tsv(tsv, out.saturation);
    std::cout << "reference E[phi] = " << rclmc::detail::fmt_double(out.exact_moment)
              << "\n";
    for (const rclmc::CsvRow& r : out.rows)
        std::printf("%-7s h=%-8g weak_error=%-12.5g stderr=%-10.4g cost=%-12llu %s "
                    "(%llu ms)\n",
                    r.algorithm.c_str(), r.h, r.weak_error, r.mc_stderr,
                    static_cast<unsigned long long>(r.cost_partials),
                    r.status.c_str(), static_cast<unsigned long long>(r.wall_ms));
    std::cout << out.rows.size() << " rows appended to " << csv << "; "
              << out.saturation.size() << " saturation points written to " << tsv
              << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Langevin Monte Carlo with coordinate-descent gradient fluxes"};
    app.require_subcommand(1);

    std::string config_path, out_path;
    bool echo = false;
    CLI::App* run = app.add_subcommand("run", "run an experiment from a config file");
    run->add_option("--config", config_path, "JSON config file")->required();
    run->add_option("--out", out_path, "output CSV path (overrides config)");
    run->add_flag("--echo", echo, "print the parsed config back and exit");

    std::string preset, scale = "desk";
    std::string sweep_out;
    CLI::App* sweep = app.add_subcommand("sweep", "run a named preset sweep");
    sweep->add_option("--preset", preset,
                      "example1 | example2 | example3_gaussian | example3_cosine | "
                      "counterexample")
        ->required();
    sweep->add_option("--scale", scale, "desk (default) or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sweep->add_option("--out", sweep_out, "output CSV path");

    double mu = 1.0, L = 1.0, H = -1.0, eps = 0.1, W0 = 1.0;
    std::size_t bd = 10;
    std::uint32_t btau = 0;
    CLI::App* bounds =
        app.add_subcommand("bounds", "print step-size caps, asymptotic bound "
                                     "remainders, and cost scalings");
    bounds->add_option("--mu", mu, "strong convexity")->required();
    bounds->add_option("--L", L, "gradient Lipschitz constant")->required();
    bounds->add_option("--H", H, "Hessian Lipschitz constant (omit if unknown)");
    bounds->add_option("--d", bd, "dimension")->required();
    bounds->add_option("--tau", btau, "epoch length (omit for non-SVRG only)");
    bounds->add_option("--eps", eps, "target accuracy for cost scalings");
    bounds->add_option("--W0", W0, "initial Wasserstein-2 distance");

    std::string suite = "all";
    int criterion = 0;
    CLI::App* check =
        app.add_subcommand("check", "run the built-in verification battery");
    check->add_option("--suite", suite, "unit | moments | slopes | all")
        ->check(CLI::IsMember({"unit", "moments", "slopes", "all"}));
    check->add_option("--criterion", criterion, "run a single check (1..9)")
        ->check(CLI::Range(1, 9));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed())
            return execute_spec(rclmc::parse_config(read_file(config_path)),
                                out_path, echo);
        if (sweep->parsed())
            return execute_spec(rclmc::make_preset(preset, scale), sweep_out, false);
        if (bounds->parsed()) {
            rclmc::BoundParams p;
            p.mu = mu;
            p.lip_grad = L;
            if (H >= 0.0) p.lip_hess = H;
            p.d = bd;
            if (btau > 0) p.tau = btau;
            p.W0 = W0;
            std::cout << rclmc::bounds_table(p, eps);
            return 0;
        }
        if (check->parsed()) {
            const std::vector<int> ids = criterion != 0
                                             ? std::vector<int>{criterion}
                                             : rclmc::checks::suite_ids(suite);
            bool all_pass = true;
            for (int id : ids) {
                const rclmc::checks::CheckResult r = rclmc::checks::run_criterion(id);
                all_pass = all_pass && r.pass;
                std::printf("criterion %d: %s - %s (%.1f s)\n", r.id,
                            r.pass ? "PASS" : "FAIL", r.detail.c_str(), r.wall_s);
                std::fflush(stdout);
            }
            return all_pass ? 0 : 1;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

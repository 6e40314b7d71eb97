// SPDX-License-Identifier: Apache-2.0
//
// sis-forge: experiment harness CLI.
//
//   sis-forge converge  --config <path> [--out <dir>] [--seed <u64>] [--workers <n>]
//   sis-forge sweep     --config <path> [--out <dir>] [--seed <u64>] [--workers <n>]
//   sis-forge gradcheck [--config <path>] [--corrupt-gradients]
//   sis-forge eval      --tx <ckpt> --rx <ckpt> [--config <path>] [--realizations <n>]
//
// Exit codes: 0 success, 1 usage/config error, 2 numerical failure.

#include "sisforge/bench.hpp"
#include "sisforge/common.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

using namespace sisforge;

int main(int argc, char **argv) {
    CLI::App app{"stacked-surface MIMO link trainer and benchmark harness"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".";
    std::uint64_t seed_override = 0;
    bool seed_given = false;
    int workers = 0;
    bool corrupt = false;
    std::string tx_ckpt, rx_ckpt;
    std::size_t eval_realizations = 0;

    auto add_common = [&](CLI::App *cmd) {
        cmd->add_option("--config", config_path, "experiment config file");
        cmd->add_option("--out", out_dir, "output directory");
        cmd->add_option("--seed", seed_override, "override the base seed")
            ->each([&](const std::string &) { seed_given = true; });
        cmd->add_option("--workers", workers, "worker thread cap (0 = hardware)");
    };

    CLI::App *converge = app.add_subcommand("converge", "SER-vs-epoch convergence runs");
    add_common(converge);
    CLI::App *sweep = app.add_subcommand("sweep", "N x L sweep (resumable per cell)");
    add_common(sweep);
    CLI::App *gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    add_common(gradcheck);
    gradcheck->add_flag("--corrupt-gradients", corrupt,
                        "fault-injection hook: force the check to fail");
    CLI::App *eval = app.add_subcommand("eval", "evaluate saved checkpoints");
    add_common(eval);
    eval->add_option("--tx", tx_ckpt, "tx phase checkpoint")->required();
    eval->add_option("--rx", rx_ckpt, "rx phase checkpoint")->required();
    eval->add_option("--realizations", eval_realizations, "test realizations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        ExperimentSpec spec =
            config_path.empty() ? ExperimentSpec{} : parse_config(config_path);
        if (spec.objectives.empty())
            spec.objectives = {"ser_ce", "svd_gap"};
        if (spec.seeds.empty())
            spec.seeds = {spec.base.seed};
        if (seed_given) {
            spec.base.seed = seed_override;
            spec.seeds = {seed_override};
        }
        if (workers > 0)
            spec.base.workers = workers;

        if (converge->parsed()) {
            const std::string csv = run_convergence(spec, out_dir);
            std::printf("wrote %s\n", csv.c_str());
        } else if (sweep->parsed()) {
            const SweepOutcome outcome = run_sweep(spec, out_dir);
            std::printf("wrote %s (%zu run, %zu skipped, %zu failed)\n",
                        outcome.csv_path.c_str(), outcome.cells_run,
                        outcome.cells_skipped, outcome.cells_failed);
            if (outcome.cells_failed > 0)
                return 2;
        } else if (gradcheck->parsed()) {
            const GradcheckOutcome outcome = run_gradcheck(spec, corrupt);
            std::fputs(outcome.report.c_str(), stdout);
            if (!outcome.passed) {
                std::printf("gradcheck FAILED (max relative error %.3e > 1e-4)\n",
                            outcome.max_rel_error);
                return 2;
            }
            std::printf("gradcheck passed (max relative error %.3e)\n",
                        outcome.max_rel_error);
        } else if (eval->parsed()) {
            PhaseStack tx = load_phase_stack(tx_ckpt);
            PhaseStack rx = load_phase_stack(rx_ckpt);
            TrainConfig cfg = spec.base;
            cfg.nt = tx.elements;
            cfg.lt = tx.layers;
            cfg.nr = rx.elements;
            cfg.lr = rx.layers;
            const std::size_t n =
                eval_realizations > 0 ? eval_realizations : cfg.test_realizations;
            const EvalResult r = evaluate(tx, rx, cfg, n);
            std::printf("test_ser = %.6g\nstderr = %.6g\nrealizations = %zu\n", r.ser,
                        r.stderr_, n);
        }
    } catch (const ConfigError &e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 1;
    } catch (const NumericError &e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const Error &e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}

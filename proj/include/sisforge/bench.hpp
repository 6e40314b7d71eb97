// SPDX-License-Identifier: Apache-2.0
//
// Experiment harness: strict "key = value" config files, the SER-vs-epoch
// convergence run, the N x L sweep with per-cell resume, and the
// gradient self-check. All outputs are plain CSV.

#ifndef SISFORGE_BENCH_HPP
#define SISFORGE_BENCH_HPP

#include "sisforge/sisnet.hpp"
#include "sisforge/trainer.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sisforge {

struct ExperimentSpec {
    TrainConfig base;
    std::vector<std::size_t> n_values;    // sweep axis (perfect squares)
    std::vector<std::size_t> l_values;    // sweep axis
    std::vector<std::string> objectives;  // default {ser_ce, svd_gap}
    std::vector<std::uint64_t> seeds;     // default {base.seed}
};

// Strict line-oriented parse. Sections ("[train]") are organizational;
// keys are validated globally, unknown keys and malformed values are
// rejected with their line number. An empty file yields the physical
// defaults of the reference setup.
ExperimentSpec parse_config(const std::string &path);
ExperimentSpec parse_config_text(const std::string &text, const std::string &origin);

// Canonical key list, one "key = value" per line (the round-trip side of
// the config format; also serves as documentation).
std::string dump_config(const ExperimentSpec &spec);

// Convergence experiment: trains each objective in spec.objectives with
// the base config and streams per-epoch rows to <out_dir>/convergence.csv
// with header "objective,epoch,train_loss,train_ser,test_ser,seconds"
// (flushed per epoch). Best checkpoints are saved per objective as
// converge_<objective>_{tx,rx}.ckpt. Returns the CSV path.
std::string run_convergence(const ExperimentSpec &spec, const std::string &out_dir);

// Sweep over objectives x n_values x l_values x seeds into
// <out_dir>/sweep.csv with header
// "objective,N,L,seed,final_test_ser,stderr,seconds,status".
// Cells already present with status "ok" are skipped; per-cell failures
// are recorded with status "error" and the run continues.
struct SweepOutcome {
    std::string csv_path;
    std::size_t cells_run = 0;
    std::size_t cells_skipped = 0;
    std::size_t cells_failed = 0;
};
SweepOutcome run_sweep(const ExperimentSpec &spec, const std::string &out_dir);

// Finite-difference self-check on a small instance, for both objectives.
struct GradcheckOutcome {
    bool passed = false;
    double max_rel_error = 0.0;
    std::string report; // human-readable, lists both objectives
};
// corrupt is the fault-injection hook: it offsets analytic gradients so
// the check must fail.
GradcheckOutcome run_gradcheck(const ExperimentSpec &spec, bool corrupt = false);

// One frozen model + loss adapter pair as used by run_gradcheck; the
// check's noise power is calibrated to the actual pass-through signal
// level so the logits land at a well-conditioned scale.
struct GradcheckInstance {
    GradCheckModel model;
    LossAdapter loss;
};
GradcheckInstance build_gradcheck_instance(const TrainConfig &base,
                                           const std::string &objective,
                                           std::uint64_t seed);

} // namespace sisforge

#endif

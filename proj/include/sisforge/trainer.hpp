// SPDX-License-Identifier: Apache-2.0
//
// End-to-end training: mini-batch generation, forward, loss, backprop,
// phase update with mod-2pi wrap, and frozen-phase testing. Every batch
// item draws a fresh channel so the stacks learn the channel
// distribution rather than one realization.

#ifndef SISFORGE_TRAINER_HPP
#define SISFORGE_TRAINER_HPP

#include "sisforge/modem.hpp"
#include "sisforge/objectives.hpp"
#include "sisforge/rng.hpp"
#include "sisforge/sisnet.hpp"
#include "sisforge/wavefield.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace sisforge {

struct TrainConfig {
    // Physics (defaults follow the reference experimental setup).
    double frequency_hz = 3e9;
    double tx_power_dbm = 1.0;
    double noise_dbm = -120.0;
    double rician_kappa = 15.0;
    double distance_m = 50.0; // antenna-array separation along x
    std::size_t mt = 4, mr = 4;
    std::size_t nt = 484, nr = 484;
    std::size_t lt = 3, lr = 3;
    double alpha1 = 4.0;  // surface standoff [wavelengths], both sides
    double alpha2 = 0.5;  // element spacing [wavelengths]
    double alpha3 = 6.0;  // stack thickness [wavelengths]

    // Optimization.
    std::string constellation = "4-QAM";
    std::string objective = "ser_ce"; // "ser_ce" | "svd_gap"
    std::string optimizer = "adam";   // "adam" | "sgd"
    double learning_rate = 0.01;
    std::size_t batch_size = 256;
    std::size_t symbols_per_block = 1; // T
    std::size_t epochs = 50;
    std::size_t batches_per_epoch = 20;
    std::uint64_t seed = 1;

    // Evaluation.
    std::size_t test_realizations = 20;
    std::size_t test_symbols = 2000;         // symbol vectors per realization
    std::size_t epoch_eval_realizations = 10; // held-out set scored each epoch
    std::size_t epoch_eval_symbols = 256;
    int workers = 0; // 0 = hardware concurrency (SIS_FORGE_THREADS caps)

    double wavelength() const { return 299792458.0 / frequency_hz; }
    double tx_power_watts() const { return 1e-3 * std::pow(10.0, tx_power_dbm / 10.0); }
    double noise_power_watts() const { return 1e-3 * std::pow(10.0, noise_dbm / 10.0); }
    // Per-antenna amplitude so the total average transmit power is P_total.
    double power_scale() const {
        return std::sqrt(tx_power_watts() / static_cast<double>(mt));
    }

    void validate() const; // throws ConfigError
};

// Geometry, kernels, and constellation assembled once per config.
struct LinkModel {
    SisGeometry geo_t, geo_r;
    std::vector<PropagationKernel> tx_kernels, rx_kernels;
    Constellation constellation;
};

LinkModel build_link_model(const TrainConfig &cfg);

// All angles i.i.d. uniform on [0, 2 pi): first every tx angle in
// layer-major order, then every rx angle.
std::pair<PhaseStack, PhaseStack> init_phases(const TrainConfig &cfg, Rng &rng);

struct EpochRecord {
    std::size_t epoch = 0;   // 1-based
    double train_loss = 0.0; // mean over the epoch's batches
    double train_ser = 0.0;  // per-batch estimate; NaN for svd_gap
    double test_ser = 0.0;   // frozen phases, held-out channels
    double seconds = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

struct OptimizerState {
    std::size_t step = 0;
    std::vector<double> m_tx, v_tx, m_rx, v_rx; // Adam moments
};

// One update: SGD angle <- (angle - lr * g) mod 2pi, or Adam with
// beta1=0.9, beta2=0.999, eps=1e-8 and bias correction, then wrap.
void optimizer_step(PhaseStack &tx, PhaseStack &rx, const PhaseGradients &grads,
                    OptimizerState &state, const TrainConfig &cfg);

struct EvalResult {
    double ser = 0.0;
    double stderr_ = 0.0; // standard error over realizations
};

struct TrainResult {
    PhaseStack tx, rx; // best checkpoint by held-out test SER
    TrainHistory history;
};

using EpochCallback = std::function<void(const EpochRecord &)>;

// Run the full training loop. epochs = 0 returns the initial stacks and
// an empty history. Throws NumericError naming the epoch if the loss
// goes non-finite.
TrainResult train(const TrainConfig &cfg, const EpochCallback &on_epoch = nullptr);

// Frozen-phase SER on n fresh channel realizations (seed space disjoint
// from training), with joint-ML detection under genie CSI.
EvalResult evaluate(const PhaseStack &tx, const PhaseStack &rx, const TrainConfig &cfg,
                    std::size_t n_realizations);
// Extended form: realization indices start at index_offset within the
// eval stream; n_symbols = 0 means cfg.test_symbols.
EvalResult evaluate(const LinkModel &model, const PhaseStack &tx, const PhaseStack &rx,
                    const TrainConfig &cfg, std::size_t n_realizations,
                    std::uint64_t index_offset = 0, std::size_t n_symbols = 0);

// Throws NumericError if v is not finite (training divergence guard).
void check_loss_finite(double v, std::size_t epoch);

} // namespace sisforge

#endif

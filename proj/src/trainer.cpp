// SPDX-License-Identifier: Apache-2.0

#include "sisforge/trainer.hpp"
#include "sisforge/common.hpp"
#include "sisforge/parallel.hpp"

#include <chrono>
#include <cmath>
#include <limits>

namespace sisforge {

namespace {

std::size_t integer_sqrt(std::size_t n) {
    auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    while (r * r > n)
        --r;
    while ((r + 1) * (r + 1) <= n)
        ++r;
    return r;
}

bool perfect_square(std::size_t n) {
    const std::size_t r = integer_sqrt(n);
    return r * r == n;
}

} // namespace

void TrainConfig::validate() const {
    if (frequency_hz <= 0.0 || !std::isfinite(frequency_hz))
        throw ConfigError("frequency_hz must be positive");
    if (!std::isfinite(tx_power_dbm) || !std::isfinite(noise_dbm))
        throw ConfigError("powers must be finite");
    if (rician_kappa < 0.0)
        throw ConfigError("rician_kappa must be >= 0");
    if (distance_m <= 0.0)
        throw ConfigError("distance_m must be positive");
    if (mt < 1 || mr < 1 || nt < 1 || nr < 1 || lt < 1 || lr < 1)
        throw ConfigError("antenna, element, and layer counts must be >= 1");
    if (mt > mr)
        throw ConfigError("mt must not exceed mr (per-stream detection needs one "
                          "receive port per stream)");
    if (!perfect_square(nt))
        throw ConfigError(strfmt("nt = %zu is not a perfect square", nt));
    if (!perfect_square(nr))
        throw ConfigError(strfmt("nr = %zu is not a perfect square", nr));
    if (alpha2 <= 0.0)
        throw ConfigError("alpha2 must be positive");
    if ((lt >= 2 || lr >= 2) && alpha3 <= 0.0)
        throw ConfigError("alpha3 must be positive for multi-layer stacks");
    if (objective != "ser_ce" && objective != "svd_gap")
        throw ConfigError("objective must be ser_ce or svd_gap, got " + objective);
    if (optimizer != "adam" && optimizer != "sgd")
        throw ConfigError("optimizer must be adam or sgd, got " + optimizer);
    if (learning_rate <= 0.0 || !std::isfinite(learning_rate))
        throw ConfigError("learning_rate must be positive");
    if (batch_size < 1 || symbols_per_block < 1 || batches_per_epoch < 1)
        throw ConfigError("batch_size, symbols_per_block, batches_per_epoch must be >= 1");
    if (test_realizations < 1 || test_symbols < 1 || epoch_eval_realizations < 1 ||
        epoch_eval_symbols < 1)
        throw ConfigError("evaluation counts must be >= 1");
    make_constellation(constellation); // throws on an unknown name
}

LinkModel build_link_model(const TrainConfig &cfg) {
    cfg.validate();
    LinkModel m;
    const double lambda = cfg.wavelength();
    m.geo_t = build_geometry(Side::tx, cfg.mt, cfg.nt, cfg.lt, lambda, cfg.alpha1,
                             cfg.alpha2, cfg.alpha3, Point3{0.0, 0.0, 15.0});
    m.geo_r = build_geometry(Side::rx, cfg.mr, cfg.nr, cfg.lr, lambda, cfg.alpha1,
                             cfg.alpha2, cfg.alpha3, Point3{cfg.distance_m, 0.0, 15.0});
    m.tx_kernels = build_chain_kernels(m.geo_t);
    m.rx_kernels = build_chain_kernels(m.geo_r);
    m.constellation = make_constellation(cfg.constellation);
    return m;
}

std::pair<PhaseStack, PhaseStack> init_phases(const TrainConfig &cfg, Rng &rng) {
    PhaseStack tx(Side::tx, cfg.lt, cfg.nt);
    PhaseStack rx(Side::rx, cfg.lr, cfg.nr);
    const double two_pi = 2.0 * M_PI;
    for (auto &a : tx.angles)
        a = rng.uniform(two_pi);
    for (auto &a : rx.angles)
        a = rng.uniform(two_pi);
    return {std::move(tx), std::move(rx)};
}

void optimizer_step(PhaseStack &tx, PhaseStack &rx, const PhaseGradients &grads,
                    OptimizerState &state, const TrainConfig &cfg) {
    if (grads.tx.size() != tx.angles.size() || grads.rx.size() != rx.angles.size())
        throw ShapeError("optimizer_step: gradient shape does not match the stacks");
    const double lr = cfg.learning_rate;
    if (cfg.optimizer == "sgd") {
        for (std::size_t i = 0; i < tx.angles.size(); ++i)
            tx.angles[i] = wrap_angle(tx.angles[i] - lr * grads.tx[i]);
        for (std::size_t i = 0; i < rx.angles.size(); ++i)
            rx.angles[i] = wrap_angle(rx.angles[i] - lr * grads.rx[i]);
        return;
    }
    // Adam
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    if (state.m_tx.size() != tx.angles.size()) {
        state.m_tx.assign(tx.angles.size(), 0.0);
        state.v_tx.assign(tx.angles.size(), 0.0);
        state.m_rx.assign(rx.angles.size(), 0.0);
        state.v_rx.assign(rx.angles.size(), 0.0);
        state.step = 0;
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
    auto update = [&](std::vector<double> &angles, const std::vector<double> &g,
                      std::vector<double> &m, std::vector<double> &v) {
        for (std::size_t i = 0; i < angles.size(); ++i) {
            m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
            v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            angles[i] = wrap_angle(angles[i] - lr * mhat / (std::sqrt(vhat) + eps));
        }
    };
    update(tx.angles, grads.tx, state.m_tx, state.v_tx);
    update(rx.angles, grads.rx, state.m_rx, state.v_rx);
}

void check_loss_finite(double v, std::size_t epoch) {
    if (!std::isfinite(v))
        throw NumericError(strfmt("training diverged: non-finite loss at epoch %zu", epoch));
}

namespace {

IndexMatrix random_indices(std::size_t streams, std::size_t times, std::size_t order,
                           Rng &rng) {
    IndexMatrix idx(streams, std::vector<int>(times, 0));
    for (std::size_t m = 0; m < streams; ++m)
        for (std::size_t t = 0; t < times; ++t)
            idx[m][t] = static_cast<int>(rng.uniform_index(static_cast<std::uint32_t>(order)));
    return idx;
}

struct ItemResult {
    double loss = 0.0;
    double diagnostic = 0.0;
    PhaseGradients grads;
};

// One mini-batch item: fresh channel, forward over [X | I] (ser_ce) or
// [I] alone (svd_gap), loss, backprop.
ItemResult run_item(const TrainConfig &cfg, const LinkModel &model, const PhaseStack &tx,
                    const PhaseStack &rx, std::uint64_t channel_stream,
                    std::uint64_t noise_stream, std::uint64_t symbol_stream,
                    std::uint64_t item_index) {
    const bool use_symbols = cfg.objective == "ser_ce";
    const std::size_t t_cols = use_symbols ? cfg.symbols_per_block : 0;
    const std::size_t mt = cfg.mt;
    const std::size_t cols = t_cols + mt;

    ChannelRealization chan = sample_channel(
        model.geo_t, model.geo_r, cfg.rician_kappa,
        realization_seed(channel_stream, item_index));

    ComplexMatrix stacked(mt, cols);
    IndexMatrix truth;
    if (use_symbols) {
        Rng sym_rng(realization_seed(symbol_stream, item_index));
        truth = random_indices(mt, t_cols, model.constellation.order(), sym_rng);
        ComplexMatrix x = modulate(truth, model.constellation, cfg.power_scale());
        for (std::size_t r = 0; r < mt; ++r)
            for (std::size_t c = 0; c < t_cols; ++c)
                stacked(r, c) = x(r, c);
    }
    for (std::size_t r = 0; r < mt; ++r)
        stacked(r, t_cols + r) = 1.0;

    ComplexMatrix z_stacked;
    if (use_symbols) {
        Rng noise_rng(realization_seed(noise_stream, item_index));
        ComplexMatrix z = sample_noise(cfg.mr, t_cols, cfg.noise_power_watts(), noise_rng);
        z_stacked = ComplexMatrix(cfg.mr, cols);
        for (std::size_t r = 0; r < cfg.mr; ++r)
            for (std::size_t c = 0; c < t_cols; ++c)
                z_stacked(r, c) = z(r, c);
    }

    ForwardTape tape;
    ComplexMatrix y = end_to_end(tx, rx, model.tx_kernels, model.rx_kernels, chan.h,
                                 stacked, z_stacked, &tape);
    ComplexMatrix sigma = y.col_block(t_cols, mt);

    ItemResult out;
    ComplexMatrix seed_stacked(y.rows(), cols);
    if (use_symbols) {
        ComplexMatrix y_data = y.col_block(0, t_cols);
        LossValue loss = cross_entropy_loss(y_data, sigma, truth, model.constellation,
                                            cfg.power_scale(), cfg.noise_power_watts());
        out.loss = loss.value;
        out.diagnostic = loss.diagnostic;
        for (std::size_t r = 0; r < y.rows(); ++r)
            for (std::size_t c = 0; c < t_cols; ++c)
                seed_stacked(r, c) = loss.seed_y(r, c);
        for (std::size_t r = 0; r < loss.seed_sigma.rows(); ++r)
            for (std::size_t c = 0; c < mt; ++c)
                seed_stacked(r, t_cols + c) = loss.seed_sigma(r, c);
    } else {
        const std::size_t m = std::min(cfg.mt, cfg.mr);
        ComplexMatrix pi = svd_target(chan.h, m);
        ComplexMatrix sigma_block(m, m);
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c)
                sigma_block(r, c) = sigma(r, c);
        LossValue loss = frobenius_gap(sigma_block, pi);
        out.loss = loss.value;
        out.diagnostic = loss.diagnostic;
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c)
                seed_stacked(r, t_cols + c) = loss.seed_sigma(r, c);
    }

    out.grads = backprop_phases(tx, rx, model.tx_kernels, model.rx_kernels, tape,
                                seed_stacked);
    return out;
}

} // namespace

EvalResult evaluate(const LinkModel &model, const PhaseStack &tx, const PhaseStack &rx,
                    const TrainConfig &cfg, std::size_t n_realizations,
                    std::uint64_t index_offset, std::size_t n_symbols) {
    if (n_symbols == 0)
        n_symbols = cfg.test_symbols;
    const ComplexMatrix p = effective_transform(tx, model.tx_kernels);
    const ComplexMatrix q = effective_transform(rx, model.rx_kernels);
    const std::uint64_t chan_stream = stream_seed(cfg.seed, Stream::eval_channel);
    const std::uint64_t noise_stream = stream_seed(cfg.seed, Stream::eval_noise);
    const std::uint64_t sym_stream = stream_seed(cfg.seed, Stream::eval_symbols);
    const double g = cfg.power_scale();
    const double noise_power = cfg.noise_power_watts();

    std::vector<double> sers(n_realizations, 0.0);
    parallel_for(n_realizations, cfg.workers, [&](std::size_t r) {
        const std::uint64_t idx = index_offset + r;
        ChannelRealization chan = sample_channel(model.geo_t, model.geo_r,
                                                 cfg.rician_kappa,
                                                 realization_seed(chan_stream, idx));
        ComplexMatrix sigma = effective_channel(p, chan.h, q);
        Rng sym_rng(realization_seed(sym_stream, idx));
        IndexMatrix truth =
            random_indices(cfg.mt, n_symbols, model.constellation.order(), sym_rng);
        ComplexMatrix x = modulate(truth, model.constellation, g);
        Rng noise_rng(realization_seed(noise_stream, idx));
        ComplexMatrix y = add(matmul(sigma, x), sample_noise(cfg.mr, n_symbols,
                                                             noise_power, noise_rng));
        IndexMatrix detected = ml_detect(y, sigma, model.constellation, g);
        sers[r] = symbol_error_rate(detected, truth);
    });

    EvalResult out;
    for (double s : sers)
        out.ser += s;
    out.ser /= static_cast<double>(n_realizations);
    if (n_realizations > 1) {
        double var = 0.0;
        for (double s : sers)
            var += (s - out.ser) * (s - out.ser);
        var /= static_cast<double>(n_realizations - 1);
        out.stderr_ = std::sqrt(var / static_cast<double>(n_realizations));
    }
    return out;
}

EvalResult evaluate(const PhaseStack &tx, const PhaseStack &rx, const TrainConfig &cfg,
                    std::size_t n_realizations) {
    LinkModel model = build_link_model(cfg);
    return evaluate(model, tx, rx, cfg, n_realizations, 0);
}

TrainResult train(const TrainConfig &cfg, const EpochCallback &on_epoch) {
    LinkModel model = build_link_model(cfg);
    Rng init_rng(stream_seed(cfg.seed, Stream::phase_init));
    auto [tx, rx] = init_phases(cfg, init_rng);

    TrainResult result;
    result.tx = tx;
    result.rx = rx;
    if (cfg.epochs == 0)
        return result;

    const std::uint64_t chan_stream = stream_seed(cfg.seed, Stream::train_channel);
    const std::uint64_t noise_stream = stream_seed(cfg.seed, Stream::train_noise);
    const std::uint64_t sym_stream = stream_seed(cfg.seed, Stream::train_symbols);
    // Held-out per-epoch channels live far away from the final test
    // indices in the eval stream.
    constexpr std::uint64_t kEpochEvalOffset = 1ull << 40;

    OptimizerState opt;
    const std::size_t b = cfg.batch_size;
    double best_ser = std::numeric_limits<double>::infinity();
    std::vector<ItemResult> items(b);

    std::uint64_t item_counter = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double loss_sum = 0.0, diag_sum = 0.0;
        for (std::size_t step = 0; step < cfg.batches_per_epoch; ++step) {
            const std::uint64_t base_index = item_counter;
            item_counter += b;
            parallel_for(b, cfg.workers, [&](std::size_t i) {
                items[i] = run_item(cfg, model, tx, rx, chan_stream, noise_stream,
                                    sym_stream, base_index + i);
            });
            // Deterministic ordered reduction.
            PhaseGradients grads;
            grads.tx.assign(tx.angles.size(), 0.0);
            grads.rx.assign(rx.angles.size(), 0.0);
            double batch_loss = 0.0, batch_diag = 0.0;
            for (std::size_t i = 0; i < b; ++i) {
                batch_loss += items[i].loss;
                batch_diag += items[i].diagnostic;
                for (std::size_t j = 0; j < grads.tx.size(); ++j)
                    grads.tx[j] += items[i].grads.tx[j];
                for (std::size_t j = 0; j < grads.rx.size(); ++j)
                    grads.rx[j] += items[i].grads.rx[j];
            }
            const double inv_b = 1.0 / static_cast<double>(b);
            batch_loss *= inv_b;
            batch_diag *= inv_b;
            for (auto &v : grads.tx)
                v *= inv_b;
            for (auto &v : grads.rx)
                v *= inv_b;
            check_loss_finite(batch_loss, epoch);
            optimizer_step(tx, rx, grads, opt, cfg);
            loss_sum += batch_loss;
            diag_sum += batch_diag;
        }

        EvalResult held_out = evaluate(model, tx, rx, cfg, cfg.epoch_eval_realizations,
                                       kEpochEvalOffset, cfg.epoch_eval_symbols);
        const auto t1 = std::chrono::steady_clock::now();

        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(cfg.batches_per_epoch);
        rec.train_ser = cfg.objective == "ser_ce"
                            ? diag_sum / static_cast<double>(cfg.batches_per_epoch)
                            : std::numeric_limits<double>::quiet_NaN();
        rec.test_ser = held_out.ser;
        rec.seconds = std::chrono::duration<double>(t1 - t0).count();
        result.history.push_back(rec);
        if (on_epoch)
            on_epoch(rec);

        if (held_out.ser < best_ser) {
            best_ser = held_out.ser;
            result.tx = tx;
            result.rx = rx;
        }
    }
    return result;
}

} // namespace sisforge

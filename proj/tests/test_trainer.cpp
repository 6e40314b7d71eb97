// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sisforge/common.hpp"
#include "sisforge/trainer.hpp"

#include <cmath>
#include <set>

using namespace sisforge;

namespace {

// Tiny instance used by the behavioral checks.
TrainConfig tiny_config(const std::string &objective) {
    TrainConfig cfg;
    cfg.nt = cfg.nr = 16;
    cfg.lt = cfg.lr = 2;
    cfg.mt = cfg.mr = 2;
    cfg.objective = objective;
    cfg.batch_size = 16;
    cfg.batches_per_epoch = 8;
    cfg.epochs = 10;
    cfg.learning_rate = 0.03;
    cfg.test_realizations = 8;
    cfg.test_symbols = 400;
    cfg.epoch_eval_realizations = 6;
    cfg.epoch_eval_symbols = 200;
    cfg.workers = 2;
    return cfg;
}

} // namespace

TEST_CASE("init_phases is deterministic and uniform") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.nt = cfg.nr = 2500;
    cfg.lt = cfg.lr = 2;
    Rng a(42), b(42);
    auto fst = init_phases(cfg, a);
    auto snd = init_phases(cfg, b);
    CHECK(fst.first.angles == snd.first.angles);
    CHECK(fst.second.angles == snd.second.angles);

    double mean = 0.0;
    std::size_t n = 0;
    for (double v : fst.first.angles) {
        CHECK(v >= 0.0);
        CHECK(v < 2 * M_PI);
        mean += v;
        ++n;
    }
    mean /= static_cast<double>(n);
    // Uniform[0, 2pi): mean pi, sd = 2pi/sqrt(12); 3 sigma over n draws.
    const double tol = 3.0 * (2 * M_PI / std::sqrt(12.0)) / std::sqrt(static_cast<double>(n));
    CHECK(std::abs(mean - M_PI) < tol);
}

TEST_CASE("zero epochs returns the initial stacks and empty history") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.epochs = 0;
    TrainResult r = train(cfg);
    CHECK(r.history.empty());
    Rng rng(stream_seed(cfg.seed, Stream::phase_init));
    auto want = init_phases(cfg, rng);
    CHECK(r.tx.angles == want.first.angles);
    CHECK(r.rx.angles == want.second.angles);
}

TEST_CASE("optimizer_step leaves stacks unchanged on zero gradients") {
    TrainConfig cfg = tiny_config("ser_ce");
    PhaseStack tx(Side::tx, 2, 16), rx(Side::rx, 2, 16);
    Rng rng(7);
    for (auto &a : tx.angles)
        a = rng.uniform(2 * M_PI);
    for (auto &a : rx.angles)
        a = rng.uniform(2 * M_PI);
    PhaseStack tx0 = tx, rx0 = rx;
    PhaseGradients g;
    g.tx.assign(tx.angles.size(), 0.0);
    g.rx.assign(rx.angles.size(), 0.0);
    OptimizerState state;
    cfg.optimizer = "sgd";
    optimizer_step(tx, rx, g, state, cfg);
    CHECK(tx.angles == tx0.angles);
    CHECK(rx.angles == rx0.angles);
    cfg.optimizer = "adam";
    optimizer_step(tx, rx, g, state, cfg);
    CHECK(tx.angles == tx0.angles);
    CHECK(rx.angles == rx0.angles);
}

TEST_CASE("sgd update wraps into the canonical range") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.optimizer = "sgd";
    cfg.learning_rate = 1.0;
    cfg.nt = cfg.nr = 1;
    PhaseStack tx(Side::tx, 1, 1), rx(Side::rx, 1, 1);
    tx.angles[0] = 0.1;
    rx.angles[0] = 0.1;
    PhaseGradients g;
    g.tx = {0.2};
    g.rx = {0.2};
    OptimizerState state;
    optimizer_step(tx, rx, g, state, cfg);
    // 0.1 - 0.2 = -0.1 wraps to 2 pi - 0.1.
    CHECK(tx.angles[0] == doctest::Approx(2 * M_PI - 0.1).epsilon(1e-15));
    CHECK(rx.angles[0] == doctest::Approx(2 * M_PI - 0.1).epsilon(1e-15));
}

TEST_CASE("sgd converges on a single-phase quadratic toy loss") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.optimizer = "sgd";
    cfg.learning_rate = 0.1;
    PhaseStack tx(Side::tx, 1, 1), rx(Side::rx, 1, 1);
    tx.angles[0] = 0.2;
    const double target = 4.0;
    OptimizerState state;
    PhaseGradients g;
    g.rx = {0.0};
    int steps = 0;
    for (; steps < 10000; ++steps) {
        g.tx = {2.0 * (tx.angles[0] - target)};
        optimizer_step(tx, rx, g, state, cfg);
        if (std::abs(tx.angles[0] - target) < 1e-6)
            break;
    }
    CHECK(steps < 10000);
    CHECK(tx.angles[0] == doctest::Approx(target).epsilon(1e-6));
}

TEST_CASE("divergence guard names the epoch") {
    CHECK_THROWS_WITH_AS(check_loss_finite(std::nan(""), 7), doctest::Contains("epoch 7"),
                         NumericError);
    CHECK_THROWS_AS(check_loss_finite(HUGE_VAL, 1), NumericError);
    CHECK_NOTHROW(check_loss_finite(1.0, 1));
}

TEST_CASE("training seed space is disjoint from evaluation seed space") {
    const std::uint64_t base = 12345;
    std::set<std::uint64_t> train_seeds, eval_seeds;
    const std::uint64_t ts = stream_seed(base, Stream::train_channel);
    const std::uint64_t es = stream_seed(base, Stream::eval_channel);
    for (std::uint64_t i = 0; i < 4096; ++i) {
        train_seeds.insert(realization_seed(ts, i));
        eval_seeds.insert(realization_seed(es, i));
    }
    for (std::uint64_t s : train_seeds)
        CHECK(eval_seeds.count(s) == 0);
}

TEST_CASE("svd objective improves the alignment gap on the tiny instance") {
    TrainConfig cfg = tiny_config("svd_gap");
    TrainResult r = train(cfg);
    REQUIRE(r.history.size() == 10);
    // Mean alignment gap over the last three epochs beats the first epoch.
    const double first = r.history.front().train_loss;
    const double last = (r.history[7].train_loss + r.history[8].train_loss +
                         r.history[9].train_loss) / 3.0;
    CHECK(last < first);
    // train_ser is explicit nan for this objective.
    CHECK(std::isnan(r.history.front().train_ser));
}

TEST_CASE("ser objective reduces the test error on the tiny instance") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.epochs = 12;
    // Initial SER with untrained phases.
    LinkModel model = build_link_model(cfg);
    Rng rng(stream_seed(cfg.seed, Stream::phase_init));
    auto init = init_phases(cfg, rng);
    EvalResult before = evaluate(model, init.first, init.second, cfg, cfg.test_realizations);
    TrainResult r = train(cfg);
    EvalResult after = evaluate(model, r.tx, r.rx, cfg, cfg.test_realizations);
    CHECK(after.ser < before.ser);
    for (const EpochRecord &rec : r.history) {
        CHECK(rec.train_ser >= 0.0);
        CHECK(rec.train_ser <= 1.0);
        CHECK(rec.test_ser >= 0.0);
        CHECK(rec.test_ser <= 1.0);
    }
}

TEST_CASE("history epochs are contiguous and unit-modulus is preserved") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.epochs = 3;
    TrainResult r = train(cfg);
    for (std::size_t i = 0; i < r.history.size(); ++i)
        CHECK(r.history[i].epoch == i + 1);
    for (double a : r.tx.angles) {
        CHECK(a >= 0.0);
        CHECK(a < 2 * M_PI);
    }
}

TEST_CASE("identical config and seed reproduce training bit-exactly across worker counts") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.epochs = 2;
    cfg.workers = 1;
    TrainResult a = train(cfg);
    cfg.workers = 8;
    TrainResult b = train(cfg);
    CHECK(a.tx.angles == b.tx.angles);
    CHECK(a.rx.angles == b.rx.angles);
    REQUIRE(a.history.size() == b.history.size());
    for (std::size_t i = 0; i < a.history.size(); ++i) {
        CHECK(a.history[i].train_loss == b.history[i].train_loss);
        CHECK(a.history[i].test_ser == b.history[i].test_ser);
    }
}

TEST_CASE("evaluation is deterministic and respects the random-guessing bound") {
    // Noise-dominated configuration: detection degenerates toward
    // uniform guessing, SER near but below 1 - 1/K = 0.75.
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.mt = cfg.mr = 4;
    cfg.noise_dbm = -20.0; // vastly above the received signal level
    LinkModel model = build_link_model(cfg);
    Rng rng(stream_seed(3, Stream::phase_init));
    auto stacks = init_phases(cfg, rng);
    EvalResult a = evaluate(model, stacks.first, stacks.second, cfg, 6);
    EvalResult b = evaluate(model, stacks.first, stacks.second, cfg, 6);
    CHECK(a.ser == b.ser);
    CHECK(a.stderr_ == b.stderr_);
    CHECK(a.ser > 0.6);
    CHECK(a.ser <= 0.76);
}

TEST_CASE("single-stream pure line-of-sight link at high SNR is error free") {
    TrainConfig cfg = tiny_config("ser_ce");
    cfg.mt = cfg.mr = 1;
    cfg.rician_kappa = 1e12;
    cfg.tx_power_dbm = 30.0;
    LinkModel model = build_link_model(cfg);
    Rng rng(stream_seed(5, Stream::phase_init));
    auto stacks = init_phases(cfg, rng);
    EvalResult r = evaluate(model, stacks.first, stacks.second, cfg, 5);
    CHECK(r.ser == 0.0);
}

TEST_CASE("config validation rejects bad inputs") {
    TrainConfig cfg;
    cfg.nt = 485;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.objective = "capacity";
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = TrainConfig{};
    cfg.mt = 8;
    cfg.mr = 4;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(TrainConfig{}.validate());
}

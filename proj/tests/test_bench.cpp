// SPDX-License-Identifier: Apache-2.0

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "sisforge/bench.hpp"
#include "sisforge/common.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

using namespace sisforge;

namespace {

std::string slurp(const std::string &path) {
    std::ifstream in(path);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines_of(const std::string &text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string l;
    while (std::getline(in, l))
        out.push_back(l);
    return out;
}

// Strip the wall-time column (it is the one legitimately nondeterministic
// field).
std::string drop_seconds(const std::string &csv, std::size_t seconds_col) {
    std::string out;
    for (const std::string &line : lines_of(csv)) {
        std::istringstream in(line);
        std::string cell;
        std::size_t i = 0;
        while (std::getline(in, cell, ',')) {
            if (i != seconds_col)
                out += cell + ",";
            ++i;
        }
        out += "\n";
    }
    return out;
}

ExperimentSpec tiny_spec() {
    ExperimentSpec spec;
    spec.base.nt = spec.base.nr = 16;
    spec.base.lt = spec.base.lr = 2;
    spec.base.mt = spec.base.mr = 2;
    spec.base.batch_size = 8;
    spec.base.batches_per_epoch = 4;
    spec.base.epochs = 3;
    spec.base.test_realizations = 4;
    spec.base.test_symbols = 100;
    spec.base.epoch_eval_realizations = 3;
    spec.base.epoch_eval_symbols = 60;
    spec.base.workers = 2;
    spec.objectives = {"ser_ce", "svd_gap"};
    spec.seeds = {1};
    return spec;
}

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string &name) {
        path = std::filesystem::temp_directory_path() / name;
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

} // namespace

TEST_CASE("empty config yields the reference defaults") {
    ExperimentSpec spec = parse_config_text("", "test");
    CHECK(spec.base.frequency_hz == 3e9);
    CHECK(spec.base.tx_power_dbm == 1.0);
    CHECK(spec.base.noise_dbm == -120.0);
    CHECK(spec.base.rician_kappa == 15.0);
    CHECK(spec.base.distance_m == 50.0);
    CHECK(spec.base.mt == 4);
    CHECK(spec.base.mr == 4);
    CHECK(spec.base.nt == 484);
    CHECK(spec.base.nr == 484);
    CHECK(spec.base.lt == 3);
    CHECK(spec.base.lr == 3);
    CHECK(spec.base.alpha1 == 4.0);
    CHECK(spec.base.alpha2 == 0.5);
    CHECK(spec.base.alpha3 == 6.0);
    CHECK(spec.base.constellation == "4-QAM");
    CHECK(spec.objectives.size() == 2);
    CHECK(spec.seeds == std::vector<std::uint64_t>{1});
}

TEST_CASE("non-square element counts are rejected") {
    CHECK_THROWS_WITH_AS(parse_config_text("nt = 485\n", "test"),
                         doctest::Contains("perfect square"), ConfigError);
    CHECK_THROWS_AS(parse_config_text("n_values = 49 50\n", "test"), ConfigError);
}

TEST_CASE("objective selector and sections parse") {
    ExperimentSpec spec = parse_config_text(
        "[train]\nobjective = svd_gap\nlearning_rate = 0.05\n"
        "[sweep]\nn_values = 49, 100\nl_values = 2 5\nseeds = 3 4\n",
        "test");
    CHECK(spec.base.objective == "svd_gap");
    CHECK(spec.base.learning_rate == 0.05);
    CHECK(spec.n_values == std::vector<std::size_t>{49, 100});
    CHECK(spec.l_values == std::vector<std::size_t>{2, 5});
    CHECK(spec.seeds == std::vector<std::uint64_t>{3, 4});
}

TEST_CASE("unknown keys and malformed lines carry line numbers") {
    CHECK_THROWS_WITH_AS(parse_config_text("epochs = 5\nwavelength = 0.1\n", "cfg"),
                         doctest::Contains("line 2"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("\n\nepochs: 5\n", "cfg"),
                         doctest::Contains("line 3"), ConfigError);
    CHECK_THROWS_WITH_AS(parse_config_text("epochs = five\n", "cfg"),
                         doctest::Contains("line 1"), ConfigError);
    CHECK_THROWS_AS(parse_config(
        (std::filesystem::temp_directory_path() / "no_such_config.cfg").string()),
        ConfigError);
}

TEST_CASE("dump_config round-trips through the parser") {
    ExperimentSpec spec = tiny_spec();
    spec.base.learning_rate = 0.0375;
    spec.n_values = {49, 100};
    spec.l_values = {2};
    ExperimentSpec back = parse_config_text(dump_config(spec), "roundtrip");
    CHECK(back.base.learning_rate == spec.base.learning_rate);
    CHECK(back.base.nt == spec.base.nt);
    CHECK(back.n_values == spec.n_values);
    CHECK(back.objectives == spec.objectives);
    CHECK(back.seeds == spec.seeds);
}

TEST_CASE("comments and blank lines are ignored") {
    ExperimentSpec spec =
        parse_config_text("# a comment\n\n  epochs = 7  \n# another\n", "test");
    CHECK(spec.base.epochs == 7);
}

TEST_CASE("convergence CSV has the exact header and contiguous epochs") {
    TempDir dir("sisforge_conv_test");
    ExperimentSpec spec = tiny_spec();
    const std::string csv_path = run_convergence(spec, dir.path.string());
    const std::vector<std::string> lines = lines_of(slurp(csv_path));
    REQUIRE(!lines.empty());
    CHECK(lines[0] == "objective,epoch,train_loss,train_ser,test_ser,seconds");
    // 2 objectives x 3 epochs rows.
    REQUIRE(lines.size() == 1 + 2 * 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(lines[1 + i].rfind("ser_ce," + strfmt("%zu", i + 1) + ",", 0) == 0);
        CHECK(lines[4 + i].rfind("svd_gap," + strfmt("%zu", i + 1) + ",", 0) == 0);
    }
    // svd_gap train_ser cells are explicit nan.
    CHECK(lines[4].find(",nan,") != std::string::npos);
    // Checkpoints saved per objective.
    CHECK(std::filesystem::exists(dir.path / "converge_ser_ce_tx.ckpt"));
    CHECK(std::filesystem::exists(dir.path / "converge_svd_gap_rx.ckpt"));
}

TEST_CASE("convergence CSV is reproducible modulo the seconds column") {
    TempDir dir1("sisforge_repro1"), dir2("sisforge_repro2");
    ExperimentSpec spec = tiny_spec();
    spec.objectives = {"ser_ce"};
    const std::string a = slurp(run_convergence(spec, dir1.path.string()));
    const std::string b = slurp(run_convergence(spec, dir2.path.string()));
    CHECK(drop_seconds(a, 5) == drop_seconds(b, 5));
}

TEST_CASE("sweep writes one row per cell and resumes without recomputing") {
    TempDir dir("sisforge_sweep_test");
    ExperimentSpec spec = tiny_spec();
    spec.objectives = {"ser_ce"};
    spec.n_values = {9, 16};
    spec.l_values = {1, 2};
    spec.seeds = {1, 2};
    spec.base.epochs = 1;
    SweepOutcome first = run_sweep(spec, dir.path.string());
    CHECK(first.cells_run == 8);
    CHECK(first.cells_skipped == 0);
    const std::vector<std::string> lines = lines_of(slurp(first.csv_path));
    CHECK(lines[0] == "objective,N,L,seed,final_test_ser,stderr,seconds,status");
    CHECK(lines.size() == 1 + 8);
    for (std::size_t i = 1; i < lines.size(); ++i)
        CHECK(lines[i].substr(lines[i].rfind(',') + 1) == "ok");

    SweepOutcome second = run_sweep(spec, dir.path.string());
    CHECK(second.cells_run == 0);
    CHECK(second.cells_skipped == 8);
    CHECK(lines_of(slurp(second.csv_path)).size() == 1 + 8);

    // Adding a cell only runs the new one.
    spec.seeds = {1, 2, 3};
    SweepOutcome third = run_sweep(spec, dir.path.string());
    CHECK(third.cells_run == 4);
    CHECK(third.cells_skipped == 8);
}

TEST_CASE("sweep requires axes") {
    TempDir dir("sisforge_sweep_axes");
    ExperimentSpec spec = tiny_spec();
    CHECK_THROWS_AS(run_sweep(spec, dir.path.string()), ConfigError);
}

TEST_CASE("gradcheck passes on both objectives and fails when corrupted") {
    ExperimentSpec spec = tiny_spec();
    GradcheckOutcome ok = run_gradcheck(spec, false);
    CHECK(ok.passed);
    CHECK(ok.max_rel_error <= 1e-4);
    CHECK(ok.report.find("ser_ce") != std::string::npos);
    CHECK(ok.report.find("svd_gap") != std::string::npos);

    GradcheckOutcome bad = run_gradcheck(spec, true);
    CHECK(!bad.passed);
    CHECK(bad.max_rel_error > 1e-4);
}

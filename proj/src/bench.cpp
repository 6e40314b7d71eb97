// SPDX-License-Identifier: Apache-2.0

#include "sisforge/bench.hpp"
#include "sisforge/common.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace sisforge {

namespace {

std::string trim(const std::string &s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string &s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == ',' || std::isspace(static_cast<unsigned char>(ch))) {
            if (!cur.empty()) {
                out.push_back(cur);
                cur.clear();
            }
        } else {
            cur.push_back(ch);
        }
    }
    if (!cur.empty())
        out.push_back(cur);
    return out;
}

double parse_double(const std::string &v, int line) {
    char *end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(strfmt("line %d: malformed number '%s'", line, v.c_str()));
    return x;
}

std::uint64_t parse_u64(const std::string &v, int line) {
    char *end = nullptr;
    const unsigned long long x = std::strtoull(v.c_str(), &end, 10);
    if (end == v.c_str() || *end != '\0')
        throw ConfigError(strfmt("line %d: malformed integer '%s'", line, v.c_str()));
    return static_cast<std::uint64_t>(x);
}

std::size_t parse_count(const std::string &v, int line) {
    const double d = parse_double(v, line);
    if (d < 0.0 || d != std::floor(d) || d > 1e15)
        throw ConfigError(strfmt("line %d: expected a nonnegative integer, got '%s'",
                                 line, v.c_str()));
    return static_cast<std::size_t>(d);
}

bool perfect_square(std::size_t n) {
    const auto r = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n))));
    return r * r == n || (r + 1) * (r + 1) == n || (r > 0 && (r - 1) * (r - 1) == n);
}

} // namespace

ExperimentSpec parse_config_text(const std::string &text, const std::string &origin) {
    ExperimentSpec spec;
    bool seeds_given = false;

    using Handler = std::function<void(const std::string &, int)>;
    const std::map<std::string, Handler> handlers = {
        {"frequency_hz", [&](const std::string &v, int l) { spec.base.frequency_hz = parse_double(v, l); }},
        {"tx_power_dbm", [&](const std::string &v, int l) { spec.base.tx_power_dbm = parse_double(v, l); }},
        {"noise_dbm", [&](const std::string &v, int l) { spec.base.noise_dbm = parse_double(v, l); }},
        {"rician_kappa", [&](const std::string &v, int l) { spec.base.rician_kappa = parse_double(v, l); }},
        {"distance_m", [&](const std::string &v, int l) { spec.base.distance_m = parse_double(v, l); }},
        {"mt", [&](const std::string &v, int l) { spec.base.mt = parse_count(v, l); }},
        {"mr", [&](const std::string &v, int l) { spec.base.mr = parse_count(v, l); }},
        {"nt", [&](const std::string &v, int l) {
             spec.base.nt = parse_count(v, l);
             if (!perfect_square(spec.base.nt))
                 throw ConfigError(strfmt("line %d: nt = %s is not a perfect square", l, v.c_str()));
         }},
        {"nr", [&](const std::string &v, int l) {
             spec.base.nr = parse_count(v, l);
             if (!perfect_square(spec.base.nr))
                 throw ConfigError(strfmt("line %d: nr = %s is not a perfect square", l, v.c_str()));
         }},
        {"lt", [&](const std::string &v, int l) { spec.base.lt = parse_count(v, l); }},
        {"lr", [&](const std::string &v, int l) { spec.base.lr = parse_count(v, l); }},
        {"alpha1", [&](const std::string &v, int l) { spec.base.alpha1 = parse_double(v, l); }},
        {"alpha2", [&](const std::string &v, int l) { spec.base.alpha2 = parse_double(v, l); }},
        {"alpha3", [&](const std::string &v, int l) { spec.base.alpha3 = parse_double(v, l); }},
        {"constellation", [&](const std::string &v, int) { spec.base.constellation = v; }},
        {"objective", [&](const std::string &v, int l) {
             if (v != "ser_ce" && v != "svd_gap")
                 throw ConfigError(strfmt("line %d: objective must be ser_ce or svd_gap", l));
             spec.base.objective = v;
         }},
        {"optimizer", [&](const std::string &v, int l) {
             if (v != "adam" && v != "sgd")
                 throw ConfigError(strfmt("line %d: optimizer must be adam or sgd", l));
             spec.base.optimizer = v;
         }},
        {"learning_rate", [&](const std::string &v, int l) { spec.base.learning_rate = parse_double(v, l); }},
        {"batch_size", [&](const std::string &v, int l) { spec.base.batch_size = parse_count(v, l); }},
        {"symbols_per_block", [&](const std::string &v, int l) { spec.base.symbols_per_block = parse_count(v, l); }},
        {"epochs", [&](const std::string &v, int l) { spec.base.epochs = parse_count(v, l); }},
        {"batches_per_epoch", [&](const std::string &v, int l) { spec.base.batches_per_epoch = parse_count(v, l); }},
        {"seed", [&](const std::string &v, int l) { spec.base.seed = parse_u64(v, l); }},
        {"test_realizations", [&](const std::string &v, int l) { spec.base.test_realizations = parse_count(v, l); }},
        {"test_symbols", [&](const std::string &v, int l) { spec.base.test_symbols = parse_count(v, l); }},
        {"epoch_eval_realizations", [&](const std::string &v, int l) { spec.base.epoch_eval_realizations = parse_count(v, l); }},
        {"epoch_eval_symbols", [&](const std::string &v, int l) { spec.base.epoch_eval_symbols = parse_count(v, l); }},
        {"workers", [&](const std::string &v, int l) { spec.base.workers = static_cast<int>(parse_count(v, l)); }},
        {"n_values", [&](const std::string &v, int l) {
             spec.n_values.clear();
             for (const auto &tok : split_list(v)) {
                 const std::size_t n = parse_count(tok, l);
                 if (!perfect_square(n))
                     throw ConfigError(strfmt("line %d: sweep element count %zu is not a "
                                              "perfect square", l, n));
                 spec.n_values.push_back(n);
             }
         }},
        {"l_values", [&](const std::string &v, int l) {
             spec.l_values.clear();
             for (const auto &tok : split_list(v))
                 spec.l_values.push_back(parse_count(tok, l));
         }},
        {"objectives", [&](const std::string &v, int l) {
             spec.objectives.clear();
             for (const auto &tok : split_list(v)) {
                 if (tok != "ser_ce" && tok != "svd_gap")
                     throw ConfigError(strfmt("line %d: unknown objective '%s'", l, tok.c_str()));
                 spec.objectives.push_back(tok);
             }
         }},
        {"seeds", [&](const std::string &v, int l) {
             spec.seeds.clear();
             for (const auto &tok : split_list(v))
                 spec.seeds.push_back(parse_u64(tok, l));
             seeds_given = true;
         }},
    };

    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const std::string s = trim(raw);
        if (s.empty() || s[0] == '#')
            continue;
        if (s[0] == '[') {
            if (s.back() != ']')
                throw ConfigError(strfmt("%s line %d: unterminated section header",
                                         origin.c_str(), line));
            continue; // sections are organizational only
        }
        const std::size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError(strfmt("%s line %d: expected 'key = value'", origin.c_str(), line));
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        const auto it = handlers.find(key);
        if (it == handlers.end())
            throw ConfigError(strfmt("%s line %d: unknown key '%s'", origin.c_str(), line,
                                     key.c_str()));
        try {
            it->second(value, line);
        } catch (const ConfigError &e) {
            throw ConfigError(origin + " " + e.what());
        }
    }

    if (spec.objectives.empty())
        spec.objectives = {"ser_ce", "svd_gap"};
    if (!seeds_given)
        spec.seeds = {spec.base.seed};
    spec.base.validate();
    return spec;
}

ExperimentSpec parse_config(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw ConfigError("config file not found: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string dump_config(const ExperimentSpec &spec) {
    const TrainConfig &c = spec.base;
    std::string out;
    out += "[system]\n";
    out += strfmt("frequency_hz = %.17g\n", c.frequency_hz);
    out += strfmt("tx_power_dbm = %.17g\n", c.tx_power_dbm);
    out += strfmt("noise_dbm = %.17g\n", c.noise_dbm);
    out += strfmt("rician_kappa = %.17g\n", c.rician_kappa);
    out += strfmt("distance_m = %.17g\n", c.distance_m);
    out += strfmt("mt = %zu\nmr = %zu\nnt = %zu\nnr = %zu\nlt = %zu\nlr = %zu\n",
                  c.mt, c.mr, c.nt, c.nr, c.lt, c.lr);
    out += strfmt("alpha1 = %.17g\nalpha2 = %.17g\nalpha3 = %.17g\n", c.alpha1, c.alpha2,
                  c.alpha3);
    out += "[train]\n";
    out += "constellation = " + c.constellation + "\n";
    out += "objective = " + c.objective + "\n";
    out += "optimizer = " + c.optimizer + "\n";
    out += strfmt("learning_rate = %.17g\n", c.learning_rate);
    out += strfmt("batch_size = %zu\nsymbols_per_block = %zu\nepochs = %zu\n",
                  c.batch_size, c.symbols_per_block, c.epochs);
    out += strfmt("batches_per_epoch = %zu\nseed = %llu\n", c.batches_per_epoch,
                  static_cast<unsigned long long>(c.seed));
    out += strfmt("test_realizations = %zu\ntest_symbols = %zu\n", c.test_realizations,
                  c.test_symbols);
    out += strfmt("epoch_eval_realizations = %zu\nepoch_eval_symbols = %zu\n",
                  c.epoch_eval_realizations, c.epoch_eval_symbols);
    out += strfmt("workers = %d\n", c.workers);
    out += "[sweep]\n";
    auto join_counts = [](const std::vector<std::size_t> &v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? " " : "") + strfmt("%zu", v[i]);
        return s;
    };
    if (!spec.n_values.empty())
        out += "n_values = " + join_counts(spec.n_values) + "\n";
    if (!spec.l_values.empty())
        out += "l_values = " + join_counts(spec.l_values) + "\n";
    std::string objs;
    for (std::size_t i = 0; i < spec.objectives.size(); ++i)
        objs += (i ? " " : "") + spec.objectives[i];
    out += "objectives = " + objs + "\n";
    std::string seeds;
    for (std::size_t i = 0; i < spec.seeds.size(); ++i)
        seeds += (i ? " " : "") + strfmt("%llu", static_cast<unsigned long long>(spec.seeds[i]));
    out += "seeds = " + seeds + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Experiments
// ---------------------------------------------------------------------------

namespace {

std::string csv_num(double v) {
    if (std::isnan(v))
        return "nan";
    return strfmt("%.17g", v);
}

} // namespace

std::string run_convergence(const ExperimentSpec &spec, const std::string &out_dir) {
    std::filesystem::create_directories(out_dir);
    const std::string csv_path = out_dir + "/convergence.csv";
    std::ofstream csv(csv_path, std::ios::trunc);
    if (!csv)
        throw Error("cannot open for write: " + csv_path);
    csv << "objective,epoch,train_loss,train_ser,test_ser,seconds\n";
    csv.flush();

    for (const std::string &objective : spec.objectives) {
        TrainConfig cfg = spec.base;
        cfg.objective = objective;
        TrainResult result = train(cfg, [&](const EpochRecord &rec) {
            csv << objective << ',' << rec.epoch << ',' << csv_num(rec.train_loss) << ','
                << csv_num(rec.train_ser) << ',' << csv_num(rec.test_ser) << ','
                << csv_num(rec.seconds) << '\n';
            csv.flush();
        });
        save_phase_stack(result.tx, out_dir + "/converge_" + objective + "_tx.ckpt");
        save_phase_stack(result.rx, out_dir + "/converge_" + objective + "_rx.ckpt");
    }
    return csv_path;
}

SweepOutcome run_sweep(const ExperimentSpec &spec, const std::string &out_dir) {
    if (spec.n_values.empty() || spec.l_values.empty())
        throw ConfigError("run_sweep: n_values and l_values must be non-empty");
    std::filesystem::create_directories(out_dir);
    SweepOutcome outcome;
    outcome.csv_path = out_dir + "/sweep.csv";

    // Cells with an ok row already on disk are skipped on rerun.
    std::set<std::string> done;
    if (std::filesystem::exists(outcome.csv_path)) {
        std::ifstream in(outcome.csv_path);
        std::string line;
        std::getline(in, line); // header
        while (std::getline(in, line)) {
            std::vector<std::string> cells = split_list(line);
            // split_list splits on commas; a row has 8 cells.
            if (cells.size() == 8 && cells[7] == "ok")
                done.insert(cells[0] + "," + cells[1] + "," + cells[2] + "," + cells[3]);
        }
    }

    const bool fresh = !std::filesystem::exists(outcome.csv_path) ||
                       std::filesystem::file_size(outcome.csv_path) == 0;
    std::ofstream csv(outcome.csv_path, fresh ? std::ios::trunc : std::ios::app);
    if (!csv)
        throw Error("cannot open for write: " + outcome.csv_path);
    if (fresh) {
        csv << "objective,N,L,seed,final_test_ser,stderr,seconds,status\n";
        csv.flush();
    }

    for (const std::string &objective : spec.objectives) {
        for (std::size_t n : spec.n_values) {
            for (std::size_t l : spec.l_values) {
                for (std::uint64_t seed : spec.seeds) {
                    const std::string key = strfmt("%s,%zu,%zu,%llu", objective.c_str(),
                                                   n, l,
                                                   static_cast<unsigned long long>(seed));
                    if (done.count(key)) {
                        ++outcome.cells_skipped;
                        continue;
                    }
                    TrainConfig cfg = spec.base;
                    cfg.objective = objective;
                    cfg.nt = cfg.nr = n;
                    cfg.lt = cfg.lr = l;
                    cfg.seed = seed;
                    const auto t0 = std::chrono::steady_clock::now();
                    try {
                        TrainResult result = train(cfg);
                        LinkModel model = build_link_model(cfg);
                        EvalResult ev =
                            evaluate(model, result.tx, result.rx, cfg, cfg.test_realizations);
                        const double secs = std::chrono::duration<double>(
                                                std::chrono::steady_clock::now() - t0)
                                                .count();
                        csv << key << ',' << csv_num(ev.ser) << ',' << csv_num(ev.stderr_)
                            << ',' << csv_num(secs) << ",ok\n";
                        ++outcome.cells_run;
                    } catch (const Error &e) {
                        const double secs = std::chrono::duration<double>(
                                                std::chrono::steady_clock::now() - t0)
                                                .count();
                        csv << key << ",nan,nan," << csv_num(secs) << ",error\n";
                        ++outcome.cells_failed;
                    }
                    csv.flush();
                }
            }
        }
    }
    return outcome;
}

// ---------------------------------------------------------------------------
// Gradient self-check
// ---------------------------------------------------------------------------

GradcheckInstance build_gradcheck_instance(const TrainConfig &base,
                                           const std::string &objective,
                                           std::uint64_t seed) {
    TrainConfig cfg = base;
    cfg.objective = objective;
    LinkModel link = build_link_model(cfg);

    GradcheckInstance inst;
    Rng init_rng(stream_seed(seed, Stream::phase_init));
    auto stacks = init_phases(cfg, init_rng);
    inst.model.tx_stack = std::move(stacks.first);
    inst.model.rx_stack = std::move(stacks.second);
    inst.model.tx_kernels = link.tx_kernels;
    inst.model.rx_kernels = link.rx_kernels;

    ChannelRealization chan =
        sample_channel(link.geo_t, link.geo_r, cfg.rician_kappa,
                       realization_seed(stream_seed(seed, Stream::train_channel), 0));
    inst.model.h = chan.h;

    const std::size_t t_cols = cfg.symbols_per_block;
    Rng sym_rng(realization_seed(stream_seed(seed, Stream::train_symbols), 0));
    IndexMatrix truth(cfg.mt, std::vector<int>(t_cols, 0));
    for (auto &row : truth)
        for (auto &v : row)
            v = static_cast<int>(
                sym_rng.uniform_index(static_cast<std::uint32_t>(link.constellation.order())));
    inst.model.x = modulate(truth, link.constellation, cfg.power_scale());

    // Calibrate the check's noise power to the actual pass-through signal
    // level so the cross-entropy logits land at a well-conditioned scale.
    ComplexMatrix y_probe = end_to_end(inst.model.tx_stack, inst.model.rx_stack,
                                       inst.model.tx_kernels, inst.model.rx_kernels,
                                       inst.model.h, inst.model.x, ComplexMatrix());
    const double mean_power = frobenius_norm_sq(y_probe) / static_cast<double>(y_probe.size());
    const double noise_power = std::max(mean_power, 1e-300);

    Rng noise_rng(realization_seed(stream_seed(seed, Stream::train_noise), 0));
    inst.model.z = sample_noise(cfg.mr, t_cols, noise_power, noise_rng);

    if (objective == "ser_ce") {
        const Constellation constellation = link.constellation;
        const double g = cfg.power_scale();
        inst.loss = [constellation, truth, g, noise_power](const ComplexMatrix &y_data,
                                                           const ComplexMatrix &sigma) {
            LossValue lv =
                cross_entropy_loss(y_data, sigma, truth, constellation, g, noise_power);
            return SeededLoss{lv.value, lv.seed_y, lv.seed_sigma};
        };
    } else {
        const std::size_t m = std::min(cfg.mt, cfg.mr);
        const ComplexMatrix pi = svd_target(inst.model.h, m);
        inst.loss = [pi, m](const ComplexMatrix &, const ComplexMatrix &sigma) {
            ComplexMatrix block(m, m);
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c)
                    block(r, c) = sigma(r, c);
            LossValue lv = frobenius_gap(block, pi);
            SeededLoss out;
            out.value = lv.value;
            out.seed_sigma = ComplexMatrix(sigma.rows(), sigma.cols());
            for (std::size_t r = 0; r < m; ++r)
                for (std::size_t c = 0; c < m; ++c)
                    out.seed_sigma(r, c) = lv.seed_sigma(r, c);
            return out;
        };
    }
    return inst;
}

GradcheckOutcome run_gradcheck(const ExperimentSpec &spec, bool corrupt) {
    TrainConfig small;
    small.nt = small.nr = 16;
    small.lt = small.lr = 2;
    small.mt = small.mr = 2;
    small.symbols_per_block = 4;
    small.seed = spec.base.seed;
    small.rician_kappa = spec.base.rician_kappa;

    GradcheckOutcome out;
    out.passed = true;
    for (const std::string objective : {std::string("ser_ce"), std::string("svd_gap")}) {
        GradcheckInstance inst = build_gradcheck_instance(small, objective, small.seed);
        if (corrupt)
            inst.model.gradient_offset = 1e-2;
        GradCheckReport rep = finite_diff_check(inst.model, inst.loss, 128, small.seed + 17);
        out.max_rel_error = std::max(out.max_rel_error, rep.max_rel_error);
        const bool ok = rep.max_rel_error <= 1e-4;
        out.passed = out.passed && ok;
        out.report += strfmt("objective %-7s max_rel_error %.3e [%s]\n", objective.c_str(),
                             rep.max_rel_error, ok ? "pass" : "FAIL");
        out.report += "  worst tx: " + (rep.worst_tx.empty() ? "-" : rep.worst_tx) + "\n";
        out.report += "  worst rx: " + (rep.worst_rx.empty() ? "-" : rep.worst_rx) + "\n";
    }
    return out;
}

} // namespace sisforge

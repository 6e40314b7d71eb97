// SPDX-License-Identifier: Apache-2.0

#include "sisforge/sisnet.hpp"
#include "sisforge/common.hpp"
#include "sisforge/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace sisforge {

double wrap_angle(double a) {
    const double two_pi = 2.0 * M_PI;
    double w = std::fmod(a, two_pi);
    if (w < 0.0)
        w += two_pi;
    if (w >= two_pi) // fmod can land exactly on 2 pi after the add
        w -= two_pi;
    return w;
}

cdouble PhaseStack::weight(std::size_t layer, std::size_t i) const {
    const double a = angle(layer, i);
    return {std::cos(a), std::sin(a)};
}

void save_phase_stack(const PhaseStack &s, const std::string &path) {
    std::ofstream out(path);
    if (!out)
        throw Error("cannot open checkpoint for write: " + path);
    out << (s.side == Side::tx ? "tx" : "rx") << ' ' << s.layers << ' ' << s.elements << '\n';
    for (double a : s.angles)
        out << strfmt("%.17g\n", a);
}

PhaseStack load_phase_stack(const std::string &path) {
    std::ifstream in(path);
    if (!in)
        throw Error("cannot open checkpoint for read: " + path);
    std::string side;
    std::size_t layers = 0, elements = 0;
    if (!(in >> side >> layers >> elements) || (side != "tx" && side != "rx"))
        throw Error("checkpoint: bad header in " + path);
    PhaseStack s(side == "tx" ? Side::tx : Side::rx, layers, elements);
    for (std::size_t i = 0; i < s.angles.size(); ++i)
        if (!(in >> s.angles[i]))
            throw Error(strfmt("checkpoint: truncated at angle %zu of %zu in %s", i,
                               s.angles.size(), path.c_str()));
    return s;
}

namespace {

// x(i, c) *= e^{j angle(layer, i)}
void apply_phase_rows(const PhaseStack &stack, std::size_t layer, ComplexMatrix &x) {
    if (x.rows() != stack.elements)
        throw ShapeError(strfmt("phase layer expects %zu rows, wavefield has %zu",
                                stack.elements, x.rows()));
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const cdouble w = stack.weight(layer, i);
        cdouble *row = x.data() + i * x.cols();
        for (std::size_t c = 0; c < x.cols(); ++c)
            row[c] *= w;
    }
}

// x(i, c) *= conj(e^{j angle(layer, i)})
void apply_phase_rows_conj(const PhaseStack &stack, std::size_t layer, ComplexMatrix &x) {
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const cdouble w = std::conj(stack.weight(layer, i));
        cdouble *row = x.data() + i * x.cols();
        for (std::size_t c = 0; c < x.cols(); ++c)
            row[c] *= w;
    }
}

// dL/d angle(layer, i) = -2 sum_c Im( conj(seed(i,c)) * post_phase(i,c) )
void accumulate_phase_grad(const ComplexMatrix &seed, const ComplexMatrix &post_phase,
                           double *grad_layer) {
    for (std::size_t i = 0; i < seed.rows(); ++i) {
        const cdouble *srow = seed.data() + i * seed.cols();
        const cdouble *prow = post_phase.data() + i * post_phase.cols();
        double acc = 0.0;
        for (std::size_t c = 0; c < seed.cols(); ++c)
            acc += std::imag(std::conj(srow[c]) * prow[c]);
        grad_layer[i] = -2.0 * acc;
    }
}

void check_chain(const PhaseStack &stack, const std::vector<PropagationKernel> &kernels) {
    if (kernels.size() != stack.layers)
        throw ShapeError(strfmt("chain has %zu kernels but the stack has %zu layers",
                                kernels.size(), stack.layers));
}

} // namespace

ComplexMatrix forward_field(const PhaseStack &stack,
                            const std::vector<PropagationKernel> &kernels,
                            const ComplexMatrix &x_in,
                            std::vector<ComplexMatrix> *post_phase) {
    check_chain(stack, kernels);
    ComplexMatrix cur = x_in;
    if (post_phase) {
        post_phase->clear();
        post_phase->reserve(stack.layers);
    }
    for (std::size_t l = 0; l < stack.layers; ++l) {
        if (stack.side == Side::tx) {
            cur = matmul(kernels[l].matrix, cur);
            apply_phase_rows(stack, l, cur);
            if (post_phase)
                post_phase->push_back(cur);
        } else {
            apply_phase_rows(stack, l, cur);
            if (post_phase)
                post_phase->push_back(cur);
            cur = matmul(kernels[l].matrix, cur);
        }
    }
    return cur;
}

ComplexMatrix effective_transform(const PhaseStack &stack,
                                  const std::vector<PropagationKernel> &kernels) {
    check_chain(stack, kernels);
    if (kernels.empty())
        throw ShapeError("effective_transform: empty kernel chain");
    return forward_field(stack, kernels, ComplexMatrix::identity(kernels[0].matrix.cols()));
}

ComplexMatrix effective_channel(const ComplexMatrix &p, const ComplexMatrix &h,
                                const ComplexMatrix &q) {
    return matmul(q, matmul(h, p));
}

ComplexMatrix end_to_end(const PhaseStack &tx_stack, const PhaseStack &rx_stack,
                         const std::vector<PropagationKernel> &tx_kernels,
                         const std::vector<PropagationKernel> &rx_kernels,
                         const ComplexMatrix &h, const ComplexMatrix &x,
                         const ComplexMatrix &z, ForwardTape *tape) {
    ComplexMatrix tx_out =
        forward_field(tx_stack, tx_kernels, x, tape ? &tape->tx_post_phase : nullptr);
    ComplexMatrix rx_in = matmul(h, tx_out);
    ComplexMatrix y =
        forward_field(rx_stack, rx_kernels, rx_in, tape ? &tape->rx_post_phase : nullptr);
    if (!z.empty())
        y = add(y, z);
    if (tape) {
        tape->input = x;
        tape->tx_out = std::move(tx_out);
        tape->h = h;
        tape->noise = z;
        tape->y = y;
        tape->complete = true;
    }
    return y;
}

PhaseGradients backprop_phases(const PhaseStack &tx_stack, const PhaseStack &rx_stack,
                               const std::vector<PropagationKernel> &tx_kernels,
                               const std::vector<PropagationKernel> &rx_kernels,
                               const ForwardTape &tape, const ComplexMatrix &seed_y) {
    if (!tape.complete)
        throw Error("backprop_phases: forward tape is incomplete");
    check_chain(tx_stack, tx_kernels);
    check_chain(rx_stack, rx_kernels);
    if (seed_y.rows() != tape.y.rows() || seed_y.cols() != tape.y.cols())
        throw ShapeError(strfmt("seed shape %zux%zu does not match output %zux%zu",
                                seed_y.rows(), seed_y.cols(), tape.y.rows(),
                                tape.y.cols()));

    PhaseGradients g;
    g.tx.assign(tx_stack.angles.size(), 0.0);
    g.rx.assign(rx_stack.angles.size(), 0.0);

    // Rx side, last layer first: seed through E^l, phase gradient at the
    // recorded post-phase field, then through conj(Theta^l).
    ComplexMatrix seed = seed_y;
    for (std::size_t l = rx_stack.layers; l-- > 0;) {
        ComplexMatrix seed_post = matmul_adjoint_a(rx_kernels[l].matrix, seed);
        accumulate_phase_grad(seed_post, tape.rx_post_phase[l],
                              g.rx.data() + l * rx_stack.elements);
        apply_phase_rows_conj(rx_stack, l, seed_post);
        seed = std::move(seed_post);
    }

    seed = matmul_adjoint_a(tape.h, seed);

    for (std::size_t l = tx_stack.layers; l-- > 0;) {
        accumulate_phase_grad(seed, tape.tx_post_phase[l],
                              g.tx.data() + l * tx_stack.elements);
        apply_phase_rows_conj(tx_stack, l, seed);
        seed = matmul_adjoint_a(tx_kernels[l].matrix, seed);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Finite-difference check
// ---------------------------------------------------------------------------

namespace {

struct ModelEval {
    double loss = 0.0;
    ForwardTape tape;
    ComplexMatrix y_data;
    ComplexMatrix sigma;
};

// One forward pass over the stacked [X | I] input; the identity block
// rides through the same chain and lands as Sigma.
ModelEval eval_model(const GradCheckModel &m, const PhaseStack &tx, const PhaseStack &rx,
                     const LossAdapter &loss, bool want_tape) {
    const std::size_t mt = m.x.rows();
    const std::size_t t_cols = m.x.cols();
    ComplexMatrix stacked(mt, t_cols + mt);
    for (std::size_t r = 0; r < mt; ++r) {
        for (std::size_t c = 0; c < t_cols; ++c)
            stacked(r, c) = m.x(r, c);
        stacked(r, t_cols + r) = 1.0;
    }
    ComplexMatrix z_stacked;
    if (!m.z.empty()) {
        z_stacked = ComplexMatrix(m.z.rows(), t_cols + mt);
        for (std::size_t r = 0; r < m.z.rows(); ++r)
            for (std::size_t c = 0; c < t_cols; ++c)
                z_stacked(r, c) = m.z(r, c);
    }

    ModelEval out;
    ComplexMatrix y = end_to_end(tx, rx, m.tx_kernels, m.rx_kernels, m.h, stacked,
                                 z_stacked, want_tape ? &out.tape : nullptr);
    out.y_data = y.col_block(0, t_cols);
    out.sigma = y.col_block(t_cols, mt);
    SeededLoss l = loss(out.y_data, out.sigma);
    out.loss = l.value;
    return out;
}

} // namespace

GradCheckReport finite_diff_check(const GradCheckModel &model, const LossAdapter &loss,
                                  std::size_t sample_count, std::uint64_t seed) {
    if (sample_count < 1)
        throw Error("finite_diff_check: sample_count must be >= 1");

    // Analytic gradients once, from the stacked pass.
    PhaseStack tx = model.tx_stack, rx = model.rx_stack;
    ModelEval base = eval_model(model, tx, rx, loss, true);
    SeededLoss seeded = loss(base.y_data, base.sigma);

    const std::size_t t_cols = model.x.cols();
    const std::size_t mt = model.x.rows();
    ComplexMatrix seed_stacked(base.tape.y.rows(), t_cols + mt);
    if (!seeded.seed_y.empty())
        for (std::size_t r = 0; r < seed_stacked.rows(); ++r)
            for (std::size_t c = 0; c < t_cols; ++c)
                seed_stacked(r, c) = seeded.seed_y(r, c);
    if (!seeded.seed_sigma.empty())
        for (std::size_t r = 0; r < seed_stacked.rows(); ++r)
            for (std::size_t c = 0; c < mt; ++c)
                seed_stacked(r, t_cols + c) = seeded.seed_sigma(r, c);

    PhaseGradients analytic = backprop_phases(tx, rx, model.tx_kernels, model.rx_kernels,
                                              base.tape, seed_stacked);

    GradCheckReport report;
    report.samples = sample_count;
    Rng rng(seed);
    const double h = model.fd_step;
    const std::size_t tx_params = tx.angles.size();
    const std::size_t total = tx_params + rx.angles.size();

    for (std::size_t s = 0; s < sample_count; ++s) {
        const std::size_t pick = rng.uniform_index(static_cast<std::uint32_t>(total));
        const bool on_tx = pick < tx_params;
        std::vector<double> &angles = on_tx ? tx.angles : rx.angles;
        const std::size_t idx = on_tx ? pick : pick - tx_params;
        const double saved = angles[idx];

        angles[idx] = saved + h;
        const double loss_plus = eval_model(model, tx, rx, loss, false).loss;
        angles[idx] = saved - h;
        const double loss_minus = eval_model(model, tx, rx, loss, false).loss;
        angles[idx] = saved;

        const double fd = (loss_plus - loss_minus) / (2.0 * h);
        const double an =
            (on_tx ? analytic.tx[idx] : analytic.rx[idx]) + model.gradient_offset;
        // Flooring the denominator at 1e-4 makes "rel < 1e-5" equivalent
        // to "|an - fd| < 1e-9" for near-zero gradients.
        const double denom = std::max(std::abs(fd), 1e-4);
        const double rel = std::abs(an - fd) / denom;

        const std::size_t n = on_tx ? tx.elements : rx.elements;
        if (on_tx && rel > report.tx_max_rel_error) {
            report.tx_max_rel_error = rel;
            report.worst_tx = strfmt("layer %zu element %zu: analytic %.9e fd %.9e",
                                     idx / n + 1, idx % n, an, fd);
        }
        if (!on_tx && rel > report.rx_max_rel_error) {
            report.rx_max_rel_error = rel;
            report.worst_rx = strfmt("layer %zu element %zu: analytic %.9e fd %.9e",
                                     idx / n + 1, idx % n, an, fd);
        }
        report.max_rel_error = std::max(report.max_rel_error, rel);
    }
    return report;
}

} // namespace sisforge

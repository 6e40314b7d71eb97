// SPDX-License-Identifier: Apache-2.0
//
// The trainable model. Each surface element contributes one real phase
// angle; a layer acts on a wavefield as a unit-modulus diagonal. The
// forward pass composes, per side,
//
//   tx:  X <- Phi^l (W^l X)   (propagate, then phase; l = 1..L_t)
//   rx:  X <- E^l (Theta^l X) (phase, then propagate; l = 1..L_r)
//
// so the end-to-end map is Y = Q H P X + Z with P = Phi^L W^L ... Phi^1 W^1
// and Q = E^L Theta^L ... E^1 Theta^1. Gradients of any real scalar loss
// with respect to every angle come from reverse traversal of the chain
// with cached post-phase wavefields; d(e^{j phi})/d phi = j e^{j phi}.
//
// Seed convention: a loss seed is dL/d(conj Y) (the Wirtinger conjugate
// derivative), so dL = 2 Re <seed, dY> and the derivative of L with
// respect to Re/Im of an entry is 2 Re / 2 Im of the seed entry.

#ifndef SISFORGE_SISNET_HPP
#define SISFORGE_SISNET_HPP

#include "sisforge/complex_matrix.hpp"
#include "sisforge/geometry.hpp"
#include "sisforge/wavefield.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace sisforge {

// Reduce an angle to the canonical range [0, 2 pi).
double wrap_angle(double a);

struct PhaseStack {
    Side side = Side::tx;
    std::size_t layers = 0;
    std::size_t elements = 0;
    std::vector<double> angles; // layers * elements, layer-major, each in [0, 2 pi)

    PhaseStack() = default;
    PhaseStack(Side s, std::size_t l, std::size_t n)
        : side(s), layers(l), elements(n), angles(l * n, 0.0) {}

    double &angle(std::size_t layer, std::size_t i) { return angles[layer * elements + i]; }
    double angle(std::size_t layer, std::size_t i) const { return angles[layer * elements + i]; }
    cdouble weight(std::size_t layer, std::size_t i) const;
};

// Checkpoint format: header "side L N", then one angle per line with 17
// significant digits in (layer-major, element-minor) order; round-trips
// bit-exactly.
void save_phase_stack(const PhaseStack &s, const std::string &path);
PhaseStack load_phase_stack(const std::string &path);

// Cached intermediates of one end-to-end pass: enough to backpropagate
// and to replay the pass bit-exactly.
struct ForwardTape {
    ComplexMatrix input;                      // M_t x C
    std::vector<ComplexMatrix> tx_post_phase; // per tx layer, N_t x C
    ComplexMatrix tx_out;                     // field entering the channel
    ComplexMatrix h;                          // channel realization used
    std::vector<ComplexMatrix> rx_post_phase; // per rx layer, N_r x C
    ComplexMatrix noise;                      // empty when the pass was noiseless
    ComplexMatrix y;                          // resulting output
    bool complete = false;
};

// One side of the chain. kernels[l] must be the l-th propagation matrix
// in application order (see build_chain_kernels). When post_phase is
// given, the post-phase wavefield of every layer is appended to it.
ComplexMatrix forward_field(const PhaseStack &stack,
                            const std::vector<PropagationKernel> &kernels,
                            const ComplexMatrix &x_in,
                            std::vector<ComplexMatrix> *post_phase = nullptr);

// The side's composite transform: tx gives P (N_t x M_t), rx gives Q
// (M_r x N_r).
ComplexMatrix effective_transform(const PhaseStack &stack,
                                  const std::vector<PropagationKernel> &kernels);

// Sigma = Q H P.
ComplexMatrix effective_channel(const ComplexMatrix &p, const ComplexMatrix &h,
                                const ComplexMatrix &q);

// Y = rx_chain(H * tx_chain(X)) + Z. Pass an empty Z for a noiseless run.
ComplexMatrix end_to_end(const PhaseStack &tx_stack, const PhaseStack &rx_stack,
                         const std::vector<PropagationKernel> &tx_kernels,
                         const std::vector<PropagationKernel> &rx_kernels,
                         const ComplexMatrix &h, const ComplexMatrix &x,
                         const ComplexMatrix &z, ForwardTape *tape = nullptr);

struct PhaseGradients {
    std::vector<double> tx; // dL/d phi, layer-major
    std::vector<double> rx; // dL/d theta, layer-major
};

// Reverse traversal of the recorded pass. seed_y is dL/d(conj Y) shaped
// like tape.y. Throws if the tape is incomplete.
PhaseGradients backprop_phases(const PhaseStack &tx_stack, const PhaseStack &rx_stack,
                               const std::vector<PropagationKernel> &tx_kernels,
                               const std::vector<PropagationKernel> &rx_kernels,
                               const ForwardTape &tape, const ComplexMatrix &seed_y);

// ---------------------------------------------------------------------------
// Finite-difference gradient validation
// ---------------------------------------------------------------------------

// Loss evaluated on the data block of the output and on the effective
// channel, returning its value and the seeds the chain needs.
struct SeededLoss {
    double value = 0.0;
    ComplexMatrix seed_y;     // dL/d(conj Y_data); empty if unused
    ComplexMatrix seed_sigma; // dL/d(conj Sigma); empty if unused
};

using LossAdapter =
    std::function<SeededLoss(const ComplexMatrix &y_data, const ComplexMatrix &sigma)>;

// A frozen model instance for gradient checking: fixed channel, input,
// and noise draw.
struct GradCheckModel {
    PhaseStack tx_stack, rx_stack;
    std::vector<PropagationKernel> tx_kernels, rx_kernels;
    ComplexMatrix h;
    ComplexMatrix x;     // data input, M_t x T
    ComplexMatrix z;     // noise added to the data block; empty for none
    double fd_step = 1e-6;
    // Fault-injection hook for the harness's negative test: added to
    // every analytic gradient before comparison.
    double gradient_offset = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    double tx_max_rel_error = 0.0;
    double rx_max_rel_error = 0.0;
    std::string worst_tx; // "layer l element i: analytic ... fd ..."
    std::string worst_rx;
    std::size_t samples = 0;
};

// Compare analytic gradients against central finite differences on
// sample_count randomly chosen parameters (both sides). Relative error
// uses a 1e-9 absolute floor near zero.
GradCheckReport finite_diff_check(const GradCheckModel &model, const LossAdapter &loss,
                                  std::size_t sample_count, std::uint64_t seed);

} // namespace sisforge

#endif

// SPDX-License-Identifier: Apache-2.0
//
// The two differentiable training losses. Each returns its scalar value
// together with the Wirtinger seeds (dL/d conj of the target) consumed
// by the chain backpropagation, plus a cheap diagnostic.

#ifndef SISFORGE_OBJECTIVES_HPP
#define SISFORGE_OBJECTIVES_HPP

#include "sisforge/complex_matrix.hpp"
#include "sisforge/modem.hpp"

#include <string>

namespace sisforge {

struct LossValue {
    double value = 0.0;
    ComplexMatrix seed_y;     // dL/d(conj Y); empty when the loss ignores Y
    ComplexMatrix seed_sigma; // dL/d(conj Sigma); empty when unused
    double diagnostic = 0.0;  // ser_ce: batch SER estimate; svd_gap: Gamma_c
};

// Cross-entropy surrogate for the symbol error rate. Per stream m and
// time t the K class logits are
//
//   logit_k = -| Y[m,t] - Sigma[m,m] * power_scale * s_k |^2 / tau_m
//   tau_m   = noise_power + power_scale^2 * sum_{c != m} |Sigma[m,c]|^2
//
// and the loss is the mean negative log-softmax at the true class. The
// temperature counts inter-stream interference as noise, so the softmax
// stays informative while the effective channel is far from diagonal
// and sharpens to the thermal floor as it diagonalizes. The seeds cover
// the direct Y dependence and the full Sigma row (diagonal gain plus
// the interference entering tau). The diagnostic is the fraction of
// positions whose argmax logit is not the true class.
LossValue cross_entropy_loss(const ComplexMatrix &y, const ComplexMatrix &sigma,
                             const IndexMatrix &truth, const Constellation &constellation,
                             double power_scale, double noise_power);

// Normalized Frobenius gap between the scaled effective channel and the
// current SVD target:
//
//   phi* = <Sigma, Pi> / ||Sigma||_F^2   (closed-form least squares)
//   Gamma_c = || phi* Sigma - Pi ||_F^2 / || Pi Pi^H ||_F^2
//
// The target is held fixed (no differentiation through the SVD); phi* is
// re-derived each evaluation, and since it is the exact minimizer the
// seed is conj(phi*) (phi* Sigma - Pi) / || Pi Pi^H ||_F^2.
LossValue frobenius_gap(const ComplexMatrix &sigma, const ComplexMatrix &pi_block);

// diag of the top M singular values of h, descending (the
// Pi_{1:M,1:M} alignment target).
ComplexMatrix svd_target(const ComplexMatrix &h, std::size_t m);

} // namespace sisforge

#endif

// SPDX-License-Identifier: Apache-2.0
//
// Constellations, modulation, joint maximum-likelihood detection, and
// symbol error counting.

#ifndef SISFORGE_MODEM_HPP
#define SISFORGE_MODEM_HPP

#include "sisforge/complex_matrix.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace sisforge {

// Unit-average-energy constellation with Gray-coded labels.
//
// "4-QAM" (the default): index bits (b1 b0) map to the quadrant, b1
// selecting the real sign and b0 the imaginary sign (0 -> +), so index 0
// is (1+j)/sqrt(2) and axis neighbors differ in exactly one bit.
// "QPSK" is an alias of PSK-4; "PSK-k" places point e^{j 2 pi m / K}
// at label gray(m) = m ^ (m >> 1).
struct Constellation {
    std::string name;
    std::vector<cdouble> points; // indexed by symbol label

    std::size_t order() const { return points.size(); }
};

Constellation make_constellation(const std::string &name);

using IndexMatrix = std::vector<std::vector<int>>; // [stream][time]

// X[m,t] = power_scale * points[indices[m][t]]. power_scale is
// sqrt(P_total / M_t) so the total average transmit power is P_total.
ComplexMatrix modulate(const IndexMatrix &indices, const Constellation &constellation,
                       double power_scale);

// Per column t, argmin over all K^{M_t} candidate symbol vectors x of
// ||Y[:,t] - Sigma * (power_scale * x)||^2 (joint ML under AWGN with the
// effective channel known). Guard: K^{M_t} <= 65536, otherwise an error
// advising the per-stream fallback.
IndexMatrix ml_detect(const ComplexMatrix &y, const ComplexMatrix &sigma,
                      const Constellation &constellation, double power_scale);

// Independent per-stream nearest-point decisions against the diagonal of
// Sigma; the cheap fallback baseline (also the argmax of the training
// logits).
IndexMatrix per_stream_detect(const ComplexMatrix &y, const ComplexMatrix &sigma,
                              const Constellation &constellation, double power_scale);

// Fraction of (stream, time) positions where detected != truth.
double symbol_error_rate(const IndexMatrix &detected, const IndexMatrix &truth);

} // namespace sisforge

#endif

// SPDX-License-Identifier: Apache-2.0

#include "sisforge/objectives.hpp"
#include "sisforge/common.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace sisforge {

LossValue cross_entropy_loss(const ComplexMatrix &y, const ComplexMatrix &sigma,
                             const IndexMatrix &truth, const Constellation &constellation,
                             double power_scale, double noise_power) {
    if (noise_power <= 0.0)
        throw Error("cross_entropy_loss: noise power must be positive");
    const std::size_t streams = truth.size();
    if (streams == 0 || streams > y.rows() || streams > sigma.rows() ||
        streams > sigma.cols())
        throw ShapeError(strfmt("cross_entropy_loss: %zu truth streams vs Y %zux%zu, "
                                "Sigma %zux%zu",
                                streams, y.rows(), y.cols(), sigma.rows(), sigma.cols()));
    const std::size_t times = y.cols();
    const std::size_t order = constellation.order();

    LossValue out;
    out.seed_y = ComplexMatrix(y.rows(), y.cols());
    out.seed_sigma = ComplexMatrix(sigma.rows(), sigma.cols());

    const double count = static_cast<double>(streams * times);
    const double g2 = power_scale * power_scale;
    std::vector<double> logits(order);
    std::vector<double> probs(order);
    std::size_t miss = 0;
    double loss = 0.0;

    for (std::size_t m = 0; m < streams; ++m) {
        const cdouble gain = sigma(m, m) * power_scale;
        // Interference from the other streams is treated as noise: the
        // temperature is the full per-stream disturbance power. Without
        // this term the softmax saturates whenever interference
        // dominates the thermal noise and training stalls; it vanishes
        // as the effective channel diagonalizes.
        double temperature = noise_power;
        for (std::size_t c = 0; c < sigma.cols(); ++c)
            if (c != m)
                temperature += g2 * std::norm(sigma(m, c));
        for (std::size_t t = 0; t < times; ++t) {
            if (truth[m].size() != times)
                throw ShapeError("cross_entropy_loss: ragged truth array");
            const int label = truth[m][t];
            if (label < 0 || label >= static_cast<int>(order))
                throw Error("cross_entropy_loss: truth index out of range");
            const cdouble yv = y(m, t);

            double zmax = -HUGE_VAL;
            for (std::size_t k = 0; k < order; ++k) {
                logits[k] = -std::norm(yv - gain * constellation.points[k]) / temperature;
                zmax = std::max(zmax, logits[k]);
            }
            double denom = 0.0;
            std::size_t argmax = 0;
            for (std::size_t k = 0; k < order; ++k) {
                probs[k] = std::exp(logits[k] - zmax);
                denom += probs[k];
                if (logits[k] > logits[argmax])
                    argmax = k;
            }
            for (std::size_t k = 0; k < order; ++k)
                probs[k] /= denom;

            const std::size_t lab = static_cast<std::size_t>(label);
            loss += -(logits[lab] - zmax) + std::log(denom);
            if (argmax != lab)
                ++miss;

            // Seeds, with w_k = p_k - delta_{k,label}:
            //   dL/d(conj Y)    = gain sum_k w_k s_k / tau
            //   dL/d(conj S_mm) = (g / tau) sum_k w_k (Y - gain s_k) conj(s_k)
            //   dL/d(conj S_mc) = [sum_k w_k d_k / tau^2] g^2 S_mc   (c != m)
            cdouble sbar{0.0, 0.0};
            cdouble sig_acc{0.0, 0.0};
            double temp_acc = 0.0;
            for (std::size_t k = 0; k < order; ++k) {
                const double w = probs[k] - (k == lab ? 1.0 : 0.0);
                const cdouble sk = constellation.points[k];
                sbar += w * sk;
                sig_acc += w * (yv - gain * sk) * std::conj(sk);
                temp_acc += w * std::norm(yv - gain * sk);
            }
            out.seed_y(m, t) = gain * sbar / temperature / count;
            out.seed_sigma(m, m) += power_scale * sig_acc / temperature / count;
            const double temp_factor = temp_acc / (temperature * temperature) / count;
            for (std::size_t c = 0; c < sigma.cols(); ++c)
                if (c != m)
                    out.seed_sigma(m, c) += temp_factor * g2 * sigma(m, c);
        }
    }

    out.value = loss / count;
    out.diagnostic = static_cast<double>(miss) / count;
    return out;
}

LossValue frobenius_gap(const ComplexMatrix &sigma, const ComplexMatrix &pi_block) {
    if (sigma.rows() != pi_block.rows() || sigma.cols() != pi_block.cols())
        throw ShapeError(strfmt("frobenius_gap: Sigma %zux%zu vs target %zux%zu",
                                sigma.rows(), sigma.cols(), pi_block.rows(),
                                pi_block.cols()));
    const double sigma_energy = frobenius_norm_sq(sigma);
    if (sigma_energy == 0.0)
        throw Error("frobenius_gap: Sigma is zero (scale phi* undefined)");

    const cdouble phi = frobenius_inner(sigma, pi_block) / sigma_energy;
    const double denom = frobenius_norm_sq(matmul(pi_block, pi_block.conj_transpose()));
    if (denom == 0.0)
        throw Error("frobenius_gap: zero alignment target");

    ComplexMatrix gap = sub(scale(sigma, phi), pi_block);
    LossValue out;
    out.value = frobenius_norm_sq(gap) / denom;
    out.diagnostic = out.value;
    // phi* is the exact least-squares minimizer, so its dependence on
    // Sigma contributes nothing to first order (envelope theorem).
    out.seed_sigma = scale(gap, std::conj(phi) / denom);
    return out;
}

ComplexMatrix svd_target(const ComplexMatrix &h, std::size_t m) {
    SvdResult svd = truncated_svd(h, m);
    ComplexMatrix pi(m, m);
    for (std::size_t i = 0; i < m; ++i)
        pi(i, i) = svd.s[i];
    return pi;
}

} // namespace sisforge

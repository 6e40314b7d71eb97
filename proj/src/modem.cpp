// SPDX-License-Identifier: Apache-2.0

#include "sisforge/modem.hpp"
#include "sisforge/common.hpp"

#include <cmath>
#include <cstdlib>
#include <limits>

namespace sisforge {

Constellation make_constellation(const std::string &name) {
    Constellation c;
    c.name = name;
    if (name == "4-QAM") {
        const double a = M_SQRT1_2;
        c.points.resize(4);
        for (int k = 0; k < 4; ++k) {
            const double re = ((k >> 1) & 1) ? -a : a;
            const double im = (k & 1) ? -a : a;
            c.points[static_cast<std::size_t>(k)] = {re, im};
        }
        return c;
    }
    std::size_t order = 0;
    if (name == "QPSK") {
        order = 4;
    } else if (name.rfind("PSK-", 0) == 0) {
        const long k = std::strtol(name.c_str() + 4, nullptr, 10);
        if (k < 2 || k > 4096)
            throw Error("unsupported constellation: " + name);
        order = static_cast<std::size_t>(k);
    } else {
        throw Error("unsupported constellation: " + name);
    }
    c.points.resize(order);
    for (std::size_t m = 0; m < order; ++m) {
        const double ph = 2.0 * M_PI * static_cast<double>(m) / static_cast<double>(order);
        const std::size_t label = m ^ (m >> 1); // Gray label of position m
        c.points[label] = {std::cos(ph), std::sin(ph)};
    }
    return c;
}

ComplexMatrix modulate(const IndexMatrix &indices, const Constellation &constellation,
                       double power_scale) {
    if (indices.empty() || indices[0].empty())
        throw Error("modulate: empty index array");
    const std::size_t streams = indices.size();
    const std::size_t times = indices[0].size();
    const int order = static_cast<int>(constellation.order());
    ComplexMatrix x(streams, times);
    for (std::size_t m = 0; m < streams; ++m) {
        if (indices[m].size() != times)
            throw ShapeError("modulate: ragged index array");
        for (std::size_t t = 0; t < times; ++t) {
            const int k = indices[m][t];
            if (k < 0 || k >= order)
                throw Error(strfmt("modulate: index %d out of range [0, %d)", k, order));
            x(m, t) = power_scale * constellation.points[static_cast<std::size_t>(k)];
        }
    }
    return x;
}

IndexMatrix ml_detect(const ComplexMatrix &y, const ComplexMatrix &sigma,
                      const Constellation &constellation, double power_scale) {
    const std::size_t mr = sigma.rows();
    const std::size_t mt = sigma.cols();
    if (y.rows() != mr)
        throw ShapeError(strfmt("ml_detect: Y has %zu rows, Sigma expects %zu",
                                y.rows(), mr));
    const std::size_t order = constellation.order();

    double hypotheses = 1.0;
    for (std::size_t m = 0; m < mt; ++m)
        hypotheses *= static_cast<double>(order);
    if (hypotheses > 65536.0)
        throw Error(strfmt("ml_detect: %.0f hypotheses exceed the enumeration guard "
                           "(65536); use the per-stream fallback",
                           hypotheses));
    const std::size_t n_cand = static_cast<std::size_t>(hypotheses);

    // Precompute Sigma * (power_scale * s_vec) for every candidate vector;
    // candidates enumerate odometer-style, stream 0 fastest.
    std::vector<cdouble> cand(n_cand * mr);
    std::vector<int> digits(mt, 0);
    std::vector<cdouble> scaled(order);
    for (std::size_t k = 0; k < order; ++k)
        scaled[k] = power_scale * constellation.points[k];
    for (std::size_t c = 0; c < n_cand; ++c) {
        cdouble *col = cand.data() + c * mr;
        for (std::size_t r = 0; r < mr; ++r) {
            cdouble acc{0.0, 0.0};
            for (std::size_t m = 0; m < mt; ++m)
                acc += sigma(r, m) * scaled[static_cast<std::size_t>(digits[m])];
            col[r] = acc;
        }
        for (std::size_t m = 0; m < mt; ++m) {
            if (++digits[m] < static_cast<int>(order))
                break;
            digits[m] = 0;
        }
    }

    IndexMatrix out(mt, std::vector<int>(y.cols(), 0));
    for (std::size_t t = 0; t < y.cols(); ++t) {
        double best = std::numeric_limits<double>::infinity();
        std::size_t best_c = 0;
        for (std::size_t c = 0; c < n_cand; ++c) {
            const cdouble *col = cand.data() + c * mr;
            double dist = 0.0;
            for (std::size_t r = 0; r < mr; ++r)
                dist += std::norm(y(r, t) - col[r]);
            if (dist < best) {
                best = dist;
                best_c = c;
            }
        }
        std::size_t rem = best_c;
        for (std::size_t m = 0; m < mt; ++m) {
            out[m][t] = static_cast<int>(rem % order);
            rem /= order;
        }
    }
    return out;
}

IndexMatrix per_stream_detect(const ComplexMatrix &y, const ComplexMatrix &sigma,
                              const Constellation &constellation, double power_scale) {
    const std::size_t mt = sigma.cols();
    const std::size_t streams = std::min(mt, y.rows());
    const std::size_t order = constellation.order();
    IndexMatrix out(streams, std::vector<int>(y.cols(), 0));
    for (std::size_t m = 0; m < streams; ++m) {
        const cdouble gain = sigma(m, m) * power_scale;
        for (std::size_t t = 0; t < y.cols(); ++t) {
            double best = std::numeric_limits<double>::infinity();
            int best_k = 0;
            for (std::size_t k = 0; k < order; ++k) {
                const double dist = std::norm(y(m, t) - gain * constellation.points[k]);
                if (dist < best) {
                    best = dist;
                    best_k = static_cast<int>(k);
                }
            }
            out[m][t] = best_k;
        }
    }
    return out;
}

double symbol_error_rate(const IndexMatrix &detected, const IndexMatrix &truth) {
    if (detected.size() != truth.size())
        throw ShapeError("symbol_error_rate: stream count mismatch");
    std::size_t total = 0, errors = 0;
    for (std::size_t m = 0; m < detected.size(); ++m) {
        if (detected[m].size() != truth[m].size())
            throw ShapeError("symbol_error_rate: time count mismatch");
        for (std::size_t t = 0; t < detected[m].size(); ++t) {
            ++total;
            if (detected[m][t] != truth[m][t])
                ++errors;
        }
    }
    return total == 0 ? 0.0 : static_cast<double>(errors) / static_cast<double>(total);
}

} // namespace sisforge

// SPDX-License-Identifier: Apache-2.0
//
// Independent reference implementations used only by tests. These stay
// deliberately naive and separate from the library code paths they
// check.

#ifndef SISFORGE_TESTS_ORACLES_HPP
#define SISFORGE_TESTS_ORACLES_HPP

#include "sisforge/complex_matrix.hpp"
#include "sisforge/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

namespace oracles {

using sisforge::cdouble;
using sisforge::ComplexMatrix;

// Textbook triple loop, (i, j, k) order.
inline ComplexMatrix naive_matmul(const ComplexMatrix &a, const ComplexMatrix &b) {
    ComplexMatrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.cols(); ++j) {
            cdouble acc{0.0, 0.0};
            for (std::size_t k = 0; k < a.cols(); ++k)
                acc += a(i, k) * b(k, j);
            c(i, j) = acc;
        }
    return c;
}

// Eigenvalues of a Hermitian matrix by classic two-sided Jacobi
// (cyclic), descending. Completely independent of the library SVD.
inline std::vector<double> jacobi_hermitian_eigenvalues(ComplexMatrix a) {
    const std::size_t n = a.rows();
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p)
            for (std::size_t q = p + 1; q < n; ++q)
                off = std::max(off, std::abs(a(p, q)));
        double scale = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            scale = std::max(scale, std::abs(a(i, i)));
        if (off <= 1e-14 * std::max(scale, 1e-300))
            break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const cdouble apq = a(p, q);
                const double w = std::abs(apq);
                if (w == 0.0)
                    continue;
                const double app = a(p, p).real();
                const double aqq = a(q, q).real();
                const cdouble phase = apq / w;
                const double tau = (aqq - app) / (2.0 * w);
                const double t =
                    (tau >= 0.0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = c * t;
                // Unitary similarity with J = [[c, s*phase], [-s*conj(phase), c]]
                // applied as A <- J^H A J on the (p, q) plane.
                for (std::size_t i = 0; i < n; ++i) {
                    const cdouble aip = a(i, p), aiq = a(i, q);
                    a(i, p) = c * aip - s * std::conj(phase) * aiq;
                    a(i, q) = s * phase * aip + c * aiq;
                }
                for (std::size_t i = 0; i < n; ++i) {
                    const cdouble api = a(p, i), aqi = a(q, i);
                    a(p, i) = c * api - s * phase * aqi;
                    a(q, i) = s * std::conj(phase) * api + c * aqi;
                }
            }
        }
    }
    std::vector<double> ev(n);
    for (std::size_t i = 0; i < n; ++i)
        ev[i] = a(i, i).real();
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev;
}

inline ComplexMatrix random_matrix(std::size_t rows, std::size_t cols, sisforge::Rng &rng) {
    ComplexMatrix m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i)
        m.data()[i] = rng.normal_complex_unit();
    return m;
}

// Random unitary via Gram-Schmidt on a random Gaussian matrix.
inline ComplexMatrix random_unitary(std::size_t n, sisforge::Rng &rng) {
    ComplexMatrix m = random_matrix(n, n, rng);
    for (std::size_t j = 0; j < n; ++j) {
        for (int pass = 0; pass < 2; ++pass)
            for (std::size_t k = 0; k < j; ++k) {
                cdouble dot{0.0, 0.0};
                for (std::size_t i = 0; i < n; ++i)
                    dot += std::conj(m(i, k)) * m(i, j);
                for (std::size_t i = 0; i < n; ++i)
                    m(i, j) -= dot * m(i, k);
            }
        double nrm = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            nrm += std::norm(m(i, j));
        nrm = std::sqrt(nrm);
        for (std::size_t i = 0; i < n; ++i)
            m(i, j) /= nrm;
    }
    return m;
}

inline double rel_err(double got, double want) {
    return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

inline double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
    return worst;
}

} // namespace oracles

#endif

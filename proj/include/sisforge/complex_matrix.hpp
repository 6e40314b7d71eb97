// SPDX-License-Identifier: Apache-2.0
//
// Dense double-precision complex matrices: multiplication, norms, and a
// truncated SVD. This is the universal value type carried between the
// geometry, channel, network, and objective layers.
//
// Storage order is row-major: entry (r, c) lives at data()[r * cols + c].
// The text dump format serializes entries in exactly that order.

#ifndef SISFORGE_COMPLEX_MATRIX_HPP
#define SISFORGE_COMPLEX_MATRIX_HPP

#include <cassert>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

namespace sisforge {

using cdouble = std::complex<double>;

class ComplexMatrix {
  public:
    ComplexMatrix() = default;
    ComplexMatrix(std::size_t rows, std::size_t cols);

    static ComplexMatrix identity(std::size_t n);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    cdouble &operator()(std::size_t r, std::size_t c) {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }
    const cdouble &operator()(std::size_t r, std::size_t c) const {
        assert(r < rows_ && c < cols_);
        return data_[r * cols_ + c];
    }

    cdouble *data() { return data_.data(); }
    const cdouble *data() const { return data_.data(); }

    ComplexMatrix conj_transpose() const;

    // Columns [c0, c0+n) as a new matrix.
    ComplexMatrix col_block(std::size_t c0, std::size_t n) const;

    bool all_finite() const;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<cdouble> data_;
};

// Exact mathematical product in double precision. Throws ShapeError
// naming both shapes on a dimension mismatch.
ComplexMatrix matmul(const ComplexMatrix &a, const ComplexMatrix &b);

// a^H * b without forming the adjoint.
ComplexMatrix matmul_adjoint_a(const ComplexMatrix &a, const ComplexMatrix &b);

ComplexMatrix add(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix sub(const ComplexMatrix &a, const ComplexMatrix &b);
ComplexMatrix scale(const ComplexMatrix &a, cdouble factor);

// Frobenius inner product sum_ij conj(a_ij) * b_ij.
cdouble frobenius_inner(const ComplexMatrix &a, const ComplexMatrix &b);

// Sum of squared magnitudes of all entries.
double frobenius_norm_sq(const ComplexMatrix &a);

struct SvdResult {
    ComplexMatrix u;               // rows x k, orthonormal columns
    std::vector<double> s;         // k singular values, descending
    ComplexMatrix v;               // cols x k, orthonormal columns
};

enum class SvdMethod {
    automatic,     // Jacobi for small sizes or large k, Lanczos otherwise
    jacobi,        // one-sided Jacobi, full decomposition then truncate
    lanczos,       // Golub-Kahan bidiagonalization with full reorthogonalization
};

// Top-k singular triples of a. Postconditions: s nonnegative descending,
// U and V have orthonormal columns, and ||a v_i - s_i u_i|| <= 1e-8 * s_1
// for every retained triple. Throws NumericError carrying the residual if
// the iteration cap is hit without convergence.
SvdResult truncated_svd(const ComplexMatrix &a, std::size_t k,
                        SvdMethod method = SvdMethod::automatic);

// Debug dump format: header line "rows cols", then one "re im" pair per
// entry in storage order, 17 significant digits (bit-exact round trip).
std::string dump_matrix(const ComplexMatrix &a);
ComplexMatrix load_matrix(const std::string &text);
void dump_matrix_file(const ComplexMatrix &a, const std::string &path);
ComplexMatrix load_matrix_file(const std::string &path);

} // namespace sisforge

#endif

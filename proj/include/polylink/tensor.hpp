#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace polylink {

template <typename Real>
using Matrix = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// CSR matrix with one coefficient per stored entry. Used for normalized
// relation adjacency (c_r^ij) and for sparse node feature matrices.
template <typename Real>
struct SparseAdjacency {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> offsets{0};
    std::vector<std::uint32_t> columns;
    std::vector<Real> coefficients;

    std::size_t nnz() const { return columns.size(); }
    std::size_t row_size(std::size_t i) const { return offsets[i + 1] - offsets[i]; }

    static SparseAdjacency identity(std::size_t n);
    Matrix<Real> to_dense() const;
    SparseAdjacency transposed() const;
    template <typename Other>
    SparseAdjacency<Other> cast() const;
};

// out = adj * dense
template <typename Real>
Matrix<Real> spmm(const SparseAdjacency<Real>& adj, const Matrix<Real>& dense);

// out = adj^T * dense; the backward pass of spmm with respect to `dense`.
template <typename Real>
Matrix<Real> spmm_transposed(const SparseAdjacency<Real>& adj, const Matrix<Real>& dense);

template <typename Real>
SparseAdjacency<Real> SparseAdjacency<Real>::identity(std::size_t n) {
    SparseAdjacency out;
    out.rows = out.cols = n;
    out.offsets.resize(n + 1);
    out.columns.resize(n);
    out.coefficients.assign(n, Real(1));
    for (std::size_t i = 0; i <= n; ++i) out.offsets[i] = i;
    for (std::size_t i = 0; i < n; ++i) out.columns[i] = static_cast<std::uint32_t>(i);
    return out;
}

template <typename Real>
template <typename Other>
SparseAdjacency<Other> SparseAdjacency<Real>::cast() const {
    SparseAdjacency<Other> out;
    out.rows = rows;
    out.cols = cols;
    out.offsets = offsets;
    out.columns = columns;
    out.coefficients.assign(coefficients.begin(), coefficients.end());
    return out;
}

}  // namespace polylink

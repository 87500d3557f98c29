#include "polylink/tensor.hpp"

#include <stdexcept>
#include <string>

namespace polylink {

template <typename Real>
Matrix<Real> SparseAdjacency<Real>::to_dense() const {
    Matrix<Real> out = Matrix<Real>::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
            out(static_cast<Eigen::Index>(i), columns[e]) += coefficients[e];
        }
    }
    return out;
}

template <typename Real>
SparseAdjacency<Real> SparseAdjacency<Real>::transposed() const {
    SparseAdjacency out;
    out.rows = cols;
    out.cols = rows;
    out.offsets.assign(cols + 1, 0);
    for (std::uint32_t c : columns) ++out.offsets[c + 1];
    for (std::size_t i = 0; i < cols; ++i) out.offsets[i + 1] += out.offsets[i];
    out.columns.resize(nnz());
    out.coefficients.resize(nnz());
    std::vector<std::size_t> cursor(out.offsets.begin(), out.offsets.end() - 1);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t e = offsets[i]; e < offsets[i + 1]; ++e) {
            const std::size_t slot = cursor[columns[e]]++;
            out.columns[slot] = static_cast<std::uint32_t>(i);
            out.coefficients[slot] = coefficients[e];
        }
    }
    return out;
}

template <typename Real>
Matrix<Real> spmm(const SparseAdjacency<Real>& adj, const Matrix<Real>& dense) {
    if (static_cast<std::size_t>(dense.rows()) != adj.cols) {
        throw std::invalid_argument("spmm: adjacency has " + std::to_string(adj.cols) + " columns but dense has " +
                                    std::to_string(dense.rows()) + " rows");
    }
    Matrix<Real> out = Matrix<Real>::Zero(static_cast<Eigen::Index>(adj.rows), dense.cols());
    for (std::size_t i = 0; i < adj.rows; ++i) {
        auto row = out.row(static_cast<Eigen::Index>(i));
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
            row.noalias() += adj.coefficients[e] * dense.row(adj.columns[e]);
        }
    }
    return out;
}

template <typename Real>
Matrix<Real> spmm_transposed(const SparseAdjacency<Real>& adj, const Matrix<Real>& dense) {
    if (static_cast<std::size_t>(dense.rows()) != adj.rows) {
        throw std::invalid_argument("spmm_transposed: shape mismatch");
    }
    Matrix<Real> out = Matrix<Real>::Zero(static_cast<Eigen::Index>(adj.cols), dense.cols());
    for (std::size_t i = 0; i < adj.rows; ++i) {
        const auto src = dense.row(static_cast<Eigen::Index>(i));
        for (std::size_t e = adj.offsets[i]; e < adj.offsets[i + 1]; ++e) {
            out.row(adj.columns[e]).noalias() += adj.coefficients[e] * src;
        }
    }
    return out;
}

template struct SparseAdjacency<float>;
template struct SparseAdjacency<double>;
template Matrix<float> spmm(const SparseAdjacency<float>&, const Matrix<float>&);
template Matrix<double> spmm(const SparseAdjacency<double>&, const Matrix<double>&);
template Matrix<float> spmm_transposed(const SparseAdjacency<float>&, const Matrix<float>&);
template Matrix<double> spmm_transposed(const SparseAdjacency<double>&, const Matrix<double>&);

}  // namespace polylink

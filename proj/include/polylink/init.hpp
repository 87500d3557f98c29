#pragma once

#include "polylink/random.hpp"
#include "polylink/tensor.hpp"

#include <cstddef>
#include <cstdint>

namespace polylink {

// Uniform on [-sqrt(6/(fan_in+fan_out)), +sqrt(6/(fan_in+fan_out))], shaped
// fan_in x fan_out.
template <typename Real>
Matrix<Real> glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng);

template <typename Real>
Matrix<Real> glorot_init(std::size_t fan_in, std::size_t fan_out, std::uint64_t seed) {
    Rng rng(seed);
    return glorot_init<Real>(fan_in, fan_out, rng);
}

// Same law as glorot_init with an explicit output shape.
template <typename Real>
Matrix<Real> glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Rng& rng);

// Inverted dropout outside of a tape: survivors are scaled by 1/(1-rate).
template <typename Real>
Matrix<Real> dropout(const Matrix<Real>& x, double rate, bool training, std::uint64_t seed);

// Drops stored entries of a sparse matrix (input features); survivors are
// scaled by 1/(1-rate).
template <typename Real>
SparseAdjacency<Real> dropout_entries(const SparseAdjacency<Real>& x, double rate, Rng& rng);

}  // namespace polylink

#include "polylink/init.hpp"

#include <cmath>
#include <stdexcept>

namespace polylink {

template <typename Real>
Matrix<Real> glorot_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    if (fan_in == 0 || fan_out == 0) throw std::invalid_argument("glorot_init: fan_in and fan_out must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix<Real> out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < out.size(); ++i) out.data()[i] = static_cast<Real>(dist(rng));
    return out;
}

template <typename Real>
Matrix<Real> glorot_init(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    return glorot_uniform<Real>(fan_in, fan_out, fan_in, fan_out, rng);
}

template <typename Real>
Matrix<Real> dropout(const Matrix<Real>& x, double rate, bool training, std::uint64_t seed) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    if (!training || rate == 0.0) return x;
    Rng rng(seed);
    std::bernoulli_distribution keep(1.0 - rate);
    const Real survivor = static_cast<Real>(1.0 / (1.0 - rate));
    Matrix<Real> out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) out.data()[i] = keep(rng) ? x.data()[i] * survivor : Real(0);
    return out;
}

template <typename Real>
SparseAdjacency<Real> dropout_entries(const SparseAdjacency<Real>& x, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    if (rate == 0.0) return x;
    std::bernoulli_distribution keep(1.0 - rate);
    const Real survivor = static_cast<Real>(1.0 / (1.0 - rate));
    SparseAdjacency<Real> out;
    out.rows = x.rows;
    out.cols = x.cols;
    out.offsets.assign(x.rows + 1, 0);
    out.columns.reserve(x.nnz());
    out.coefficients.reserve(x.nnz());
    for (std::size_t i = 0; i < x.rows; ++i) {
        for (std::size_t e = x.offsets[i]; e < x.offsets[i + 1]; ++e) {
            if (!keep(rng)) continue;
            out.columns.push_back(x.columns[e]);
            out.coefficients.push_back(x.coefficients[e] * survivor);
        }
        out.offsets[i + 1] = out.columns.size();
    }
    return out;
}

template Matrix<float> glorot_uniform(std::size_t, std::size_t, std::size_t, std::size_t, Rng&);
template Matrix<double> glorot_uniform(std::size_t, std::size_t, std::size_t, std::size_t, Rng&);
template Matrix<float> glorot_init(std::size_t, std::size_t, Rng&);
template Matrix<double> glorot_init(std::size_t, std::size_t, Rng&);
template Matrix<float> dropout(const Matrix<float>&, double, bool, std::uint64_t);
template Matrix<double> dropout(const Matrix<double>&, double, bool, std::uint64_t);
template SparseAdjacency<float> dropout_entries(const SparseAdjacency<float>&, double, Rng&);
template SparseAdjacency<double> dropout_entries(const SparseAdjacency<double>&, double, Rng&);

}  // namespace polylink

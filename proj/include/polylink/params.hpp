#pragma once

#include "polylink/tensor.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace polylink {

template <typename Real>
struct ParamSlot {
    Matrix<Real> value;
    Matrix<Real> grad;
    Matrix<Real> first_moment;
    Matrix<Real> second_moment;
};

// Named trainable tensors with gradient buffers and Adam state. Iteration is
// in name order, which fixes checkpoint layout.
template <typename Real>
class ParamStore {
public:
    ParamSlot<Real>& add(const std::string& name, Matrix<Real> init);
    ParamSlot<Real>& at(const std::string& name);
    const ParamSlot<Real>& at(const std::string& name) const;
    bool contains(const std::string& name) const { return slots_.count(name) != 0; }
    std::size_t size() const { return slots_.size(); }

    auto begin() { return slots_.begin(); }
    auto end() { return slots_.end(); }
    auto begin() const { return slots_.begin(); }
    auto end() const { return slots_.end(); }

    void zero_grad();
    std::uint64_t step() const { return step_; }
    void set_step(std::uint64_t t) { step_ = t; }

    // Copies of all values, for best-epoch snapshots.
    std::map<std::string, Matrix<Real>> snapshot() const;
    void restore(const std::map<std::string, Matrix<Real>>& values);

private:
    std::map<std::string, ParamSlot<Real>> slots_;
    std::uint64_t step_ = 0;
};

struct AdamConfig {
    double lr = 0.001;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

// One bias-corrected Adam update over every parameter; gradients are zeroed
// and the shared step counter advances. Throws NumericError naming the first
// parameter with a non-finite gradient, before anything is modified.
template <typename Real>
void adam_step(ParamStore<Real>& store, const AdamConfig& config = {});

// Checkpoint: text manifest followed by row-major little-endian float64
// values. Manifest:
//   polylink-checkpoint 1
//   step <t>
//   moments <0|1>
//   meta <key> <value>            (zero or more)
//   param <name> <rows> <cols>    (one per parameter, name order)
//   end
// Each parameter contributes its values, then its Adam moments when
// moments = 1.
struct CheckpointMeta {
    std::map<std::string, std::string> entries;
};

template <typename Real>
void save_checkpoint(std::ostream& out, const ParamStore<Real>& store, const CheckpointMeta& meta,
                     bool with_moments = true);

template <typename Real>
ParamStore<Real> load_checkpoint(std::istream& in, CheckpointMeta* meta = nullptr);

}  // namespace polylink

#include "polylink/params.hpp"

#include "polylink/errors.hpp"

#include <bit>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace polylink {

template <typename Real>
ParamSlot<Real>& ParamStore<Real>::add(const std::string& name, Matrix<Real> init) {
    if (name.empty() || name.find_first_of(" \t\n") != std::string::npos) {
        throw std::invalid_argument("parameter names must be non-empty and whitespace-free: '" + name + "'");
    }
    ParamSlot<Real> slot;
    slot.grad = Matrix<Real>::Zero(init.rows(), init.cols());
    slot.first_moment = Matrix<Real>::Zero(init.rows(), init.cols());
    slot.second_moment = Matrix<Real>::Zero(init.rows(), init.cols());
    slot.value = std::move(init);
    auto [it, inserted] = slots_.emplace(name, std::move(slot));
    if (!inserted) throw std::invalid_argument("duplicate parameter " + name);
    return it->second;
}

template <typename Real>
ParamSlot<Real>& ParamStore<Real>::at(const std::string& name) {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw LookupError("unknown parameter " + name);
    return it->second;
}

template <typename Real>
const ParamSlot<Real>& ParamStore<Real>::at(const std::string& name) const {
    auto it = slots_.find(name);
    if (it == slots_.end()) throw LookupError("unknown parameter " + name);
    return it->second;
}

template <typename Real>
void ParamStore<Real>::zero_grad() {
    for (auto& [name, slot] : slots_) slot.grad.setZero();
}

template <typename Real>
std::map<std::string, Matrix<Real>> ParamStore<Real>::snapshot() const {
    std::map<std::string, Matrix<Real>> out;
    for (const auto& [name, slot] : slots_) out.emplace(name, slot.value);
    return out;
}

template <typename Real>
void ParamStore<Real>::restore(const std::map<std::string, Matrix<Real>>& values) {
    for (const auto& [name, value] : values) {
        auto& slot = at(name);
        if (slot.value.rows() != value.rows() || slot.value.cols() != value.cols()) {
            throw std::invalid_argument("restore: shape mismatch for " + name);
        }
        slot.value = value;
    }
}

template <typename Real>
void adam_step(ParamStore<Real>& store, const AdamConfig& config) {
    for (const auto& [name, slot] : store) {
        if (!slot.grad.allFinite()) throw NumericError("non-finite gradient for parameter " + name);
    }
    const std::uint64_t t = store.step() + 1;
    const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
    const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
    const Real b1 = static_cast<Real>(config.beta1);
    const Real b2 = static_cast<Real>(config.beta2);
    for (auto& [name, slot] : store) {
        slot.first_moment = b1 * slot.first_moment + (Real(1) - b1) * slot.grad;
        slot.second_moment = b2 * slot.second_moment + (Real(1) - b2) * slot.grad.cwiseAbs2();
        auto* value = slot.value.data();
        const auto* m = slot.first_moment.data();
        const auto* v = slot.second_moment.data();
        for (Eigen::Index i = 0; i < slot.value.size(); ++i) {
            const double m_hat = static_cast<double>(m[i]) / correction1;
            const double v_hat = static_cast<double>(v[i]) / correction2;
            value[i] -= static_cast<Real>(config.lr * m_hat / (std::sqrt(v_hat) + config.epsilon));
        }
        slot.grad.setZero();
    }
    store.set_step(t);
}

namespace {

void write_f64(std::ostream& out, double x) {
    auto bits = std::bit_cast<std::uint64_t>(x);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    out.write(bytes, 8);
}

double read_f64(std::istream& in) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) throw FormatError("checkpoint truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

template <typename Real>
void write_matrix(std::ostream& out, const Matrix<Real>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) write_f64(out, static_cast<double>(m.data()[i]));
}

template <typename Real>
Matrix<Real> read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols) {
    Matrix<Real> m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Real>(read_f64(in));
    return m;
}

std::string next_line(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw FormatError("checkpoint manifest truncated");
    return line;
}

}  // namespace

template <typename Real>
void save_checkpoint(std::ostream& out, const ParamStore<Real>& store, const CheckpointMeta& meta,
                     bool with_moments) {
    out << "polylink-checkpoint 1\n";
    out << "step " << store.step() << '\n';
    out << "moments " << (with_moments ? 1 : 0) << '\n';
    for (const auto& [key, value] : meta.entries) {
        if (key.find_first_of(" \n") != std::string::npos || value.find('\n') != std::string::npos) {
            throw std::invalid_argument("checkpoint meta keys must be space-free and values single-line");
        }
        out << "meta " << key << ' ' << value << '\n';
    }
    for (const auto& [name, slot] : store) {
        out << "param " << name << ' ' << slot.value.rows() << ' ' << slot.value.cols() << '\n';
    }
    out << "end\n";
    for (const auto& [name, slot] : store) {
        write_matrix(out, slot.value);
        if (with_moments) {
            write_matrix(out, slot.first_moment);
            write_matrix(out, slot.second_moment);
        }
    }
    if (!out) throw std::runtime_error("checkpoint write failed");
}

template <typename Real>
ParamStore<Real> load_checkpoint(std::istream& in, CheckpointMeta* meta) {
    if (next_line(in) != "polylink-checkpoint 1") throw FormatError("not a polylink checkpoint");
    ParamStore<Real> store;
    bool with_moments = false;
    struct Entry {
        std::string name;
        Eigen::Index rows;
        Eigen::Index cols;
    };
    std::vector<Entry> entries;
    for (;;) {
        const std::string line = next_line(in);
        if (line == "end") break;
        std::istringstream fields(line);
        std::string tag;
        fields >> tag;
        if (tag == "step") {
            std::uint64_t t = 0;
            fields >> t;
            store.set_step(t);
        } else if (tag == "moments") {
            int flag = 0;
            fields >> flag;
            with_moments = flag != 0;
        } else if (tag == "meta") {
            std::string key;
            fields >> key;
            std::string value;
            std::getline(fields, value);
            if (!value.empty() && value.front() == ' ') value.erase(0, 1);
            if (meta) meta->entries[key] = value;
        } else if (tag == "param") {
            Entry e;
            fields >> e.name >> e.rows >> e.cols;
            if (!fields || e.rows < 0 || e.cols < 0) throw FormatError("bad checkpoint param line: " + line);
            entries.push_back(e);
        } else {
            throw FormatError("unknown checkpoint manifest line: " + line);
        }
    }
    for (const Entry& e : entries) {
        auto& slot = store.add(e.name, read_matrix<Real>(in, e.rows, e.cols));
        if (with_moments) {
            slot.first_moment = read_matrix<Real>(in, e.rows, e.cols);
            slot.second_moment = read_matrix<Real>(in, e.rows, e.cols);
        }
    }
    return store;
}

template class ParamStore<float>;
template class ParamStore<double>;
template void adam_step(ParamStore<float>&, const AdamConfig&);
template void adam_step(ParamStore<double>&, const AdamConfig&);
template void save_checkpoint(std::ostream&, const ParamStore<float>&, const CheckpointMeta&, bool);
template void save_checkpoint(std::ostream&, const ParamStore<double>&, const CheckpointMeta&, bool);
template ParamStore<float> load_checkpoint(std::istream&, CheckpointMeta*);
template ParamStore<double> load_checkpoint(std::istream&, CheckpointMeta*);

}  // namespace polylink

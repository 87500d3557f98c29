#include "polylink/tape.hpp"

#include "polylink/errors.hpp"

#include <stdexcept>

namespace polylink {

namespace {

std::string shape_of(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

}  // namespace

template <typename Real>
typename Tape<Real>::Var Tape<Real>::push(Node node, const char* op_name) {
    const Mat& v = node.borrowed ? *node.borrowed : node.owned;
    if (!v.allFinite()) {
        throw NumericError((label_.empty() ? std::string() : label_ + ": ") + "non-finite output from " + op_name);
    }
    nodes_.push_back(std::move(node));
    return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

template <typename Real>
const typename Tape<Real>::Mat& Tape<Real>::val(std::uint32_t id) const {
    const Node& n = nodes_.at(id);
    return n.borrowed ? *n.borrowed : n.owned;
}

template <typename Real>
const typename Tape<Real>::Mat& Tape<Real>::value(Var v) const {
    return val(v.id);
}

template <typename Real>
const typename Tape<Real>::Mat& Tape<Real>::grad(Var v) const {
    const Node& n = nodes_.at(v.id);
    if (!n.keep_grad) throw std::logic_error("gradient is only retained for differentiable leaves");
    return n.grad;
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::constant(Mat value) {
    Node n;
    n.owned = std::move(value);
    return push(std::move(n), "constant");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::variable(Mat value) {
    Node n;
    n.owned = std::move(value);
    n.requires_grad = true;
    n.keep_grad = true;
    return push(std::move(n), "variable");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::parameter(ParamStore<Real>& store, const std::string& name) {
    auto& slot = store.at(name);
    Node n;
    n.op = Op::Param;
    n.borrowed = &slot.value;
    n.param_grad = &slot.grad;
    n.requires_grad = true;
    return push(std::move(n), name.c_str());
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::frozen(const ParamStore<Real>& store, const std::string& name) {
    Node n;
    n.borrowed = &store.at(name).value;
    return push(std::move(n), name.c_str());
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::matmul(Var a, Var b) {
    const Mat& x = val(a.id);
    const Mat& y = val(b.id);
    if (x.cols() != y.rows()) {
        throw std::invalid_argument("matmul: " + shape_of(x.rows(), x.cols()) + " times " +
                                    shape_of(y.rows(), y.cols()));
    }
    Node n;
    n.op = Op::MatMul;
    n.a = a.id;
    n.b = b.id;
    n.owned.noalias() = x * y;
    n.requires_grad = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return push(std::move(n), "matmul");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::add(Var a, Var b) {
    const Mat& x = val(a.id);
    const Mat& y = val(b.id);
    if (x.rows() != y.rows() || x.cols() != y.cols()) {
        throw std::invalid_argument("add: " + shape_of(x.rows(), x.cols()) + " plus " + shape_of(y.rows(), y.cols()));
    }
    Node n;
    n.op = Op::Add;
    n.a = a.id;
    n.b = b.id;
    n.owned = x + y;
    n.requires_grad = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return push(std::move(n), "add");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::hadamard(Var a, Var b) {
    const Mat& x = val(a.id);
    const Mat& y = val(b.id);
    if (x.rows() != y.rows() || x.cols() != y.cols()) throw std::invalid_argument("hadamard: shape mismatch");
    Node n;
    n.op = Op::Hadamard;
    n.a = a.id;
    n.b = b.id;
    n.owned = x.cwiseProduct(y);
    n.requires_grad = nodes_[a.id].requires_grad || nodes_[b.id].requires_grad;
    return push(std::move(n), "hadamard");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::mul_row(Var a, Var row) {
    const Mat& x = val(a.id);
    const Mat& r = val(row.id);
    if (r.rows() != 1 || r.cols() != x.cols()) throw std::invalid_argument("mul_row: row vector shape mismatch");
    Node n;
    n.op = Op::MulRow;
    n.a = a.id;
    n.b = row.id;
    n.owned = x.array().rowwise() * r.array().row(0);
    n.requires_grad = nodes_[a.id].requires_grad || nodes_[row.id].requires_grad;
    return push(std::move(n), "mul_row");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::scale(Var a, Real factor) {
    Node n;
    n.op = Op::Scale;
    n.a = a.id;
    n.scalar = factor;
    n.owned = factor * val(a.id);
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "scale");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::transpose(Var a) {
    Node n;
    n.op = Op::Transpose;
    n.a = a.id;
    n.owned = val(a.id).transpose();
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "transpose");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::relu(Var a) {
    Node n;
    n.op = Op::Relu;
    n.a = a.id;
    n.owned = val(a.id).cwiseMax(Real(0));
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "relu");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::sigmoid(Var a) {
    Node n;
    n.op = Op::Sigmoid;
    n.a = a.id;
    const Mat& x = val(a.id);
    n.owned.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const Real z = x.data()[i];
        // Split by sign so exp never overflows.
        n.owned.data()[i] = z >= 0 ? Real(1) / (Real(1) + std::exp(-z)) : std::exp(z) / (Real(1) + std::exp(z));
    }
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "sigmoid");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::log(Var a, Real floor, Real ceil) {
    Node n;
    n.op = Op::Log;
    n.a = a.id;
    n.scalar = floor;
    n.scalar2 = ceil;
    n.owned = val(a.id).cwiseMax(floor).cwiseMin(ceil).array().log().matrix();
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "log");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::gather_rows(Var a, std::vector<std::uint32_t> rows) {
    const Mat& x = val(a.id);
    Node n;
    n.op = Op::GatherRows;
    n.a = a.id;
    n.owned.resize(static_cast<Eigen::Index>(rows.size()), x.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) {
        if (rows[k] >= x.rows()) throw std::invalid_argument("gather_rows: row index out of range");
        n.owned.row(static_cast<Eigen::Index>(k)) = x.row(rows[k]);
    }
    n.rows = std::move(rows);
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "gather_rows");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::row_sum(Var a) {
    Node n;
    n.op = Op::RowSum;
    n.a = a.id;
    n.owned = val(a.id).rowwise().sum();
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "row_sum");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::reduce_sum(Var a) {
    Node n;
    n.op = Op::ReduceSum;
    n.a = a.id;
    n.owned = Mat::Constant(1, 1, val(a.id).sum());
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "reduce_sum");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::spmm(std::shared_ptr<const SparseAdjacency<Real>> adj, Var dense) {
    Node n;
    n.op = Op::SpMM;
    n.a = dense.id;
    n.owned = polylink::spmm(*adj, val(dense.id));
    n.adj = std::move(adj);
    n.requires_grad = nodes_[dense.id].requires_grad;
    return push(std::move(n), "spmm");
}

template <typename Real>
typename Tape<Real>::Var Tape<Real>::dropout(Var a, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    if (rate == 0.0) return a;
    const Mat& x = val(a.id);
    Node n;
    n.op = Op::Dropout;
    n.a = a.id;
    n.mask.resize(x.rows(), x.cols());
    std::bernoulli_distribution keep(1.0 - rate);
    const Real survivor = static_cast<Real>(1.0 / (1.0 - rate));
    for (Eigen::Index i = 0; i < n.mask.size(); ++i) n.mask.data()[i] = keep(rng) ? survivor : Real(0);
    n.owned = x.cwiseProduct(n.mask);
    n.requires_grad = nodes_[a.id].requires_grad;
    return push(std::move(n), "dropout");
}

template <typename Real>
void Tape<Real>::accumulate(std::uint32_t id, const Mat& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

template <typename Real>
template <typename Expr>
void Tape<Real>::accumulate_expr(std::uint32_t id, const Expr& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
        n.grad = g;
    } else {
        n.grad += g;
    }
}

template <typename Real>
void Tape<Real>::backward(Var loss) {
    Node& root = nodes_.at(loss.id);
    const Mat& lv = val(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1) {
        throw std::invalid_argument("backward: loss must be a scalar, got " + shape_of(lv.rows(), lv.cols()));
    }
    for (Node& n : nodes_) n.grad.resize(0, 0);
    if (!root.requires_grad) return;
    root.grad = Mat::Ones(1, 1);

    for (std::size_t k = nodes_.size(); k-- > 0;) {
        Node& n = nodes_[k];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        const Mat& g = n.grad;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Param:
                *n.param_grad += g;
                break;
            case Op::MatMul: {
                if (nodes_[n.a].requires_grad) accumulate_expr(n.a, g * val(n.b).transpose());
                if (nodes_[n.b].requires_grad) accumulate_expr(n.b, val(n.a).transpose() * g);
                break;
            }
            case Op::Add:
                accumulate(n.a, g);
                accumulate(n.b, g);
                break;
            case Op::Hadamard:
                if (nodes_[n.a].requires_grad) accumulate_expr(n.a, g.cwiseProduct(val(n.b)));
                if (nodes_[n.b].requires_grad) accumulate_expr(n.b, g.cwiseProduct(val(n.a)));
                break;
            case Op::MulRow: {
                const Mat& r = val(n.b);
                if (nodes_[n.a].requires_grad) {
                    accumulate_expr(n.a, (g.array().rowwise() * r.array().row(0)).matrix());
                }
                if (nodes_[n.b].requires_grad) accumulate_expr(n.b, g.cwiseProduct(val(n.a)).colwise().sum());
                break;
            }
            case Op::Scale:
                accumulate_expr(n.a, n.scalar * g);
                break;
            case Op::Transpose:
                accumulate_expr(n.a, g.transpose());
                break;
            case Op::Relu: {
                const Mat& x = val(n.a);
                accumulate_expr(n.a, (x.array() > Real(0)).select(g.array(), Real(0)).matrix());
                break;
            }
            case Op::Sigmoid: {
                const Mat& s = n.owned;
                accumulate_expr(n.a, (g.array() * s.array() * (Real(1) - s.array())).matrix());
                break;
            }
            case Op::Log: {
                const Mat& x = val(n.a);
                const auto inside = (x.array() >= n.scalar) && (x.array() <= n.scalar2);
                accumulate_expr(n.a, inside.select(g.array() / x.array(), Real(0)).matrix());
                break;
            }
            case Op::GatherRows: {
                Node& src = nodes_[n.a];
                if (src.grad.size() == 0) src.grad = Mat::Zero(val(n.a).rows(), val(n.a).cols());
                for (std::size_t r = 0; r < n.rows.size(); ++r) {
                    src.grad.row(n.rows[r]) += g.row(static_cast<Eigen::Index>(r));
                }
                break;
            }
            case Op::RowSum: {
                const Mat& x = val(n.a);
                accumulate_expr(n.a, g.replicate(1, x.cols()));
                break;
            }
            case Op::ReduceSum: {
                const Mat& x = val(n.a);
                accumulate_expr(n.a, Mat::Constant(x.rows(), x.cols(), g(0, 0)));
                break;
            }
            case Op::SpMM:
                accumulate(n.a, spmm_transposed(*n.adj, g));
                break;
            case Op::Dropout:
                accumulate_expr(n.a, g.cwiseProduct(n.mask));
                break;
        }
        if (!n.keep_grad) n.grad.resize(0, 0);
        // Intermediates are not needed once their gradient has been pushed.
        if (n.op != Op::Leaf && n.op != Op::Param && k != loss.id) {
            n.owned.resize(0, 0);
            n.mask.resize(0, 0);
        }
    }
}

template class Tape<float>;
template class Tape<double>;

}  // namespace polylink

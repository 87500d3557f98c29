#pragma once

#include "polylink/params.hpp"
#include "polylink/random.hpp"
#include "polylink/tensor.hpp"

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polylink {

// Reverse-mode differentiation over a closed set of 2-D primitives. Records
// are appended in evaluation order, so the record list is already
// topologically sorted; backward() visits it once in reverse.
template <typename Real>
class Tape {
public:
    using Mat = Matrix<Real>;

    struct Var {
        std::uint32_t id = UINT32_MAX;
    };

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaves.
    Var constant(Mat value);
    Var variable(Mat value);  // differentiable leaf; read its gradient with grad()
    // Borrows the parameter's value; backward() accumulates into its grad.
    Var parameter(ParamStore<Real>& store, const std::string& name);
    // Borrowed, non-differentiable view of a parameter (inference).
    Var frozen(const ParamStore<Real>& store, const std::string& name);

    // Primitives.
    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var mul_row(Var a, Var row);  // a .* row broadcast down the rows; row is 1 x cols
    Var scale(Var a, Real factor);
    Var transpose(Var a);
    Var relu(Var a);
    Var sigmoid(Var a);
    Var log(Var a, Real floor = Real(1e-12), Real ceil = Real(1) - Real(1e-12));  // log of the clamped input
    Var gather_rows(Var a, std::vector<std::uint32_t> rows);
    Var row_sum(Var a);     // n x 1
    Var reduce_sum(Var a);  // 1 x 1
    Var spmm(std::shared_ptr<const SparseAdjacency<Real>> adj, Var dense);
    Var dropout(Var a, double rate, Rng& rng);

    const Mat& value(Var v) const;
    // Gradient of the last backward() loss with respect to a differentiable
    // leaf. Intermediate gradients are released after backward().
    const Mat& grad(Var v) const;
    bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
    std::size_t size() const { return nodes_.size(); }

    void backward(Var loss);

    // Prefix for numeric error messages raised while it is alive.
    class Label {
    public:
        Label(Tape& tape, std::string text) : tape_(tape), saved_(std::move(tape.label_)) {
            tape_.label_ = std::move(text);
        }
        ~Label() { tape_.label_ = std::move(saved_); }
        Label(const Label&) = delete;
        Label& operator=(const Label&) = delete;

    private:
        Tape& tape_;
        std::string saved_;
    };

private:
    enum class Op : std::uint8_t {
        Leaf,
        Param,
        MatMul,
        Add,
        Hadamard,
        MulRow,
        Scale,
        Transpose,
        Relu,
        Sigmoid,
        Log,
        GatherRows,
        RowSum,
        ReduceSum,
        SpMM,
        Dropout,
    };

    struct Node {
        Op op = Op::Leaf;
        std::uint32_t a = UINT32_MAX;
        std::uint32_t b = UINT32_MAX;
        bool requires_grad = false;
        bool keep_grad = false;
        Real scalar = Real(0);
        Real scalar2 = Real(0);
        Mat owned;
        const Mat* borrowed = nullptr;
        Mat grad;
        Mat* param_grad = nullptr;
        std::vector<std::uint32_t> rows;
        std::shared_ptr<const SparseAdjacency<Real>> adj;
        Mat mask;
    };

    Var push(Node node, const char* op_name);
    const Mat& val(std::uint32_t id) const;
    void accumulate(std::uint32_t id, const Mat& g);
    template <typename Expr>
    void accumulate_expr(std::uint32_t id, const Expr& g);

    std::vector<Node> nodes_;
    std::string label_;
};

}  // namespace polylink

#pragma once

#include "polylink/graph.hpp"
#include "polylink/params.hpp"
#include "polylink/tape.hpp"
#include "polylink/tensor.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace polylink {

struct LayerSpec {
    std::vector<std::size_t> hidden_dims{64, 32};  // d^(1) .. d^(K)
    bool activate_last = true;
};

// Final-layer embeddings, one row per node of each kind. Always float64 so
// that scoring and evaluation share one code path regardless of training
// precision.
struct NodeEmbeddings {
    Matrix<double> drug;
    Matrix<double> protein;

    const Matrix<double>& of(NodeKind kind) const { return kind == NodeKind::Drug ? drug : protein; }
    std::size_t dim() const { return static_cast<std::size_t>(drug.cols() > 0 ? drug.cols() : protein.cols()); }
};

// c_r^ij = 1/sqrt(|N_r^i| |N_r^j|) for every edge; rows are the relation's
// head-kind nodes, columns its tail-kind nodes.
template <typename Real>
SparseAdjacency<Real> normalization_constants(const MultimodalGraph& graph, RelationId relation);

// Layer-0 inputs. Binary graph features by default, identity when a kind has
// none; tests may substitute real-valued features.
template <typename Real>
struct EncoderInputs {
    std::shared_ptr<const SparseAdjacency<Real>> drug;
    std::shared_ptr<const SparseAdjacency<Real>> protein;

    static EncoderInputs from_graph(const MultimodalGraph& graph);
    const SparseAdjacency<Real>& of(NodeKind kind) const { return kind == NodeKind::Drug ? *drug : *protein; }
};

// A per-relation aggregation into nodes of one kind. The drug-target relation
// yields two channels ("targets" into proteins, "targeted-by" into drugs).
template <typename Real>
struct Channel {
    std::string name;
    RelationId relation;
    NodeKind target_kind;
    NodeKind source_kind;
    std::shared_ptr<const SparseAdjacency<Real>> coefficients;  // rows: target nodes, cols: source nodes
};

// Relation-aware graph convolution:
//   h_i^(k+1) = phi( sum_r sum_{j in N_r^i} c_r^ij W_r^(k) h_j^(k) + W_self^(k,kind(i)) h_i^(k) )
template <typename Real>
class GraphEncoder {
public:
    using Var = typename Tape<Real>::Var;
    using ParamGetter = std::function<Var(const std::string&)>;

    struct Output {
        Var drug;
        Var protein;
    };

    GraphEncoder(const MultimodalGraph& graph, LayerSpec spec);
    GraphEncoder(const MultimodalGraph& graph, LayerSpec spec, EncoderInputs<Real> inputs);

    void init_params(ParamStore<Real>& store, Rng& rng) const;
    // Throws std::invalid_argument naming the first missing or mis-shaped weight.
    void validate(const ParamStore<Real>& store) const;

    Output encode(Tape<Real>& tape, const ParamGetter& param, double dropout_rate, bool training, Rng& rng) const;
    NodeEmbeddings embed(const ParamStore<Real>& store) const;

    const std::vector<Channel<Real>>& channels() const { return channels_; }
    const LayerSpec& spec() const { return spec_; }
    std::size_t output_dim() const { return spec_.hidden_dims.back(); }
    std::size_t input_dim(NodeKind kind) const { return inputs_.of(kind).cols; }

    static std::string weight_name(std::size_t layer, const std::string& channel);
    static std::string self_name(std::size_t layer, NodeKind kind);

private:
    std::size_t layer_input_dim(std::size_t layer, NodeKind kind) const;

    LayerSpec spec_;
    EncoderInputs<Real> inputs_;
    std::size_t n_drugs_;
    std::size_t n_proteins_;
    std::vector<Channel<Real>> channels_;
};

}  // namespace polylink

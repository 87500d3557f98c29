#pragma once

#include "polylink/encoder.hpp"
#include "polylink/graph.hpp"
#include "polylink/params.hpp"
#include "polylink/tape.hpp"

#include <Eigen/Core>

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace polylink {

struct EdgeScore {
    double raw;
    double prob;
};

// Numerically stable logistic function.
double sigmoid(double x);

// Plain float64 copy of the decoder parameters for scoring outside a tape.
struct DecoderParams {
    Eigen::MatrixXd R;                 // global drug-drug core, symmetrized at use
    std::vector<Eigen::VectorXd> D;    // diagonal per relation; empty for non side-effect relations
    Eigen::MatrixXd M_ppi;             // symmetrized at use
    Eigen::MatrixXd M_dt;              // drug -> protein orientation

    std::size_t dim() const { return static_cast<std::size_t>(R.rows()); }
};

struct Endpoint {
    NodeKind kind;
    std::span<const double> z;
};

// g(i, r, j) per relation family:
//   side effect:      z_i^T D_r R_sym D_r z_j
//   protein-protein:  z_i^T M_sym z_j
//   drug-target:      z_drug^T M z_protein
// with X_sym = (X + X^T)/2, and prob = sigmoid(g).
EdgeScore score(const Endpoint& i, const Endpoint& j, const MultimodalGraph& graph, RelationId relation,
                const DecoderParams& params);

// The d x d matrix K with g = z_i^T K z_j for a relation (drug-target in drug
// -> protein orientation).
Eigen::MatrixXd bilinear_core(const DecoderParams& params, const MultimodalGraph& graph, RelationId relation);

struct Prediction {
    std::size_t rank;  // 1-based
    RelationId relation;
    std::uint32_t i;
    std::uint32_t j;
    double prob;
};

using ExcludePredicate = std::function<bool(RelationId, Edge)>;

// Top-k canonical pairs over the given relations, excluding pairs for which
// `exclude` holds. Sorted by probability descending; ties by (relation, i, j)
// ascending.
std::vector<Prediction> score_all_pairs(const NodeEmbeddings& embeddings, const MultimodalGraph& graph,
                                        std::span<const RelationId> relations, const DecoderParams& params,
                                        const ExcludePredicate& exclude, std::size_t k);

// Tape-side decoder used during training. Parameter names: dec.R, dec.D.r<id>,
// dec.M.ppi, dec.M.dt.
template <typename Real>
class EdgeDecoder {
public:
    using Var = typename Tape<Real>::Var;
    using ParamGetter = std::function<Var(const std::string&)>;

    EdgeDecoder(const MultimodalGraph& graph, std::size_t dim);

    void init_params(ParamStore<Real>& store, Rng& rng) const;
    // Raw scores (n x 1) for a batch of edges of one relation.
    Var raw_scores(Tape<Real>& tape, const ParamGetter& param, Var z_drug, Var z_protein, RelationId relation,
                   std::span<const Edge> edges) const;
    DecoderParams extract(const ParamStore<Real>& store) const;

    std::size_t dim() const { return dim_; }

    static std::string diagonal_name(RelationId relation);

private:
    const MultimodalGraph* graph_;
    std::size_t dim_;
};

}  // namespace polylink

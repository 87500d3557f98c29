#include "polylink/model.hpp"

#include <algorithm>
#include <memory>
#include <queue>
#include <stdexcept>

namespace polylink {

EdgeScorer make_scorer(const MultimodalGraph& graph, NodeEmbeddings embeddings, DecoderParams params) {
    struct State {
        NodeEmbeddings z;
        DecoderParams p;
    };
    auto state = std::make_shared<const State>(State{std::move(embeddings), std::move(params)});
    const MultimodalGraph* g = &graph;
    return [state, g](RelationId relation, std::span<const Edge> edges) {
        const Relation& rel = g->relation(relation);
        const Eigen::MatrixXd core = bilinear_core(state->p, *g, relation);
        const Matrix<double>& zh = state->z.of(rel.head_kind);
        const Matrix<double>& zt = state->z.of(rel.tail_kind);
        std::vector<double> out;
        out.reserve(edges.size());
        for (const Edge& e : edges) {
            const double raw = zh.row(e.head).dot(core * zt.row(e.tail).transpose());
            out.push_back(sigmoid(raw));
        }
        return out;
    };
}

std::vector<Prediction> top_k_pairs(const MultimodalGraph& graph, std::span<const RelationId> relations,
                                    const EdgeScorer& scorer, const ExcludePredicate& exclude, std::size_t k) {
    if (k == 0) throw std::invalid_argument("top_k_pairs: k must be >= 1");
    auto better = [](const Prediction& a, const Prediction& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        if (a.relation != b.relation) return a.relation < b.relation;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    };
    std::priority_queue<Prediction, std::vector<Prediction>, decltype(better)> heap(better);
    std::vector<Edge> row;
    for (RelationId r : relations) {
        const Relation& rel = graph.relation(r);
        const auto n_head = static_cast<std::uint32_t>(graph.node_count(rel.head_kind));
        const auto n_tail = static_cast<std::uint32_t>(graph.node_count(rel.tail_kind));
        const bool same_kind = rel.head_kind == rel.tail_kind;
        for (std::uint32_t i = 0; i < n_head; ++i) {
            row.clear();
            for (std::uint32_t j = same_kind ? i + 1 : 0; j < n_tail; ++j) {
                if (!exclude || !exclude(r, Edge{i, j})) row.push_back({i, j});
            }
            if (row.empty()) continue;
            const auto probs = scorer(r, row);
            for (std::size_t n = 0; n < row.size(); ++n) {
                Prediction p{0, r, row[n].head, row[n].tail, probs[n]};
                if (heap.size() < k) {
                    heap.push(p);
                } else if (better(p, heap.top())) {
                    heap.pop();
                    heap.push(p);
                }
            }
        }
    }
    std::vector<Prediction> out;
    while (!heap.empty()) {
        out.push_back(heap.top());
        heap.pop();
    }
    std::sort(out.begin(), out.end(), better);
    for (std::size_t n = 0; n < out.size(); ++n) out[n].rank = n + 1;
    return out;
}

namespace {

template <typename Real>
class EncoderDecoderPass final : public ScoringPass<Real> {
public:
    using Var = typename Tape<Real>::Var;

    EncoderDecoderPass(Tape<Real>& tape, const EdgeDecoder<Real>& decoder,
                       typename EdgeDecoder<Real>::ParamGetter param, typename GraphEncoder<Real>::Output z)
        : tape_(tape), decoder_(decoder), param_(std::move(param)), z_(z) {}

    Var raw_scores(RelationId relation, std::span<const Edge> edges) override {
        return decoder_.raw_scores(tape_, param_, z_.drug, z_.protein, relation, edges);
    }

private:
    Tape<Real>& tape_;
    const EdgeDecoder<Real>& decoder_;
    typename EdgeDecoder<Real>::ParamGetter param_;
    typename GraphEncoder<Real>::Output z_;
};

}  // namespace

template <typename Real>
EncoderDecoderModel<Real>::EncoderDecoderModel(const MultimodalGraph& train_graph, LayerSpec spec, std::uint64_t seed)
    : graph_(&train_graph), encoder_(train_graph, spec), decoder_(train_graph, spec.hidden_dims.back()) {
    Rng rng(derive_seed(seed, 0x1417));
    encoder_.init_params(params_, rng);
    decoder_.init_params(params_, rng);
}

template <typename Real>
EncoderDecoderModel<Real>::EncoderDecoderModel(const MultimodalGraph& train_graph, LayerSpec spec,
                                               ParamStore<Real> params)
    : graph_(&train_graph),
      encoder_(train_graph, spec),
      decoder_(train_graph, spec.hidden_dims.back()),
      params_(std::move(params)) {
    encoder_.validate(params_);
    decoder_.extract(params_);
}

template <typename Real>
std::vector<RelationId> EncoderDecoderModel<Real>::relations() const {
    std::vector<RelationId> out;
    for (RelationId r = 0; r < graph_->relations().size(); ++r) {
        if (!graph_->relation(r).edges.empty()) out.push_back(r);
    }
    return out;
}

template <typename Real>
std::unique_ptr<ScoringPass<Real>> EncoderDecoderModel<Real>::forward(Tape<Real>& tape, bool training,
                                                                      double dropout_rate, Rng& rng,
                                                                      bool differentiable) {
    typename GraphEncoder<Real>::ParamGetter param;
    if (differentiable) {
        param = [this, &tape](const std::string& name) { return tape.parameter(params_, name); };
    } else {
        param = [this, &tape](const std::string& name) { return tape.frozen(params_, name); };
    }
    auto z = encoder_.encode(tape, param, dropout_rate, training, rng);
    return std::make_unique<EncoderDecoderPass<Real>>(tape, decoder_, param, z);
}

template <typename Real>
EdgeScorer EncoderDecoderModel<Real>::scorer() const {
    return make_scorer(*graph_, embeddings(), decoder_params());
}

template class EncoderDecoderModel<float>;
template class EncoderDecoderModel<double>;

}  // namespace polylink

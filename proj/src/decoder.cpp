#include "polylink/decoder.hpp"

#include "polylink/init.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <stdexcept>

namespace polylink {

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::MatrixXd bilinear_core(const DecoderParams& params, const MultimodalGraph& graph, RelationId relation) {
    const Relation& rel = graph.relation(relation);
    switch (rel.ref.family) {
        case RelationFamily::ProteinProtein:
            return 0.5 * (params.M_ppi + params.M_ppi.transpose());
        case RelationFamily::DrugTarget:
            return params.M_dt;
        case RelationFamily::SideEffect: {
            if (relation >= params.D.size() || params.D[relation].size() == 0) {
                throw std::invalid_argument("no diagonal factor for relation " + rel.id());
            }
            const Eigen::VectorXd& d = params.D[relation];
            const Eigen::MatrixXd r_sym = 0.5 * (params.R + params.R.transpose());
            // Entry (a, b) as r_sym(a, b) * (d_a * d_b) so the core stays exactly symmetric.
            return r_sym.cwiseProduct(d * d.transpose());
        }
    }
    return {};
}

EdgeScore score(const Endpoint& i, const Endpoint& j, const MultimodalGraph& graph, RelationId relation,
                const DecoderParams& params) {
    const Relation& rel = graph.relation(relation);
    const Endpoint* head = &i;
    const Endpoint* tail = &j;
    if (rel.head_kind != rel.tail_kind && i.kind == rel.tail_kind && j.kind == rel.head_kind) std::swap(head, tail);
    if (head->kind != rel.head_kind || tail->kind != rel.tail_kind) {
        throw std::invalid_argument("relation " + rel.id() + " cannot connect a " + std::string(to_string(i.kind)) +
                                    " and a " + std::string(to_string(j.kind)));
    }
    const std::size_t d = params.dim();
    if (head->z.size() != d || tail->z.size() != d) throw std::invalid_argument("embedding length does not match decoder");
    const Eigen::Map<const Eigen::VectorXd> zi(head->z.data(), static_cast<Eigen::Index>(d));
    const Eigen::Map<const Eigen::VectorXd> zj(tail->z.data(), static_cast<Eigen::Index>(d));
    const Eigen::MatrixXd core = bilinear_core(params, graph, relation);
    if (rel.head_kind != rel.tail_kind) {
        const double g = zi.dot(core * zj);
        return {g, sigmoid(g)};
    }
    // Sum over unordered index pairs: swapping the endpoints leaves every term bit-identical.
    double g = 0.0;
    for (std::size_t a = 0; a < d; ++a) {
        g += core(a, a) * (zi[a] * zj[a]);
        for (std::size_t b = a + 1; b < d; ++b) g += core(a, b) * (zi[a] * zj[b] + zi[b] * zj[a]);
    }
    return {g, sigmoid(g)};
}

std::vector<Prediction> score_all_pairs(const NodeEmbeddings& embeddings, const MultimodalGraph& graph,
                                        std::span<const RelationId> relations, const DecoderParams& params,
                                        const ExcludePredicate& exclude, std::size_t k) {
    if (k == 0) throw std::invalid_argument("score_all_pairs: k must be >= 1");
    auto better = [](const Prediction& a, const Prediction& b) {
        if (a.prob != b.prob) return a.prob > b.prob;
        if (a.relation != b.relation) return a.relation < b.relation;
        if (a.i != b.i) return a.i < b.i;
        return a.j < b.j;
    };
    std::priority_queue<Prediction, std::vector<Prediction>, decltype(better)> heap(better);
    constexpr Eigen::Index kBlock = 256;

    for (RelationId r : relations) {
        const Relation& rel = graph.relation(r);
        const Matrix<double>& zh = embeddings.of(rel.head_kind);
        const Matrix<double>& zt = embeddings.of(rel.tail_kind);
        const bool same_kind = rel.head_kind == rel.tail_kind;
        const Eigen::MatrixXd core = bilinear_core(params, graph, r);
        const Eigen::MatrixXd projected = zt * core.transpose();  // row j: (K z_j)^T
        for (Eigen::Index start = 0; start < zh.rows(); start += kBlock) {
            const Eigen::Index len = std::min(kBlock, zh.rows() - start);
            const Eigen::MatrixXd block = zh.middleRows(start, len) * projected.transpose();
            for (Eigen::Index bi = 0; bi < len; ++bi) {
                const auto i = static_cast<std::uint32_t>(start + bi);
                for (auto j = same_kind ? i + 1 : 0u; j < static_cast<std::uint32_t>(zt.rows()); ++j) {
                    if (exclude && exclude(r, Edge{i, j})) continue;
                    Prediction p{0, r, i, j, sigmoid(block(bi, j))};
                    if (heap.size() < k) {
                        heap.push(p);
                    } else if (better(p, heap.top())) {
                        heap.pop();
                        heap.push(p);
                    }
                }
            }
        }
    }
    std::vector<Prediction> out;
    out.reserve(heap.size());
    while (!heap.empty()) {
        out.push_back(heap.top());
        heap.pop();
    }
    std::sort(out.begin(), out.end(), better);
    for (std::size_t n = 0; n < out.size(); ++n) out[n].rank = n + 1;
    return out;
}

template <typename Real>
EdgeDecoder<Real>::EdgeDecoder(const MultimodalGraph& graph, std::size_t dim) : graph_(&graph), dim_(dim) {
    if (dim == 0) throw std::invalid_argument("decoder dimension must be >= 1");
}

template <typename Real>
std::string EdgeDecoder<Real>::diagonal_name(RelationId relation) {
    return "dec.D.r" + std::to_string(relation);
}

template <typename Real>
void EdgeDecoder<Real>::init_params(ParamStore<Real>& store, Rng& rng) const {
    store.add("dec.R", glorot_init<Real>(dim_, dim_, rng));
    store.add("dec.M.ppi", glorot_init<Real>(dim_, dim_, rng));
    store.add("dec.M.dt", glorot_init<Real>(dim_, dim_, rng));
    for (RelationId r : graph_->side_effect_relations()) {
        store.add(diagonal_name(r), glorot_uniform<Real>(1, dim_, dim_, dim_, rng));
    }
}

template <typename Real>
typename EdgeDecoder<Real>::Var EdgeDecoder<Real>::raw_scores(Tape<Real>& tape, const ParamGetter& param, Var z_drug,
                                                              Var z_protein, RelationId relation,
                                                              std::span<const Edge> edges) const {
    const Relation& rel = graph_->relation(relation);
    std::vector<std::uint32_t> heads;
    std::vector<std::uint32_t> tails;
    heads.reserve(edges.size());
    tails.reserve(edges.size());
    for (const Edge& e : edges) {
        heads.push_back(e.head);
        tails.push_back(e.tail);
    }
    auto z_of = [&](NodeKind kind) { return kind == NodeKind::Drug ? z_drug : z_protein; };
    Var zi = tape.gather_rows(z_of(rel.head_kind), std::move(heads));
    Var zj = tape.gather_rows(z_of(rel.tail_kind), std::move(tails));
    auto symmetrized = [&](Var m) { return tape.scale(tape.add(m, tape.transpose(m)), Real(0.5)); };

    Var left;
    switch (rel.ref.family) {
        case RelationFamily::ProteinProtein:
            left = tape.matmul(zi, symmetrized(param("dec.M.ppi")));
            break;
        case RelationFamily::DrugTarget:
            left = tape.matmul(zi, param("dec.M.dt"));
            break;
        case RelationFamily::SideEffect: {
            Var d = param(diagonal_name(relation));
            left = tape.matmul(tape.mul_row(zi, d), symmetrized(param("dec.R")));
            zj = tape.mul_row(zj, d);
            break;
        }
    }
    return tape.row_sum(tape.hadamard(left, zj));
}

template <typename Real>
DecoderParams EdgeDecoder<Real>::extract(const ParamStore<Real>& store) const {
    DecoderParams p;
    p.R = store.at("dec.R").value.template cast<double>();
    p.M_ppi = store.at("dec.M.ppi").value.template cast<double>();
    p.M_dt = store.at("dec.M.dt").value.template cast<double>();
    p.D.resize(graph_->relations().size());
    for (RelationId r : graph_->side_effect_relations()) {
        p.D[r] = store.at(diagonal_name(r)).value.row(0).transpose().template cast<double>();
    }
    return p;
}

template class EdgeDecoder<float>;
template class EdgeDecoder<double>;

}  // namespace polylink

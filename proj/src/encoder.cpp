#include "polylink/encoder.hpp"

#include "polylink/init.hpp"

#include <cmath>
#include <stdexcept>

namespace polylink {

template <typename Real>
SparseAdjacency<Real> normalization_constants(const MultimodalGraph& graph, RelationId relation) {
    const Relation& rel = graph.relation(relation);
    const NeighborLists& rows = rel.head_adjacency;
    const NeighborLists& cols = rel.tail_adjacency;
    SparseAdjacency<Real> out;
    out.rows = rows.rows();
    out.cols = cols.rows();
    out.offsets.assign(out.rows + 1, 0);
    out.columns.reserve(rows.entry_count());
    out.coefficients.reserve(rows.entry_count());
    for (std::size_t i = 0; i < out.rows; ++i) {
        const double di = static_cast<double>(rows.degree(i));
        for (std::uint32_t j : rows.row(i)) {
            const double dj = static_cast<double>(cols.degree(j));
            out.columns.push_back(j);
            out.coefficients.push_back(static_cast<Real>(1.0 / std::sqrt(di * dj)));
        }
        out.offsets[i + 1] = out.columns.size();
    }
    return out;
}

namespace {

template <typename Real>
std::shared_ptr<const SparseAdjacency<Real>> features_to_sparse(const BinaryFeatures& f) {
    if (f.identity) return std::make_shared<SparseAdjacency<Real>>(SparseAdjacency<Real>::identity(f.rows));
    auto out = std::make_shared<SparseAdjacency<Real>>();
    out->rows = f.rows;
    out->cols = f.cols;
    out->offsets.assign(f.rows + 1, 0);
    for (std::size_t i = 0; i < f.rows; ++i) {
        for (std::uint32_t c : f.active.row(i)) {
            out->columns.push_back(c);
            out->coefficients.push_back(Real(1));
        }
        out->offsets[i + 1] = out->columns.size();
    }
    return out;
}

}  // namespace

template <typename Real>
EncoderInputs<Real> EncoderInputs<Real>::from_graph(const MultimodalGraph& graph) {
    return {features_to_sparse<Real>(graph.features(NodeKind::Drug)),
            features_to_sparse<Real>(graph.features(NodeKind::Protein))};
}

template <typename Real>
GraphEncoder<Real>::GraphEncoder(const MultimodalGraph& graph, LayerSpec spec)
    : GraphEncoder(graph, std::move(spec), EncoderInputs<Real>::from_graph(graph)) {}

template <typename Real>
GraphEncoder<Real>::GraphEncoder(const MultimodalGraph& graph, LayerSpec spec, EncoderInputs<Real> inputs)
    : spec_(std::move(spec)),
      inputs_(std::move(inputs)),
      n_drugs_(graph.node_count(NodeKind::Drug)),
      n_proteins_(graph.node_count(NodeKind::Protein)) {
    if (spec_.hidden_dims.empty()) throw std::invalid_argument("encoder needs at least one layer");
    for (std::size_t d : spec_.hidden_dims) {
        if (d == 0) throw std::invalid_argument("encoder layer widths must be >= 1");
    }
    if (!inputs_.drug || !inputs_.protein || inputs_.drug->rows != n_drugs_ || inputs_.protein->rows != n_proteins_) {
        throw std::invalid_argument("encoder inputs must have one row per node");
    }
    for (RelationId r = 0; r < graph.relations().size(); ++r) {
        const Relation& rel = graph.relation(r);
        if (rel.edges.empty()) continue;
        auto coeff = std::make_shared<const SparseAdjacency<Real>>(normalization_constants<Real>(graph, r));
        if (rel.head_kind == rel.tail_kind) {
            channels_.push_back({"r" + std::to_string(r), r, rel.head_kind, rel.head_kind, coeff});
        } else {
            auto reverse = std::make_shared<const SparseAdjacency<Real>>(coeff->transposed());
            channels_.push_back({"r" + std::to_string(r) + ".targets", r, rel.tail_kind, rel.head_kind, reverse});
            channels_.push_back({"r" + std::to_string(r) + ".targeted-by", r, rel.head_kind, rel.tail_kind, coeff});
        }
    }
}

template <typename Real>
std::string GraphEncoder<Real>::weight_name(std::size_t layer, const std::string& channel) {
    return "enc.L" + std::to_string(layer) + "." + channel;
}

template <typename Real>
std::string GraphEncoder<Real>::self_name(std::size_t layer, NodeKind kind) {
    return "enc.L" + std::to_string(layer) + ".self." + std::string(to_string(kind));
}

template <typename Real>
std::size_t GraphEncoder<Real>::layer_input_dim(std::size_t layer, NodeKind kind) const {
    return layer == 0 ? inputs_.of(kind).cols : spec_.hidden_dims[layer - 1];
}

template <typename Real>
void GraphEncoder<Real>::init_params(ParamStore<Real>& store, Rng& rng) const {
    for (std::size_t k = 0; k < spec_.hidden_dims.size(); ++k) {
        const std::size_t out = spec_.hidden_dims[k];
        for (NodeKind kind : {NodeKind::Drug, NodeKind::Protein}) {
            const std::size_t in = layer_input_dim(k, kind);
            store.add(self_name(k, kind), glorot_init<Real>(std::max<std::size_t>(in, 1), out, rng)
                                              .topRows(static_cast<Eigen::Index>(in)));
        }
        for (const auto& ch : channels_) {
            const std::size_t in = layer_input_dim(k, ch.source_kind);
            store.add(weight_name(k, ch.name), glorot_init<Real>(std::max<std::size_t>(in, 1), out, rng)
                                                   .topRows(static_cast<Eigen::Index>(in)));
        }
    }
}

template <typename Real>
void GraphEncoder<Real>::validate(const ParamStore<Real>& store) const {
    auto check = [&](const std::string& name, std::size_t rows, std::size_t cols) {
        if (!store.contains(name)) throw std::invalid_argument("encoder parameter missing: " + name);
        const auto& v = store.at(name).value;
        if (static_cast<std::size_t>(v.rows()) != rows || static_cast<std::size_t>(v.cols()) != cols) {
            throw std::invalid_argument("encoder parameter " + name + " has shape " + std::to_string(v.rows()) + "x" +
                                        std::to_string(v.cols()) + ", expected " + std::to_string(rows) + "x" +
                                        std::to_string(cols));
        }
    };
    for (std::size_t k = 0; k < spec_.hidden_dims.size(); ++k) {
        const std::size_t out = spec_.hidden_dims[k];
        for (NodeKind kind : {NodeKind::Drug, NodeKind::Protein}) check(self_name(k, kind), layer_input_dim(k, kind), out);
        for (const auto& ch : channels_) check(weight_name(k, ch.name), layer_input_dim(k, ch.source_kind), out);
    }
}

template <typename Real>
typename GraphEncoder<Real>::Output GraphEncoder<Real>::encode(Tape<Real>& tape, const ParamGetter& param,
                                                               double dropout_rate, bool training, Rng& rng) const {
    if (dropout_rate < 0.0 || dropout_rate >= 1.0) throw std::invalid_argument("dropout rate must lie in [0, 1)");
    const double rate = training ? dropout_rate : 0.0;

    // Layer-0 inputs stay sparse; later layers are dense tape values.
    std::shared_ptr<const SparseAdjacency<Real>> sparse_in[2];
    Var hidden[2];
    auto slot = [](NodeKind kind) { return kind == NodeKind::Drug ? 0 : 1; };

    for (NodeKind kind : {NodeKind::Drug, NodeKind::Protein}) {
        const auto& x = inputs_.of(kind);
        sparse_in[slot(kind)] = rate > 0.0 ? std::make_shared<const SparseAdjacency<Real>>(dropout_entries(x, rate, rng))
                                           : (kind == NodeKind::Drug ? inputs_.drug : inputs_.protein);
    }

    for (std::size_t k = 0; k < spec_.hidden_dims.size(); ++k) {
        const bool activate = k + 1 < spec_.hidden_dims.size() || spec_.activate_last;
        Var layer_in[2];
        if (k > 0) {
            for (int s = 0; s < 2; ++s) layer_in[s] = rate > 0.0 ? tape.dropout(hidden[s], rate, rng) : hidden[s];
        }
        auto transform = [&](NodeKind source, const std::string& weight) {
            Var w = param(weight);
            return k == 0 ? tape.spmm(sparse_in[slot(source)], w) : tape.matmul(layer_in[slot(source)], w);
        };

        Var acc[2];
        for (NodeKind kind : {NodeKind::Drug, NodeKind::Protein}) {
            typename Tape<Real>::Label label(tape, "encoder layer " + std::to_string(k) + ", self term (" +
                                                       std::string(to_string(kind)) + ")");
            acc[slot(kind)] = transform(kind, self_name(k, kind));
        }
        for (const auto& ch : channels_) {
            typename Tape<Real>::Label label(tape, "encoder layer " + std::to_string(k) + ", relation " + ch.name);
            Var message = tape.spmm(ch.coefficients, transform(ch.source_kind, weight_name(k, ch.name)));
            acc[slot(ch.target_kind)] = tape.add(acc[slot(ch.target_kind)], message);
        }
        for (int s = 0; s < 2; ++s) hidden[s] = activate ? tape.relu(acc[s]) : acc[s];
    }
    return {hidden[0], hidden[1]};
}

template <typename Real>
NodeEmbeddings GraphEncoder<Real>::embed(const ParamStore<Real>& store) const {
    validate(store);
    Tape<Real> tape;
    Rng unused(0);
    auto out = encode(
        tape, [&](const std::string& name) { return tape.frozen(store, name); }, 0.0, false, unused);
    return {tape.value(out.drug).template cast<double>(), tape.value(out.protein).template cast<double>()};
}

template SparseAdjacency<float> normalization_constants(const MultimodalGraph&, RelationId);
template SparseAdjacency<double> normalization_constants(const MultimodalGraph&, RelationId);
template struct EncoderInputs<float>;
template struct EncoderInputs<double>;
template class GraphEncoder<float>;
template class GraphEncoder<double>;

}  // namespace polylink

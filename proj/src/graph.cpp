#include "polylink/graph.hpp"

#include "polylink/errors.hpp"
#include "polylink/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <stdexcept>
#include <utility>

namespace polylink {

std::string_view to_string(NodeKind kind) {
    return kind == NodeKind::Drug ? "drug" : "protein";
}

NeighborLists::NeighborLists(std::size_t rows,
                             std::span<const std::pair<std::uint32_t, std::uint32_t>> entries)
    : offsets_(rows + 1, 0) {
    for (const auto& [row, col] : entries) {
        if (row >= rows) throw std::invalid_argument("neighbor list row out of range");
        ++offsets_[row + 1];
    }
    for (std::size_t i = 0; i < rows; ++i) offsets_[i + 1] += offsets_[i];
    neighbors_.resize(entries.size());
    std::vector<std::size_t> cursor(offsets_.begin(), offsets_.end() - 1);
    for (const auto& [row, col] : entries) neighbors_[cursor[row]++] = col;
    std::vector<std::size_t> compact(rows + 1, 0);
    std::size_t write = 0;
    for (std::size_t i = 0; i < rows; ++i) {
        auto first = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]);
        auto last = neighbors_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]);
        std::sort(first, last);
        last = std::unique(first, last);
        for (auto it = first; it != last; ++it) neighbors_[write++] = *it;
        compact[i + 1] = write;
    }
    neighbors_.resize(write);
    offsets_ = std::move(compact);
}

bool NeighborLists::contains(std::size_t row, std::uint32_t column) const {
    auto r = this->row(row);
    return std::binary_search(r.begin(), r.end(), column);
}

std::string Relation::id() const {
    switch (ref.family) {
        case RelationFamily::ProteinProtein: return "protein-protein";
        case RelationFamily::DrugTarget: return "drug-target";
        case RelationFamily::SideEffect: return *ref.side_effect_id;
    }
    return {};
}

namespace {

Relation make_relation(RelationRef ref, std::string name, NodeKind head, NodeKind tail,
                       std::vector<Edge> edges, std::size_t head_count, std::size_t tail_count) {
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    Relation rel{std::move(ref), std::move(name), head, tail, std::move(edges), {}, {}};
    std::vector<std::pair<std::uint32_t, std::uint32_t>> forward;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> backward;
    forward.reserve(rel.edges.size() * 2);
    backward.reserve(rel.edges.size());
    for (const Edge& e : rel.edges) {
        forward.emplace_back(e.head, e.tail);
        if (head == tail) {
            forward.emplace_back(e.tail, e.head);
        } else {
            backward.emplace_back(e.tail, e.head);
        }
    }
    rel.head_adjacency = NeighborLists(head_count, forward);
    rel.tail_adjacency = head == tail ? rel.head_adjacency : NeighborLists(tail_count, backward);
    return rel;
}

}  // namespace

MultimodalGraph::MultimodalGraph(std::vector<std::string> drug_ids, std::vector<std::string> protein_ids,
                                 std::vector<Relation> relations, BinaryFeatures drug_features,
                                 BinaryFeatures protein_features)
    : drug_ids_(std::move(drug_ids)),
      protein_ids_(std::move(protein_ids)),
      relations_(std::move(relations)),
      drug_features_(std::move(drug_features)),
      protein_features_(std::move(protein_features)) {
    if (relations_.size() < 2 || relations_[kProteinProtein].ref.family != RelationFamily::ProteinProtein ||
        relations_[kDrugTarget].ref.family != RelationFamily::DrugTarget) {
        throw std::invalid_argument("graph needs protein-protein and drug-target relations in slots 0 and 1");
    }
    index_nodes();
}

MultimodalGraph MultimodalGraph::assemble(std::vector<std::string> drug_ids, std::vector<std::string> protein_ids,
                                          std::vector<Edge> ppi, std::vector<Edge> targets,
                                          std::vector<SideEffectEdges> side_effects,
                                          BinaryFeatures drug_features, BinaryFeatures protein_features) {
    const std::size_t n_drugs = drug_ids.size();
    const std::size_t n_proteins = protein_ids.size();
    std::vector<Relation> relations;
    relations.reserve(side_effects.size() + 2);
    relations.push_back(make_relation({RelationFamily::ProteinProtein, std::nullopt, true}, "protein-protein",
                                      NodeKind::Protein, NodeKind::Protein, std::move(ppi), n_proteins,
                                      n_proteins));
    relations.push_back(make_relation({RelationFamily::DrugTarget, std::nullopt, false}, "drug-target",
                                      NodeKind::Drug, NodeKind::Protein, std::move(targets), n_drugs,
                                      n_proteins));
    for (auto& se : side_effects) {
        relations.push_back(make_relation({RelationFamily::SideEffect, se.id, true}, std::move(se.name),
                                          NodeKind::Drug, NodeKind::Drug, std::move(se.edges), n_drugs,
                                          n_drugs));
    }
    return MultimodalGraph(std::move(drug_ids), std::move(protein_ids), std::move(relations),
                           std::move(drug_features), std::move(protein_features));
}

MultimodalGraph MultimodalGraph::with_edges(const std::vector<std::vector<Edge>>& edges_per_relation) const {
    if (edges_per_relation.size() != relations_.size()) {
        throw std::invalid_argument("with_edges: one edge list per relation required");
    }
    std::vector<Relation> relations;
    relations.reserve(relations_.size());
    for (std::size_t r = 0; r < relations_.size(); ++r) {
        const Relation& old = relations_[r];
        relations.push_back(make_relation(old.ref, old.name, old.head_kind, old.tail_kind, edges_per_relation[r],
                                          node_count(old.head_kind), node_count(old.tail_kind)));
    }
    return MultimodalGraph(drug_ids_, protein_ids_, std::move(relations), drug_features_, protein_features_);
}

void MultimodalGraph::index_nodes() {
    drug_index_.clear();
    protein_index_.clear();
    side_effect_index_.clear();
    for (std::uint32_t i = 0; i < drug_ids_.size(); ++i) drug_index_.emplace(drug_ids_[i], i);
    for (std::uint32_t i = 0; i < protein_ids_.size(); ++i) protein_index_.emplace(protein_ids_[i], i);
    for (RelationId r = kFirstSideEffect; r < relations_.size(); ++r) {
        side_effect_index_.emplace(*relations_[r].ref.side_effect_id, r);
    }
}

std::size_t MultimodalGraph::node_count(NodeKind kind) const {
    return kind == NodeKind::Drug ? drug_ids_.size() : protein_ids_.size();
}

const std::string& MultimodalGraph::node_id(NodeRef node) const {
    const auto& ids = node.kind == NodeKind::Drug ? drug_ids_ : protein_ids_;
    if (node.index >= ids.size()) throw LookupError("unknown " + std::string(to_string(node.kind)) + " node index");
    return ids[node.index];
}

std::optional<std::uint32_t> MultimodalGraph::find_node(NodeKind kind, std::string_view id) const {
    const auto& index = kind == NodeKind::Drug ? drug_index_ : protein_index_;
    auto it = index.find(std::string(id));
    if (it == index.end()) return std::nullopt;
    return it->second;
}

const Relation& MultimodalGraph::relation(RelationId id) const {
    if (id >= relations_.size()) throw LookupError("unknown relation " + std::to_string(id));
    return relations_[id];
}

std::optional<RelationId> MultimodalGraph::find_side_effect(std::string_view side_effect_id) const {
    auto it = side_effect_index_.find(std::string(side_effect_id));
    if (it == side_effect_index_.end()) return std::nullopt;
    return it->second;
}

std::vector<RelationId> MultimodalGraph::side_effect_relations() const {
    std::vector<RelationId> out;
    for (RelationId r = kFirstSideEffect; r < relations_.size(); ++r) out.push_back(r);
    return out;
}

std::span<const std::uint32_t> MultimodalGraph::neighbors(NodeRef node, RelationId relation) const {
    const Relation& rel = this->relation(relation);
    if (node.index >= node_count(node.kind)) {
        throw LookupError("unknown " + std::string(to_string(node.kind)) + " node index");
    }
    if (node.kind == rel.head_kind) return rel.head_adjacency.row(node.index);
    if (node.kind == rel.tail_kind) return rel.tail_adjacency.row(node.index);
    return {};
}

bool MultimodalGraph::has_edge(RelationId relation, Edge edge) const {
    const Relation& rel = this->relation(relation);
    if (edge.head >= rel.head_adjacency.rows()) return false;
    return rel.head_adjacency.contains(edge.head, edge.tail);
}

std::size_t degree(const MultimodalGraph& graph, NodeRef node, RelationId relation) {
    return graph.neighbors(node, relation).size();
}

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

class Registry {
public:
    std::uint32_t intern(const std::string& id) {
        auto [it, inserted] = index_.try_emplace(id, static_cast<std::uint32_t>(ids_.size()));
        if (inserted) ids_.push_back(id);
        return it->second;
    }
    std::vector<std::string> take() { return std::move(ids_); }

private:
    std::unordered_map<std::string, std::uint32_t> index_;
    std::vector<std::string> ids_;
};

Edge canonical(std::uint32_t a, std::uint32_t b) { return a < b ? Edge{a, b} : Edge{b, a}; }

}  // namespace

BuildResult build_graph(const GraphInput& input, std::size_t min_relation_count) {
    BuildResult result;
    Registry drugs;
    Registry proteins;

    std::vector<Edge> ppi;
    for (std::size_t i = 0; i < input.ppi_edges.size(); ++i) {
        const std::string a = trim(input.ppi_edges[i].a);
        const std::string b = trim(input.ppi_edges[i].b);
        if (a.empty() || b.empty()) {
            result.rejected.push_back({"ppi", i, "empty identifier"});
            continue;
        }
        if (a == b) {
            result.rejected.push_back({"ppi", i, "self-edge in symmetric relation"});
            continue;
        }
        const std::uint32_t ia = proteins.intern(a);
        ppi.push_back(canonical(ia, proteins.intern(b)));
    }

    std::vector<Edge> targets;
    for (std::size_t i = 0; i < input.target_edges.size(); ++i) {
        const std::string drug = trim(input.target_edges[i].a);
        const std::string protein = trim(input.target_edges[i].b);
        if (drug.empty() || protein.empty()) {
            result.rejected.push_back({"targets", i, "empty identifier"});
            continue;
        }
        targets.push_back({drugs.intern(drug), proteins.intern(protein)});
    }

    struct Pending {
        std::string id;
        std::string name;
        std::set<Edge> edges;
    };
    std::vector<Pending> pending;
    std::unordered_map<std::string, std::size_t> pending_index;
    for (std::size_t i = 0; i < input.combo_edges.size(); ++i) {
        const auto& rec = input.combo_edges[i];
        const std::string a = trim(rec.drug_a);
        const std::string b = trim(rec.drug_b);
        const std::string se = trim(rec.side_effect_id);
        if (a.empty() || b.empty() || se.empty()) {
            result.rejected.push_back({"combo", i, "empty identifier"});
            continue;
        }
        if (a == b) {
            result.rejected.push_back({"combo", i, "self-edge in symmetric relation"});
            continue;
        }
        const std::uint32_t ia = drugs.intern(a);
        const Edge e = canonical(ia, drugs.intern(b));
        auto [it, inserted] = pending_index.try_emplace(se, pending.size());
        if (inserted) pending.push_back({se, trim(rec.side_effect_name), {}});
        pending[it->second].edges.insert(e);
    }

    struct FeatureColumn {
        std::string id;
        std::string name;
    };
    std::vector<FeatureColumn> columns;
    std::unordered_map<std::string, std::uint32_t> column_index;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> feature_entries;
    for (std::size_t i = 0; i < input.mono_features.size(); ++i) {
        const auto& rec = input.mono_features[i];
        const std::string drug = trim(rec.drug);
        const std::string feature = trim(rec.feature_id);
        if (drug.empty() || feature.empty()) {
            result.rejected.push_back({"mono", i, "empty identifier"});
            continue;
        }
        auto [it, inserted] = column_index.try_emplace(feature, static_cast<std::uint32_t>(columns.size()));
        if (inserted) columns.push_back({feature, trim(rec.feature_name)});
        feature_entries.emplace_back(drugs.intern(drug), it->second);
    }

    std::vector<MultimodalGraph::SideEffectEdges> retained;
    std::set<std::string> retained_ids;
    for (auto& p : pending) {
        if (p.edges.size() < min_relation_count) {
            ++result.dropped_side_effects;
            continue;
        }
        retained_ids.insert(p.id);
        retained.push_back({p.id, p.name, std::vector<Edge>(p.edges.begin(), p.edges.end())});
    }

    auto drug_ids = drugs.take();
    auto protein_ids = proteins.take();

    // Leakage guard: no predicted side effect may also be a drug feature.
    std::vector<std::int64_t> remap(columns.size(), -1);
    BinaryFeatures drug_features;
    drug_features.rows = drug_ids.size();
    for (std::size_t c = 0; c < columns.size(); ++c) {
        if (retained_ids.count(columns[c].id)) {
            ++result.leaked_feature_columns;
            continue;
        }
        remap[c] = static_cast<std::int64_t>(drug_features.names.size());
        drug_features.names.push_back(columns[c].id);
    }
    drug_features.cols = drug_features.names.size();
    drug_features.identity = drug_features.cols == 0;
    if (!drug_features.identity) {
        std::vector<std::pair<std::uint32_t, std::uint32_t>> kept;
        kept.reserve(feature_entries.size());
        for (const auto& [drug, col] : feature_entries) {
            if (remap[col] >= 0) kept.emplace_back(drug, static_cast<std::uint32_t>(remap[col]));
        }
        drug_features.active = NeighborLists(drug_features.rows, kept);
    }

    BinaryFeatures protein_features;
    protein_features.rows = protein_ids.size();

    result.graph = MultimodalGraph::assemble(std::move(drug_ids), std::move(protein_ids), std::move(ppi),
                                             std::move(targets), std::move(retained), std::move(drug_features),
                                             std::move(protein_features));
    return result;
}

namespace {

std::size_t fold_size(double fraction, std::size_t m) {
    const auto n = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(m) + 1e-9));
    return std::max<std::size_t>(n, 1);
}

// Uniform random canonical pair of the relation's node kinds that is not a
// positive and not a self-pair.
std::vector<Edge> sample_non_edges(const MultimodalGraph& graph, RelationId r, std::size_t count, Rng& rng) {
    const Relation& rel = graph.relation(r);
    const std::size_t n_head = graph.node_count(rel.head_kind);
    const std::size_t n_tail = graph.node_count(rel.tail_kind);
    const bool same_kind = rel.head_kind == rel.tail_kind;
    const double total = same_kind ? 0.5 * static_cast<double>(n_head) * static_cast<double>(n_head - (n_head > 0))
                                   : static_cast<double>(n_head) * static_cast<double>(n_tail);
    const double admissible = total - static_cast<double>(rel.edges.size());
    std::vector<Edge> out;
    if (count == 0) return out;
    if (admissible < 1.0) {
        throw SplitError("relation " + rel.id() + " has no non-edges to sample evaluation negatives from");
    }
    out.reserve(count);
    if (admissible * 4.0 < total) {
        std::vector<Edge> pool;
        for (std::uint32_t i = 0; i < n_head; ++i) {
            for (std::uint32_t j = same_kind ? i + 1 : 0; j < n_tail; ++j) {
                if (!rel.head_adjacency.contains(i, j)) pool.push_back({i, j});
            }
        }
        for (std::size_t k = 0; k < count; ++k) out.push_back(pool[uniform_index(rng, pool.size())]);
        return out;
    }
    while (out.size() < count) {
        auto a = static_cast<std::uint32_t>(uniform_index(rng, n_head));
        auto b = static_cast<std::uint32_t>(uniform_index(rng, n_tail));
        if (same_kind) {
            if (a == b) continue;
            if (a > b) std::swap(a, b);
        }
        if (rel.head_adjacency.contains(a, b)) continue;
        out.push_back({a, b});
    }
    return out;
}

}  // namespace

EdgeSplit split_edges(const MultimodalGraph& graph, SplitFractions fractions, std::uint64_t seed) {
    if (fractions.train < 0 || fractions.val < 0 || fractions.test < 0 ||
        std::abs(fractions.train + fractions.val + fractions.test - 1.0) > 1e-9) {
        throw std::invalid_argument("split fractions must be non-negative and sum to 1");
    }
    EdgeSplit split;
    split.seed = seed;
    split.relations.resize(graph.relations().size());
    for (RelationId r = 0; r < graph.relations().size(); ++r) {
        const Relation& rel = graph.relation(r);
        RelationSplit& out = split.relations[r];
        const std::size_t m = rel.edges.size();
        if (m < 3) {
            if (rel.ref.family == RelationFamily::SideEffect) {
                throw SplitError("relation " + rel.id() + " has " + std::to_string(m) +
                                 " edges; at least 3 are needed to split");
            }
            out.train_pos = rel.edges;
            continue;
        }
        Rng rng(derive_seed(seed, r));
        std::vector<Edge> shuffled = rel.edges;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const std::size_t n_test = fold_size(fractions.test, m);
        const std::size_t n_val = fold_size(fractions.val, m);
        auto begin = shuffled.begin();
        out.test_pos.assign(begin, begin + static_cast<std::ptrdiff_t>(n_test));
        out.val_pos.assign(begin + static_cast<std::ptrdiff_t>(n_test),
                           begin + static_cast<std::ptrdiff_t>(n_test + n_val));
        out.train_pos.assign(begin + static_cast<std::ptrdiff_t>(n_test + n_val), shuffled.end());
        std::sort(out.train_pos.begin(), out.train_pos.end());
        std::sort(out.val_pos.begin(), out.val_pos.end());
        std::sort(out.test_pos.begin(), out.test_pos.end());
        out.val_neg = sample_non_edges(graph, r, out.val_pos.size(), rng);
        out.test_neg = sample_non_edges(graph, r, out.test_pos.size(), rng);
    }
    return split;
}

MultimodalGraph training_graph(const MultimodalGraph& graph, const EdgeSplit& split) {
    if (split.relations.size() != graph.relations().size()) {
        throw std::invalid_argument("split does not match graph relations");
    }
    std::vector<std::vector<Edge>> edges;
    edges.reserve(split.relations.size());
    for (const auto& rs : split.relations) edges.push_back(rs.train_pos);
    return graph.with_edges(edges);
}

void downsample_training(EdgeSplit& split, RelationId relation, std::size_t keep, std::uint64_t seed) {
    if (relation >= split.relations.size()) throw LookupError("unknown relation " + std::to_string(relation));
    auto& train = split.relations[relation].train_pos;
    if (train.size() <= keep) return;
    Rng rng(derive_seed(seed, relation));
    std::shuffle(train.begin(), train.end(), rng);
    train.resize(keep);
    std::sort(train.begin(), train.end());
}

void write_split_manifest(std::ostream& out, const MultimodalGraph& graph, const EdgeSplit& split) {
    out << "relation_id,drug_i,drug_j,fold,label\n";
    for (RelationId r = 0; r < split.relations.size(); ++r) {
        const Relation& rel = graph.relation(r);
        const std::string id = rel.id();
        auto emit = [&](const std::vector<Edge>& edges, const char* fold, const char* label) {
            for (const Edge& e : edges) {
                out << id << ',' << graph.node_id({rel.head_kind, e.head}) << ','
                    << graph.node_id({rel.tail_kind, e.tail}) << ',' << fold << ',' << label << '\n';
            }
        };
        const RelationSplit& rs = split.relations[r];
        emit(rs.train_pos, "train", "pos");
        emit(rs.val_pos, "val", "pos");
        emit(rs.val_neg, "val", "neg");
        emit(rs.test_pos, "test", "pos");
        emit(rs.test_neg, "test", "neg");
    }
}

}  // namespace polylink

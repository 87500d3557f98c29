#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace polylink {

enum class NodeKind : std::uint8_t { Drug, Protein };

std::string_view to_string(NodeKind kind);

struct NodeRef {
    NodeKind kind;
    std::uint32_t index;
    auto operator<=>(const NodeRef&) const = default;
};

enum class RelationFamily : std::uint8_t { ProteinProtein, DrugTarget, SideEffect };

struct RelationRef {
    RelationFamily family;
    std::optional<std::string> side_effect_id;
    bool symmetric;
};

// Index into MultimodalGraph::relations(). The protein-protein and
// drug-target relations always occupy the first two slots.
using RelationId = std::uint32_t;
inline constexpr RelationId kProteinProtein = 0;
inline constexpr RelationId kDrugTarget = 1;
inline constexpr RelationId kFirstSideEffect = 2;

// A node pair in canonical orientation: head < tail for same-kind relations,
// (drug, protein) for drug-target.
struct Edge {
    std::uint32_t head;
    std::uint32_t tail;
    auto operator<=>(const Edge&) const = default;
};

// Compressed sorted neighbor lists, one row per node of a kind.
class NeighborLists {
public:
    NeighborLists() = default;
    NeighborLists(std::size_t rows, std::span<const std::pair<std::uint32_t, std::uint32_t>> entries);

    std::size_t rows() const { return offsets_.empty() ? 0 : offsets_.size() - 1; }
    std::size_t degree(std::size_t row) const { return offsets_[row + 1] - offsets_[row]; }
    std::span<const std::uint32_t> row(std::size_t row) const {
        return {neighbors_.data() + offsets_[row], degree(row)};
    }
    bool contains(std::size_t row, std::uint32_t column) const;
    std::size_t entry_count() const { return neighbors_.size(); }

private:
    std::vector<std::size_t> offsets_;
    std::vector<std::uint32_t> neighbors_;
};

struct Relation {
    RelationRef ref;
    std::string name;
    NodeKind head_kind;
    NodeKind tail_kind;
    std::vector<Edge> edges;  // canonical, sorted, duplicate-free
    NeighborLists head_adjacency;
    NeighborLists tail_adjacency;  // same lists as head_adjacency for same-kind relations

    // External identifier used in CSV outputs.
    std::string id() const;
};

// Binary node features; identity means "one-hot per node" and is never
// materialized.
struct BinaryFeatures {
    std::size_t rows = 0;
    std::size_t cols = 0;
    bool identity = true;
    NeighborLists active;
    std::vector<std::string> names;

    std::size_t width() const { return identity ? rows : cols; }
};

class MultimodalGraph {
public:
    MultimodalGraph() = default;
    MultimodalGraph(std::vector<std::string> drug_ids, std::vector<std::string> protein_ids,
                    std::vector<Relation> relations, BinaryFeatures drug_features,
                    BinaryFeatures protein_features);

    // Assembles relations from raw canonical edge lists. `side_effects` holds
    // (id, display name, edges) per retained side effect.
    struct SideEffectEdges {
        std::string id;
        std::string name;
        std::vector<Edge> edges;
    };
    static MultimodalGraph assemble(std::vector<std::string> drug_ids, std::vector<std::string> protein_ids,
                                    std::vector<Edge> ppi, std::vector<Edge> targets,
                                    std::vector<SideEffectEdges> side_effects, BinaryFeatures drug_features,
                                    BinaryFeatures protein_features);

    // Same nodes and features with each relation's edge set replaced.
    MultimodalGraph with_edges(const std::vector<std::vector<Edge>>& edges_per_relation) const;

    std::size_t node_count(NodeKind kind) const;
    const std::vector<std::string>& drug_ids() const { return drug_ids_; }
    const std::vector<std::string>& protein_ids() const { return protein_ids_; }
    const std::string& node_id(NodeRef node) const;
    std::optional<std::uint32_t> find_node(NodeKind kind, std::string_view id) const;

    const std::vector<Relation>& relations() const { return relations_; }
    const Relation& relation(RelationId id) const;
    std::optional<RelationId> find_side_effect(std::string_view side_effect_id) const;
    std::vector<RelationId> side_effect_relations() const;

    const BinaryFeatures& features(NodeKind kind) const {
        return kind == NodeKind::Drug ? drug_features_ : protein_features_;
    }

    std::span<const std::uint32_t> neighbors(NodeRef node, RelationId relation) const;
    bool has_edge(RelationId relation, Edge edge) const;

private:
    void index_nodes();

    std::vector<std::string> drug_ids_;
    std::vector<std::string> protein_ids_;
    std::vector<Relation> relations_;
    BinaryFeatures drug_features_;
    BinaryFeatures protein_features_;
    std::unordered_map<std::string, std::uint32_t> drug_index_;
    std::unordered_map<std::string, std::uint32_t> protein_index_;
    std::unordered_map<std::string, RelationId> side_effect_index_;
};

struct GraphInput {
    struct Pair {
        std::string a;
        std::string b;
    };
    struct Combo {
        std::string drug_a;
        std::string drug_b;
        std::string side_effect_id;
        std::string side_effect_name;
    };
    struct Mono {
        std::string drug;
        std::string feature_id;
        std::string feature_name;
    };
    std::vector<Pair> ppi_edges;     // (protein, protein)
    std::vector<Pair> target_edges;  // (drug, protein)
    std::vector<Combo> combo_edges;
    std::vector<Mono> mono_features;
};

struct RecordError {
    std::string source;  // "ppi", "targets", "combo" or "mono"
    std::size_t record;  // zero-based position within that source
    std::string reason;
};

struct BuildResult {
    MultimodalGraph graph;
    std::vector<RecordError> rejected;
    std::size_t dropped_side_effects = 0;
    std::size_t leaked_feature_columns = 0;
};

BuildResult build_graph(const GraphInput& input, std::size_t min_relation_count);

// |N_r^i|; zero when the node kind does not take part in the relation.
std::size_t degree(const MultimodalGraph& graph, NodeRef node, RelationId relation);

struct RelationSplit {
    std::vector<Edge> train_pos;
    std::vector<Edge> val_pos;
    std::vector<Edge> test_pos;
    std::vector<Edge> val_neg;
    std::vector<Edge> test_neg;
};

struct EdgeSplit {
    std::vector<RelationSplit> relations;  // indexed by RelationId
    std::uint64_t seed = 0;
};

struct SplitFractions {
    double train = 0.8;
    double val = 0.1;
    double test = 0.1;
};

// Side-effect relations need at least three edges. Protein-protein and
// drug-target relations with fewer than three edges stay entirely in train.
EdgeSplit split_edges(const MultimodalGraph& graph, SplitFractions fractions, std::uint64_t seed);

// The graph restricted to training positives; this is what the encoder and
// the negative sampler see.
MultimodalGraph training_graph(const MultimodalGraph& graph, const EdgeSplit& split);

// Keeps `keep` randomly chosen training positives of one relation.
void downsample_training(EdgeSplit& split, RelationId relation, std::size_t keep, std::uint64_t seed);

// CSV: relation_id,drug_i,drug_j,fold,label
void write_split_manifest(std::ostream& out, const MultimodalGraph& graph, const EdgeSplit& split);

}  // namespace polylink

#include "doctest.h"

#include "oracles.hpp"

#include "polylink/datagen.hpp"
#include "polylink/io.hpp"

#include <filesystem>

using namespace polylink;

TEST_SUITE("datagen") {

TEST_CASE("side-effect density hits its target") {
    SyntheticSpec spec;
    spec.n_drugs = 100;
    spec.n_side_effects = 1;
    const auto data = generate(spec);
    const double density = static_cast<double>(data.input.combo_edges.size()) / (100.0 * 99.0 / 2.0);
    CHECK(density >= 0.045);
    CHECK(density <= 0.055);
}

TEST_CASE("every family lands within ten percent of its density") {
    const SyntheticSpec spec;
    const auto data = generate(spec);
    const double n_d = static_cast<double>(spec.n_drugs), n_p = static_cast<double>(spec.n_proteins);
    const double ppi = static_cast<double>(data.input.ppi_edges.size()) / (n_p * (n_p - 1) / 2);
    const double dt = static_cast<double>(data.input.target_edges.size()) / (n_d * n_p);
    CHECK(std::abs(ppi / spec.density_ppi - 1) <= 0.1);
    CHECK(std::abs(dt / spec.density_target - 1) <= 0.1);
    for (RelationId r : data.graph.side_effect_relations()) {
        const double se = static_cast<double>(data.graph.relation(r).edges.size()) / (n_d * (n_d - 1) / 2);
        CHECK(std::abs(se / spec.density_side_effect - 1) <= 0.1);
    }
}

TEST_CASE("deterministic under the seed") {
    SyntheticSpec spec;
    spec.n_drugs = 40;
    spec.n_proteins = 60;
    const auto a = generate(spec), b = generate(spec);
    spec.seed = 8;
    const auto c = generate(spec);
    CHECK(a.graph.drug_ids() == b.graph.drug_ids());
    bool differs = false;
    for (RelationId r = 0; r < a.graph.relations().size(); ++r) {
        CHECK(a.graph.relation(r).edges == b.graph.relation(r).edges);
        differs = differs || r >= c.graph.relations().size() || a.graph.relation(r).edges != c.graph.relation(r).edges;
    }
    CHECK(differs);
    CHECK(a.truth.z_drug == b.truth.z_drug);
}

TEST_CASE("invalid specs") {
    SyntheticSpec spec;
    spec.latent_dim = 0;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec = {};
    spec.density_ppi = 0.0;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
    spec = {};
    spec.split_support = 13;
    CHECK_THROWS_AS(generate(spec), std::invalid_argument);
}

TEST_CASE("oracle probabilities") {
    const auto data = generate(SyntheticSpec{});
    const auto& g = data.graph;
    for (RelationId r = 0; r < g.relations().size(); ++r) {
        const auto& edges = g.relation(r).edges;
        for (double p : oracle_scores(data.truth, g, r, edges)) CHECK(p > 0.0);
        if (g.relation(r).head_kind == g.relation(r).tail_kind) {
            std::vector<Edge> swapped;
            for (const Edge& e : edges) swapped.push_back({e.tail, e.head});
            const auto forward = oracle_scores(data.truth, g, r, edges);
            const auto backward = oracle_scores(data.truth, g, r, swapped);
            for (std::size_t k = 0; k < forward.size(); ++k) CHECK(forward[k] == doctest::Approx(backward[k]).epsilon(1e-12));
        }
    }
}

TEST_CASE("planted oracle separates held-out edges from sampled non-edges") {
    const auto data = generate(SyntheticSpec{});
    const auto split = split_edges(data.graph, {}, 7);
    EdgeScorer truth = [&](RelationId r, std::span<const Edge> e) { return oracle_scores(data.truth, data.graph, r, e); };
    const auto report = evaluate(data.graph, split, truth, Fold::Test);
    CHECK(report.macro.auroc >= 0.95);
}

TEST_CASE("the generated graph keeps graph-store invariants") {
    const auto data = generate(SyntheticSpec{});
    const auto& g = data.graph;
    CHECK(g.side_effect_relations().size() == 12);
    for (RelationId r = 0; r < g.relations().size(); ++r) {
        const Relation& rel = g.relation(r);
        for (const Edge& e : rel.edges) {
            if (rel.head_kind == rel.tail_kind) CHECK(e.head < e.tail);
            CHECK(rel.tail_adjacency.contains(e.tail, e.head));
        }
    }
    CHECK_FALSE(g.features(NodeKind::Drug).identity);
    CHECK(g.features(NodeKind::Drug).cols == 16);
}

TEST_CASE("written files ingest back to the same graph") {
    SyntheticSpec spec;
    spec.n_drugs = 40;
    spec.n_proteins = 60;
    spec.n_side_effects = 3;
    const auto data = generate(spec);
    const auto dir = std::filesystem::temp_directory_path() / "polylink_datagen_roundtrip";
    std::filesystem::remove_all(dir);
    write_dataset(dir, data.input);
    const auto back = ingest(DatasetPaths::in_directory(dir), 1);
    CHECK(back.graph.drug_ids() == data.graph.drug_ids());
    CHECK(back.graph.protein_ids() == data.graph.protein_ids());
    REQUIRE(back.graph.relations().size() == data.graph.relations().size());
    for (RelationId r = 0; r < data.graph.relations().size(); ++r) {
        CHECK(back.graph.relation(r).edges == data.graph.relation(r).edges);
        CHECK(back.graph.relation(r).id() == data.graph.relation(r).id());
    }
    CHECK(back.graph.features(NodeKind::Drug).names == data.graph.features(NodeKind::Drug).names);
    std::filesystem::remove_all(dir);
}

}  // TEST_SUITE

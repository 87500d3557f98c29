#include "doctest.h"

#include "oracles.hpp"

#include "polylink/datagen.hpp"
#include "polylink/decoder.hpp"
#include "polylink/model.hpp"

#include <set>

using namespace polylink;

namespace {

DecoderParams identity_params(std::size_t d, std::size_t relations) {
    DecoderParams p;
    p.R = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
    p.M_ppi = p.R;
    p.M_dt = p.R;
    p.D.assign(relations, Eigen::VectorXd::Ones(static_cast<Eigen::Index>(d)));
    return p;
}

DecoderParams random_params(std::size_t d, std::size_t relations, Rng& rng) {
    auto m = [&]() {
        Eigen::MatrixXd x(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(d));
        for (auto& v : x.reshaped()) v = uniform_real(rng, -1, 1);
        return x;
    };
    DecoderParams p{m(), {}, m(), m()};
    for (std::size_t r = 0; r < relations; ++r) {
        Eigen::VectorXd v(static_cast<Eigen::Index>(d));
        for (auto& x : v) x = uniform_real(rng, -1, 1);
        p.D.push_back(v);
    }
    return p;
}

}  // namespace

TEST_SUITE("decoder") {

TEST_CASE("zero embedding scores one half") {
    const auto g = oracle::toy_graph(1);
    const std::vector<double> zero(4, 0.0), other = {0.3, -1.0, 2.0, 0.5};
    const auto s = score({NodeKind::Drug, zero}, {NodeKind::Drug, other}, g, kFirstSideEffect, identity_params(4, 4));
    CHECK(s.raw == 0.0);
    CHECK(s.prob == 0.5);
}

TEST_CASE("identity factors and a unit vector give g = 1") {
    const auto g = oracle::toy_graph(1);
    const std::vector<double> e1 = {1.0, 0.0, 0.0};
    const auto s = score({NodeKind::Drug, e1}, {NodeKind::Drug, e1}, g, kFirstSideEffect, identity_params(3, 4));
    CHECK(s.raw == 1.0);
    CHECK(s.prob == doctest::Approx(0.7310585786300049).epsilon(1e-15));
}

TEST_CASE("drug-drug and protein-protein scores are symmetric") {
    const auto g = oracle::toy_graph(2);
    Rng rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto p = random_params(4, 4, rng);
        std::vector<double> a(4), b(4);
        for (auto& v : a) v = uniform_real(rng, -1, 1);
        for (auto& v : b) v = uniform_real(rng, -1, 1);
        for (RelationId r : {kProteinProtein, kFirstSideEffect, kFirstSideEffect + 1}) {
            const NodeKind k = g.relation(r).head_kind;
            CHECK(score({k, a}, {k, b}, g, r, p).raw == score({k, b}, {k, a}, g, r, p).raw);
        }
    }
}

TEST_CASE("scores match triple loops") {
    const auto g = oracle::toy_graph(3);
    Rng rng(3);
    for (int trial = 0; trial < 100; ++trial) {
        const auto p = random_params(4, 4, rng);
        Eigen::VectorXd a(4), b(4);
        for (auto& v : a) v = uniform_real(rng, -1, 1);
        for (auto& v : b) v = uniform_real(rng, -1, 1);
        const std::span<const double> sa(a.data(), 4), sb(b.data(), 4);
        CHECK(std::abs(score({NodeKind::Drug, sa}, {NodeKind::Drug, sb}, g, kFirstSideEffect, p).raw -
                       oracle::dedicom_loop(a, p.D[kFirstSideEffect], p.R, b)) <= 1e-12);
        CHECK(std::abs(score({NodeKind::Protein, sa}, {NodeKind::Protein, sb}, g, kProteinProtein, p).raw -
                       oracle::triple_loop(a, oracle::symmetric_part(p.M_ppi), b)) <= 1e-12);
        // Drug-target accepts either endpoint order.
        const double dt = oracle::triple_loop(a, p.M_dt, b);
        CHECK(std::abs(score({NodeKind::Drug, sa}, {NodeKind::Protein, sb}, g, kDrugTarget, p).raw - dt) <= 1e-12);
        CHECK(std::abs(score({NodeKind::Protein, sb}, {NodeKind::Drug, sa}, g, kDrugTarget, p).raw - dt) <= 1e-12);
    }
    const std::vector<double> z(4, 1.0);
    CHECK_THROWS_AS(score({NodeKind::Drug, z}, {NodeKind::Protein, z}, g, kFirstSideEffect, identity_params(4, 4)),
                    std::invalid_argument);
}

TEST_CASE("tape decoder, scorer and oracle agree") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = oracle::toy_graph(seed);
        EncoderDecoderModel<double> model(g, LayerSpec{{6, 4}, true}, seed);
        const auto z = model.embeddings();
        const auto p = model.decoder_params();
        Tape<double> tape;
        Rng rng(0);
        auto pass = model.forward(tape, false, 0.0, rng, false);
        const auto scorer = model.scorer();
        for (RelationId r : model.relations()) {
            const auto& edges = g.relation(r).edges;
            const auto raw = tape.value(pass->raw_scores(r, edges));
            const auto probs = scorer(r, edges);
            for (std::size_t k = 0; k < edges.size(); ++k) {
                const double want = oracle::decoder_loop(g, z, p, r, edges[k]);
                CHECK(std::abs(raw(static_cast<Eigen::Index>(k), 0) - want) <= 1e-12);
                CHECK(std::abs(probs[k] - oracle::logistic(want)) <= 1e-12);
            }
        }
    }
}

TEST_CASE("ranking") {
    const auto g = oracle::toy_graph(5);
    EncoderDecoderModel<double> model(g, LayerSpec{{6, 4}, false}, 5);
    const auto z = model.embeddings();
    const auto p = model.decoder_params();
    const auto ses = g.side_effect_relations();

    SUBCASE("excluding every pair leaves nothing") {
        CHECK(score_all_pairs(z, g, ses, p, [](RelationId, Edge) { return true; }, 10).empty());
    }
    SUBCASE("ranked list is ordered and matches the generic ranker") {
        const auto top = score_all_pairs(z, g, ses, p, {}, 7);
        REQUIRE(top.size() == 7);
        for (std::size_t k = 0; k < top.size(); ++k) {
            CHECK(top[k].rank == k + 1);
            CHECK(top[k].i < top[k].j);
            if (k) CHECK(top[k - 1].prob >= top[k].prob);
        }
        const auto generic = top_k_pairs(g, ses, model.scorer(), {}, 7);
        for (std::size_t k = 0; k < top.size(); ++k) {
            CHECK(generic[k].relation == top[k].relation);
            CHECK(generic[k].i == top[k].i);
            CHECK(generic[k].j == top[k].j);
        }
    }
    SUBCASE("a monotone shift of the scores keeps the ranking") {
        const auto base = model.scorer();
        EdgeScorer shifted = [&](RelationId r, std::span<const Edge> e) {
            auto probs = base(r, e);
            for (auto& q : probs) q = oracle::logistic(std::log(q / (1 - q)) + 0.7);
            return probs;
        };
        const auto a = top_k_pairs(g, ses, base, {}, 8);
        const auto b = top_k_pairs(g, ses, shifted, {}, 8);
        for (std::size_t k = 0; k < a.size(); ++k) {
            CHECK(a[k].i == b[k].i);
            CHECK(a[k].j == b[k].j);
            CHECK(a[k].relation == b[k].relation);
        }
    }
}

TEST_CASE("planted oracle ranks held-out edges first") {
    const auto data = generate(SyntheticSpec{});
    const auto split = split_edges(data.graph, {}, 7);
    const auto tg = training_graph(data.graph, split);
    EdgeScorer truth = [&](RelationId r, std::span<const Edge> e) { return oracle_scores(data.truth, data.graph, r, e); };
    const auto ses = data.graph.side_effect_relations();
    const auto top = top_k_pairs(data.graph, ses, truth, [&](RelationId r, Edge e) { return tg.has_edge(r, e); }, 10);
    std::size_t held_out = 0;
    for (const auto& pr : top) {
        const auto& rs = split.relations[pr.relation];
        for (const auto* part : {&rs.val_pos, &rs.test_pos}) {
            held_out += std::count(part->begin(), part->end(), Edge{pr.i, pr.j});
        }
    }
    CHECK(held_out >= 8);
}

}  // TEST_SUITE

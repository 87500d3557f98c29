#include "doctest.h"

#include "oracles.hpp"

#include "polylink/errors.hpp"
#include "polylink/metrics.hpp"

#include <sstream>

using namespace polylink;

namespace {

std::vector<ScoredItem> items(std::vector<double> scores, std::vector<int> labels) {
    std::vector<ScoredItem> out;
    for (std::size_t k = 0; k < scores.size(); ++k) out.push_back({scores[k], labels[k]});
    return out;
}

std::vector<ScoredItem> random_items(Rng& rng, std::size_t n, std::size_t levels) {
    std::vector<ScoredItem> out(n);
    for (auto& it : out) {
        it.score = levels ? static_cast<double>(uniform_index(rng, levels)) : uniform_real(rng, 0, 1);
        it.label = uniform_real(rng, 0, 1) < 0.3;
    }
    out[0].label = 1;
    out[1].label = 0;
    return out;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("AUROC") {
    CHECK(auroc(items({0.9, 0.8, 0.1}, {1, 1, 0})) == 1.0);
    CHECK(auroc(items({0.9, 0.1}, {0, 1})) == 0.0);
    CHECK(auroc(items({0.4, 0.4}, {1, 0})) == 0.5);
    CHECK_THROWS_AS(auroc(items({0.4, 0.3}, {1, 1})), UndefinedMetricError);
    Rng rng(1);
    for (int k = 0; k < 200; ++k) {
        const auto it = random_items(rng, 2 + uniform_index(rng, 60), k % 2 ? 0 : 4);
        CHECK(std::abs(auroc(it) - oracle::pairwise_auroc(it)) <= 1e-12);
    }
}

TEST_CASE("AUPRC") {
    CHECK(auprc(items({0.9, 0.8}, {1, 0})) == 1.0);
    CHECK(auprc(items({0.9, 0.8}, {0, 1})) == 0.5);
    // A tie is one block: the positive sits at precision 1/2.
    CHECK(auprc(items({0.5, 0.5}, {1, 0})) == 0.5);
    CHECK_THROWS_AS(auprc(items({0.9}, {0})), UndefinedMetricError);
    Rng rng(2);
    for (int k = 0; k < 200; ++k) {
        const auto it = random_items(rng, 2 + uniform_index(rng, 60), k % 2 ? 0 : 3);
        CHECK(std::abs(auprc(it) - oracle::threshold_walk_ap(it)) <= 1e-12);
    }
}

TEST_CASE("AP@50") {
    std::vector<ScoredItem> all_pos;
    for (int k = 0; k < 50; ++k) all_pos.push_back({1.0 - k * 0.01, 1});
    CHECK(ap_at_50(all_pos) == 1.0);

    auto ranks_1_and_3 = items({0.9, 0.8, 0.7, 0.6}, {1, 0, 1, 0});
    CHECK(ap_at_50(ranks_1_and_3) == doctest::Approx(0.5 * (1.0 + 2.0 / 3.0)).epsilon(1e-15));

    std::vector<ScoredItem> late;
    for (int k = 0; k < 60; ++k) late.push_back({1.0 - k * 0.01, k >= 55});
    CHECK(ap_at_50(late) == 0.0);

    // Up to 50 items AP@50 and AUPRC coincide.
    Rng rng(3);
    for (int k = 0; k < 100; ++k) {
        const auto it = random_items(rng, 2 + uniform_index(rng, 48), k % 2 ? 0 : 5);
        CHECK(std::abs(ap_at_50(it) - auprc(it)) <= 1e-12);
    }
    for (int k = 0; k < 200; ++k) {
        const auto it = random_items(rng, 40 + uniform_index(rng, 100), k % 2 ? 0 : 6);
        CHECK(std::abs(ap_at_50(it) - oracle::rank_walk_ap50(it)) <= 1e-12);
    }
}

TEST_CASE("tied block straddling rank 50 counts pro rata") {
    // 48 negatives on top, then a block of 4 holding 2 positives.
    std::vector<ScoredItem> it;
    for (int k = 0; k < 48; ++k) it.push_back({1.0, 0});
    for (int k = 0; k < 4; ++k) it.push_back({0.5, k < 2});
    // Two of the block's four positions fall inside the cutoff.
    const double block = 2.0 * (2.0 / 52.0);
    CHECK(ap_at_50(it) == doctest::Approx(0.5 * block / 2.0).epsilon(1e-14));
}

TEST_CASE("evaluate") {
    const auto g = oracle::toy_graph(3, {10, 5, 3, 0, 0.3, 0.3, 0.6});
    const auto split = split_edges(g, {}, 3);
    EdgeScorer perfect = [&](RelationId r, std::span<const Edge> e) {
        std::vector<double> out;
        for (const Edge& x : e) out.push_back(g.has_edge(r, x) ? 1.0 : 0.0);
        return out;
    };
    const auto best = evaluate(g, split, perfect, Fold::Test);
    CHECK(best.relations.size() == 3);
    CHECK(best.macro.auroc == 1.0);
    CHECK(best.macro.auprc == 1.0);

    EdgeScorer flat = [](RelationId, std::span<const Edge> e) { return std::vector<double>(e.size(), 0.3); };
    for (const auto& m : evaluate(g, split, flat, Fold::Val).relations) CHECK(m.auroc == 0.5);

    std::ostringstream csv;
    write_report_csv(csv, best);
    const std::string text = csv.str();
    CHECK(text.rfind("relation_id,n_pos,n_neg,auroc,auprc,ap50\n", 0) == 0);
    CHECK(text.find("\nmacro,") != std::string::npos);

    const auto low = extreme_relations(best, 2, false);
    CHECK(low.size() == 2);
    CHECK(low[0].relation < low[1].relation);
}

TEST_CASE("relations with an undefined metric are skipped with a warning") {
    const auto g = oracle::toy_graph(3, {10, 5, 2, 0, 0.3, 0.3, 0.6});
    auto split = split_edges(g, {}, 3);
    split.relations[kFirstSideEffect].test_pos.clear();
    EdgeScorer flat = [](RelationId, std::span<const Edge> e) { return std::vector<double>(e.size(), 0.3); };
    const auto report = evaluate(g, split, flat, Fold::Test);
    CHECK(report.warnings == 1);
    CHECK(report.relations.size() == 1);
    split.relations[kFirstSideEffect + 1].test_pos.clear();
    CHECK_THROWS_AS(evaluate(g, split, flat, Fold::Test), UndefinedMetricError);
}

}  // TEST_SUITE

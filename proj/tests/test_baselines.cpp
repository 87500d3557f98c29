#include "doctest.h"

#include "oracles.hpp"

#include "polylink/baselines.hpp"

using namespace polylink;

namespace {

Eigen::VectorXd random_vector(Eigen::Index n, Rng& rng) {
    Eigen::VectorXd v(n);
    for (auto& x : v) x = uniform_real(rng, -1, 1);
    return v;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Rng& rng) {
    Eigen::MatrixXd m(n, n);
    for (auto& x : m.reshaped()) x = uniform_real(rng, -1, 1);
    return m;
}

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

}  // namespace

TEST_SUITE("baselines") {

TEST_CASE("RESCAL score") {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(3);
    const Eigen::VectorXd e1 = Eigen::VectorXd::Unit(3, 0);
    Rng rng(1);
    CHECK(rescal_score(view(zero), view(random_vector(3, rng)), random_matrix(3, rng)).prob == 0.5);
    CHECK(rescal_score(view(e1), view(e1), Eigen::MatrixXd::Identity(3, 3)).raw == 1.0);
    for (int k = 0; k < 100; ++k) {
        const auto a = random_vector(3, rng), b = random_vector(3, rng);
        const auto T = random_matrix(3, rng);
        CHECK(std::abs(rescal_score(view(a), view(b), T).raw - oracle::triple_loop(a, oracle::symmetric_part(T), b)) <= 1e-12);
    }
    CHECK_THROWS_AS(rescal_score(view(e1), view(zero), Eigen::MatrixXd::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("DEDICOM score") {
    Rng rng(2);
    for (int k = 0; k < 100; ++k) {
        const auto a = random_vector(4, rng), b = random_vector(4, rng), u = random_vector(4, rng);
        const auto T = random_matrix(4, rng);
        CHECK(dedicom_score(view(a), view(b), Eigen::VectorXd::Ones(4), T).raw == rescal_score(view(a), view(b), T).raw);
        CHECK(dedicom_score(view(a), view(b), Eigen::VectorXd::Zero(4), T).prob == 0.5);
        CHECK(std::abs(dedicom_score(view(a), view(b), u, T).raw - oracle::dedicom_loop(a, u, T, b)) <= 1e-12);
    }
}

TEST_CASE("factorization models score like the reference loops") {
    const auto g = oracle::toy_graph(3, {6, 4, 3, 0, 0.4, 0.3, 0.5});
    for (Factorization kind : {Factorization::Rescal, Factorization::Dedicom}) {
        FactorizationModel<double> model(g, kind, 5, 3);
        CHECK(model.relations() == g.side_effect_relations());
        const Eigen::MatrixXd A = model.params().at(model.factor_name()).value;
        const auto scorer = model.scorer();
        for (RelationId r : model.relations()) {
            const Eigen::MatrixXd T = model.params().at(model.core_name(r)).value;
            const Eigen::VectorXd u = kind == Factorization::Dedicom
                                          ? Eigen::VectorXd(model.params().at(model.diagonal_name(r)).value.row(0).transpose())
                                          : Eigen::VectorXd::Ones(5);
            const auto& edges = g.relation(r).edges;
            const auto probs = scorer(r, edges);
            for (std::size_t k = 0; k < edges.size(); ++k) {
                const Eigen::VectorXd ai = A.row(edges[k].head).transpose(), aj = A.row(edges[k].tail).transpose();
                CHECK(std::abs(probs[k] - oracle::logistic(oracle::dedicom_loop(ai, u, T, aj))) <= 1e-12);
            }
        }
        const Edge any[] = {{0, 1}};
        CHECK_THROWS(scorer(kProteinProtein, any));
    }
}

TEST_CASE("factorization gradients match central differences") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto g = oracle::toy_graph(seed);
        for (Factorization kind : {Factorization::Rescal, Factorization::Dedicom}) {
            FactorizationModel<double> model(g, kind, 4, seed);
            const auto terms = oracle::all_edge_terms(g, model.relations(), 2, seed);
            CHECK(oracle::check_gradients(model, terms, 1e-5).max_relative_error < 1e-4);
        }
    }
}

TEST_CASE("training with zero learning rate leaves the factors") {
    const auto g = oracle::toy_graph(4, {12, 4, 2, 0, 0.4, 0.3, 0.6});
    const auto split = split_edges(g, {}, 4);
    const auto tg = training_graph(g, split);
    FactorizationModel<double> model(tg, Factorization::Rescal, 4, 4);
    const auto before = model.params().snapshot();
    TrainConfig cfg;
    cfg.lr = 0.0;
    cfg.max_epochs = 3;
    train(model, tg, split, cfg);
    CHECK(model.params().snapshot() == before);
}

TEST_CASE("same seed gives the same parameters") {
    const auto g = oracle::toy_graph(5);
    FactorizationModel<double> a(g, Factorization::Dedicom, 4, 9), b(g, Factorization::Dedicom, 4, 9), c(g, Factorization::Dedicom, 4, 10);
    CHECK(a.params().snapshot() == b.params().snapshot());
    CHECK(a.params().snapshot() != c.params().snapshot());
}

TEST_CASE("names") {
    CHECK(parse_factorization("rescal") == Factorization::Rescal);
    CHECK(parse_factorization("dedicom") == Factorization::Dedicom);
    CHECK(to_string(Factorization::Dedicom) == "dedicom");
    CHECK_THROWS_AS(parse_factorization("tucker"), std::invalid_argument);
    const auto g = oracle::toy_graph(5);
    ParamStore<double> wrong;
    wrong.add("rescal.A", Matrix<double>::Zero(2, 2));
    CHECK_THROWS_AS(FactorizationModel<double>(g, Factorization::Rescal, std::move(wrong)), std::invalid_argument);
}

}  // TEST_SUITE

#include "doctest.h"

#include "oracles.hpp"

#include "polylink/encoder.hpp"
#include "polylink/model.hpp"

using namespace polylink;

namespace {

std::shared_ptr<const SparseAdjacency<double>> from_dense(const Matrix<double>& m) {
    auto out = std::make_shared<SparseAdjacency<double>>();
    out->rows = static_cast<std::size_t>(m.rows());
    out->cols = static_cast<std::size_t>(m.cols());
    out->offsets.assign(out->rows + 1, 0);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) != 0.0) {
                out->columns.push_back(static_cast<std::uint32_t>(j));
                out->coefficients.push_back(m(i, j));
            }
        }
        out->offsets[i + 1] = out->columns.size();
    }
    return out;
}

MultimodalGraph drug_graph(std::size_t n, std::vector<Edge> side_effect) {
    std::vector<std::string> drugs;
    for (std::size_t k = 0; k < n; ++k) drugs.push_back("D" + std::to_string(k));
    return MultimodalGraph::assemble(drugs, {"p0", "p1"}, {}, {}, {{"S", "s", std::move(side_effect)}},
                                     BinaryFeatures{n, 0, true, {}, {}}, BinaryFeatures{2, 0, true, {}, {}});
}

void fill(ParamStore<double>& store, double value) {
    for (auto& [name, slot] : store) slot.value.setConstant(value);
}

}  // namespace

TEST_SUITE("encoder") {

TEST_CASE("normalization constants") {
    const auto single = drug_graph(3, {{0, 1}});
    const auto c1 = normalization_constants<double>(single, kFirstSideEffect);
    CHECK(c1.to_dense()(0, 1) == 1.0);
    CHECK(c1.to_dense()(1, 0) == 1.0);
    CHECK(c1.row_size(2) == 0);

    const auto star = drug_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    const auto c = normalization_constants<double>(star, kFirstSideEffect).to_dense();
    for (int leaf = 1; leaf <= 4; ++leaf) {
        CHECK(c(0, leaf) == 0.5);
        CHECK(c(leaf, 0) == 0.5);
    }
}

TEST_CASE("isolated node with identity self weight") {
    const auto g = drug_graph(3, {{1, 2}});
    Matrix<double> x(3, 2);
    x << 1, -1, 0, 0, 0, 0;
    GraphEncoder<double> enc(g, LayerSpec{{2}, true}, {from_dense(x), from_dense(Matrix<double>::Identity(2, 2))});
    ParamStore<double> store;
    Rng rng(1);
    enc.init_params(store, rng);
    fill(store, 0.0);
    store.at(GraphEncoder<double>::self_name(0, NodeKind::Drug)).value = Matrix<double>::Identity(2, 2);
    const auto z = enc.embed(store);
    CHECK(z.drug(0, 0) == 1.0);
    CHECK(z.drug(0, 1) == 0.0);
}

TEST_CASE("star center with unit weights") {
    const auto g = drug_graph(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
    GraphEncoder<double> enc(g, LayerSpec{{1}, true},
                             {from_dense(Matrix<double>::Ones(5, 1)), from_dense(Matrix<double>::Ones(2, 1))});
    ParamStore<double> store;
    Rng rng(1);
    enc.init_params(store, rng);
    fill(store, 1.0);
    const auto z = enc.embed(store);
    CHECK(z.drug(0, 0) == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(z.drug(1, 0) == doctest::Approx(1.5).epsilon(1e-15));
}

TEST_CASE("two layers only see two hops") {
    const auto g = drug_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
    Rng rng(2);
    Matrix<double> x(5, 3);
    for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = uniform_real(rng, 0.1, 1.0);
    const LayerSpec spec{{4, 4}, false};
    auto embed_with = [&](const Matrix<double>& features) {
        GraphEncoder<double> enc(g, spec, {from_dense(features), from_dense(Matrix<double>::Identity(2, 2))});
        ParamStore<double> store;
        Rng init(5);
        enc.init_params(store, init);
        return enc.embed(store);
    };
    const auto base = embed_with(x);
    Matrix<double> far = x;
    far.row(3) *= 3.0;  // three hops from node 0
    CHECK(embed_with(far).drug.row(0) == base.drug.row(0));
    Matrix<double> near = x;
    near.row(2) *= 3.0;  // two hops
    CHECK(embed_with(near).drug.row(0) != base.drug.row(0));
}

TEST_CASE("encoder matches the dense per-node reference") {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        oracle::ToyShape shape;
        shape.drugs = 4;
        shape.proteins = 5;
        shape.side_effects = 3;
        shape.drug_feature_width = seed % 2 ? 3 : 0;
        const auto g = oracle::toy_graph(seed, shape);
        const LayerSpec spec{{5, 3}, seed % 3 != 0};
        EncoderDecoderModel<double> model(g, spec, seed);
        const auto z = model.embeddings();
        const auto ref = oracle::dense_encoder(g, model.params(), spec);
        CHECK((z.drug - ref.drug).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK((z.protein - ref.protein).cwiseAbs().maxCoeff() <= 1e-10);
    }
}

TEST_CASE("drug-target relation feeds both node kinds through separate weights") {
    const auto g = oracle::toy_graph(3);
    GraphEncoder<double> enc(g, LayerSpec{{4}, true});
    ParamStore<double> store;
    Rng rng(1);
    enc.init_params(store, rng);
    CHECK(store.contains(GraphEncoder<double>::weight_name(0, "r1.targets")));
    CHECK(store.contains(GraphEncoder<double>::weight_name(0, "r1.targeted-by")));
    CHECK(store.at(GraphEncoder<double>::weight_name(0, "r1.targets")).value.rows() == 5);  // drug input width
    CHECK(store.at(GraphEncoder<double>::weight_name(0, "r1.targeted-by")).value.rows() == 7);
}

TEST_CASE("single precision tracks double precision") {
    const auto g = oracle::toy_graph(4);
    EncoderDecoderModel<double> wide(g, LayerSpec{{8, 4}, true}, 4);
    ParamStore<float> narrow_store;
    for (const auto& [name, slot] : wide.params()) narrow_store.add(name, slot.value.cast<float>());
    EncoderDecoderModel<float> narrow(g, LayerSpec{{8, 4}, true}, std::move(narrow_store));
    const auto a = wide.embeddings();
    const auto b = narrow.embeddings();
    CHECK((a.drug - b.drug).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("encoder rejects malformed specs and parameters") {
    const auto g = oracle::toy_graph(1);
    CHECK_THROWS_AS(GraphEncoder<double>(g, LayerSpec{{}, true}), std::invalid_argument);
    CHECK_THROWS_AS(GraphEncoder<double>(g, LayerSpec{{4, 0}, true}), std::invalid_argument);
    GraphEncoder<double> enc(g, LayerSpec{{4}, true});
    ParamStore<double> store;
    Rng rng(1);
    enc.init_params(store, rng);
    store.at(GraphEncoder<double>::self_name(0, NodeKind::Drug)).value = Matrix<double>::Zero(2, 2);
    CHECK_THROWS_AS(enc.embed(store), std::invalid_argument);
}

}  // TEST_SUITE

#pragma once

#include "polylink/decoder.hpp"
#include "polylink/encoder.hpp"
#include "polylink/graph.hpp"
#include "polylink/params.hpp"
#include "polylink/tape.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace polylink {

// Probabilities for a batch of edges of one relation.
using EdgeScorer = std::function<std::vector<double>(RelationId, std::span<const Edge>)>;

// One forward pass recorded on a tape; yields raw scores g for edge batches.
template <typename Real>
class ScoringPass {
public:
    using Var = typename Tape<Real>::Var;
    virtual ~ScoringPass() = default;
    virtual Var raw_scores(RelationId relation, std::span<const Edge> edges) = 0;
};

// What the trainer needs from a link-prediction model.
template <typename Real>
class LinkModel {
public:
    virtual ~LinkModel() = default;

    virtual std::string name() const = 0;
    virtual ParamStore<Real>& params() = 0;
    virtual const ParamStore<Real>& params() const = 0;
    // Relations whose edges contribute loss terms.
    virtual std::vector<RelationId> relations() const = 0;
    // With differentiable = false parameters enter the tape frozen.
    virtual std::unique_ptr<ScoringPass<Real>> forward(Tape<Real>& tape, bool training, double dropout_rate,
                                                       Rng& rng, bool differentiable = true) = 0;
    // Tape-free probability scorer over the current parameters.
    virtual EdgeScorer scorer() const = 0;
};

// Graph convolutional encoder + factorized decoder, trained end to end.
template <typename Real>
class EncoderDecoderModel final : public LinkModel<Real> {
public:
    // `train_graph` must outlive the model; it is the training-edge view
    // used for message passing.
    EncoderDecoderModel(const MultimodalGraph& train_graph, LayerSpec spec, std::uint64_t seed);
    EncoderDecoderModel(const MultimodalGraph& train_graph, LayerSpec spec, ParamStore<Real> params);
    // The model keeps a reference to the graph.
    EncoderDecoderModel(MultimodalGraph&&, LayerSpec, std::uint64_t) = delete;
    EncoderDecoderModel(MultimodalGraph&&, LayerSpec, ParamStore<Real>) = delete;

    std::string name() const override { return "main"; }
    ParamStore<Real>& params() override { return params_; }
    const ParamStore<Real>& params() const override { return params_; }
    std::vector<RelationId> relations() const override;
    std::unique_ptr<ScoringPass<Real>> forward(Tape<Real>& tape, bool training, double dropout_rate, Rng& rng,
                                               bool differentiable = true) override;
    EdgeScorer scorer() const override;

    const GraphEncoder<Real>& encoder() const { return encoder_; }
    const EdgeDecoder<Real>& decoder() const { return decoder_; }
    NodeEmbeddings embeddings() const { return encoder_.embed(params_); }
    DecoderParams decoder_params() const { return decoder_.extract(params_); }

private:
    const MultimodalGraph* graph_;
    GraphEncoder<Real> encoder_;
    EdgeDecoder<Real> decoder_;
    ParamStore<Real> params_;
};

// Scores from precomputed embeddings and decoder parameters.
EdgeScorer make_scorer(const MultimodalGraph& graph, NodeEmbeddings embeddings, DecoderParams params);

// Same ranking contract as score_all_pairs for any scorer.
std::vector<Prediction> top_k_pairs(const MultimodalGraph& graph, std::span<const RelationId> relations,
                                    const EdgeScorer& scorer, const ExcludePredicate& exclude, std::size_t k);

}  // namespace polylink

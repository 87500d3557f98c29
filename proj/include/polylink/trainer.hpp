#pragma once

#include "polylink/graph.hpp"
#include "polylink/metrics.hpp"
#include "polylink/model.hpp"
#include "polylink/random.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace polylink {

enum class StopCriterion { ValidationLoss, ValidationAuprc };

struct TrainConfig {
    double lr = 0.001;
    std::size_t max_epochs = 100;
    std::size_t batch_size = 512;
    double dropout = 0.1;
    std::size_t early_stop_window = 2;
    std::size_t negatives_per_positive = 1;
    std::uint64_t seed = 0;
    std::vector<std::size_t> hidden_dims{64, 32};
    StopCriterion stop_on = StopCriterion::ValidationLoss;
    std::size_t first_epoch = 1;  // > 1 when resuming; epochs run up to max_epochs

    void validate() const;
};

// Uniform corruption of the tail endpoint over same-kind nodes, rejecting
// the head itself and the head's training neighbors under the relation.
class NegativeSampler {
public:
    explicit NegativeSampler(const MultimodalGraph& train_graph) : graph_(&train_graph) {}
    explicit NegativeSampler(MultimodalGraph&&) = delete;

    // Number of admissible replacement nodes for `head` under `relation`.
    std::size_t admissible(RelationId relation, std::uint32_t head) const;
    // (head, n) or nullopt when no admissible replacement exists.
    std::optional<Edge> sample(RelationId relation, Edge positive, Rng& rng) const;

private:
    const MultimodalGraph* graph_;
};

// -log p_pos - log(1 - p_neg), both probabilities clamped to [1e-12, 1-1e-12].
double edge_loss(double p_pos, double p_neg);

// One positive and the negatives estimating its expectation term.
struct LossTerm {
    RelationId relation;
    Edge positive;
    std::vector<Edge> negatives;
};

// Sum of per-term losses on the tape (a 1x1 value). Terms are grouped by
// relation in ascending relation order, so the summation order depends only
// on the term list.
template <typename Real>
typename Tape<Real>::Var loss_on_tape(Tape<Real>& tape, ScoringPass<Real>& pass, std::span<const LossTerm> terms);

// "No decrease for `window` consecutive epochs": each epoch that fails to
// improve strictly on the best value so far counts; an improvement resets.
class EarlyStopping {
public:
    explicit EarlyStopping(std::size_t window) : window_(window) {}

    // Records an epoch's validation value; returns true when training stops.
    bool observe(double value);
    bool last_improved() const { return last_improved_; }
    std::size_t best_epoch() const { return best_epoch_; }  // 1-based, 0 before any observation
    double best_value() const { return best_; }
    std::size_t epochs() const { return epochs_; }

private:
    std::size_t window_;
    std::size_t epochs_ = 0;
    std::size_t best_epoch_ = 0;
    std::size_t failures_ = 0;
    double best_ = std::numeric_limits<double>::infinity();
    bool last_improved_ = false;
};

struct EpochRecord {
    std::size_t epoch;  // 1-based
    double train_loss;
    double val_loss;
    double seconds;
};

struct TrainState {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    std::size_t skipped_terms = 0;  // positives without an admissible negative
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mean edge loss over the fold's positives paired one-to-one with its frozen
// negatives, across the given relations.
double fold_loss(const EdgeSplit& split, const EdgeScorer& scorer, std::span<const RelationId> relations, Fold fold);

template <typename Real>
double validation_loss(const LinkModel<Real>& model, const EdgeSplit& split);

// Trains in place and leaves the best-validation parameters in the model.
// `train_graph` is the training view of the split (negative rejection set).
template <typename Real>
TrainState train(LinkModel<Real>& model, const MultimodalGraph& train_graph, const EdgeSplit& split,
                 const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace polylink

#include "polylink/trainer.hpp"

#include "polylink/errors.hpp"
#include "polylink/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <stdexcept>
#include <string>

namespace polylink {

void TrainConfig::validate() const {
    if (!(lr >= 0.0) || !std::isfinite(lr)) throw std::invalid_argument("learning rate must be finite and >= 0");
    if (max_epochs == 0) throw std::invalid_argument("max_epochs must be >= 1");
    if (first_epoch == 0 || first_epoch > max_epochs) throw std::invalid_argument("first_epoch must lie in [1, max_epochs]");
    if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("dropout must lie in [0, 1)");
    if (early_stop_window == 0) throw std::invalid_argument("early_stop_window must be >= 1");
    if (negatives_per_positive == 0) throw std::invalid_argument("negatives_per_positive must be >= 1");
    if (hidden_dims.empty()) throw std::invalid_argument("hidden_dims must name at least one layer");
    for (std::size_t d : hidden_dims) {
        if (d == 0) throw std::invalid_argument("hidden_dims entries must be >= 1");
    }
}

std::size_t NegativeSampler::admissible(RelationId relation, std::uint32_t head) const {
    const Relation& rel = graph_->relation(relation);
    const std::size_t n_tail = graph_->node_count(rel.tail_kind);
    const std::size_t excluded = rel.head_adjacency.degree(head) + (rel.head_kind == rel.tail_kind ? 1 : 0);
    return n_tail > excluded ? n_tail - excluded : 0;
}

std::optional<Edge> NegativeSampler::sample(RelationId relation, Edge positive, Rng& rng) const {
    const Relation& rel = graph_->relation(relation);
    const std::size_t n_tail = graph_->node_count(rel.tail_kind);
    const bool same_kind = rel.head_kind == rel.tail_kind;
    const std::size_t count = admissible(relation, positive.head);
    if (count == 0) return std::nullopt;
    const auto taken = rel.head_adjacency.row(positive.head);
    auto rejected = [&](std::uint32_t n) {
        return (same_kind && n == positive.head) || std::binary_search(taken.begin(), taken.end(), n);
    };
    if (count * 4 >= n_tail) {
        for (;;) {
            const auto n = static_cast<std::uint32_t>(uniform_index(rng, n_tail));
            if (!rejected(n)) return Edge{positive.head, n};
        }
    }
    std::size_t pick = uniform_index(rng, count);
    for (std::uint32_t n = 0; n < n_tail; ++n) {
        if (rejected(n)) continue;
        if (pick-- == 0) return Edge{positive.head, n};
    }
    return std::nullopt;
}

double edge_loss(double p_pos, double p_neg) {
    constexpr double lo = 1e-12;
    constexpr double hi = 1.0 - 1e-12;
    p_pos = std::clamp(p_pos, lo, hi);
    p_neg = std::clamp(p_neg, lo, hi);
    return -std::log(p_pos) - std::log(1.0 - p_neg);
}

template <typename Real>
typename Tape<Real>::Var loss_on_tape(Tape<Real>& tape, ScoringPass<Real>& pass, std::span<const LossTerm> terms) {
    using Var = typename Tape<Real>::Var;
    std::map<RelationId, std::vector<std::size_t>> by_relation;
    for (std::size_t t = 0; t < terms.size(); ++t) by_relation[terms[t].relation].push_back(t);

    Var total = tape.constant(Matrix<Real>::Zero(1, 1));
    for (const auto& [relation, indices] : by_relation) {
        std::vector<Edge> positives;
        std::vector<Edge> negatives;
        std::vector<Real> weights;
        positives.reserve(indices.size());
        for (std::size_t t : indices) {
            positives.push_back(terms[t].positive);
            const auto& negs = terms[t].negatives;
            for (const Edge& n : negs) {
                negatives.push_back(n);
                weights.push_back(Real(1) / static_cast<Real>(negs.size()));
            }
        }
        Var pos_scores = pass.raw_scores(relation, positives);
        Var term = tape.reduce_sum(tape.log(tape.sigmoid(pos_scores)));
        if (!negatives.empty()) {
            Var neg_scores = pass.raw_scores(relation, negatives);
            Var log_complement = tape.log(tape.sigmoid(tape.scale(neg_scores, Real(-1))));
            Matrix<Real> w = Eigen::Map<const Matrix<Real>>(weights.data(), static_cast<Eigen::Index>(weights.size()), 1);
            term = tape.add(term, tape.reduce_sum(tape.hadamard(log_complement, tape.constant(std::move(w)))));
        }
        total = tape.add(total, tape.scale(term, Real(-1)));
    }
    return total;
}

bool EarlyStopping::observe(double value) {
    ++epochs_;
    if (value < best_) {
        best_ = value;
        best_epoch_ = epochs_;
        failures_ = 0;
        last_improved_ = true;
        return false;
    }
    last_improved_ = false;
    ++failures_;
    return failures_ >= window_;
}

double fold_loss(const EdgeSplit& split, const EdgeScorer& scorer, std::span<const RelationId> relations, Fold fold) {
    double sum = 0.0;
    std::size_t count = 0;
    for (RelationId r : relations) {
        const RelationSplit& rs = split.relations.at(r);
        const auto& pos = fold == Fold::Val ? rs.val_pos : rs.test_pos;
        const auto& neg = fold == Fold::Val ? rs.val_neg : rs.test_neg;
        if (pos.empty()) continue;
        if (neg.size() != pos.size()) throw std::invalid_argument("evaluation negatives must pair one-to-one with positives");
        const auto p_pos = scorer(r, pos);
        const auto p_neg = scorer(r, neg);
        for (std::size_t k = 0; k < pos.size(); ++k) sum += edge_loss(p_pos[k], p_neg[k]);
        count += pos.size();
    }
    if (count == 0) throw std::invalid_argument(fold == Fold::Val ? "empty validation set" : "empty test set");
    return sum / static_cast<double>(count);
}

template <typename Real>
double validation_loss(const LinkModel<Real>& model, const EdgeSplit& split) {
    const auto relations = model.relations();
    return fold_loss(split, model.scorer(), relations, Fold::Val);
}

template <typename Real>
TrainState train(LinkModel<Real>& model, const MultimodalGraph& train_graph, const EdgeSplit& split,
                 const TrainConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    const auto relations = model.relations();
    std::vector<std::pair<RelationId, Edge>> positives;
    for (RelationId r : relations) {
        for (const Edge& e : split.relations.at(r).train_pos) positives.emplace_back(r, e);
    }
    if (positives.empty()) throw std::invalid_argument("training set is empty");

    NegativeSampler sampler(train_graph);
    EarlyStopping stopper(config.early_stop_window);
    const AdamConfig adam{config.lr};
    TrainState state;
    auto best = model.params().snapshot();

    for (std::size_t epoch = config.first_epoch; epoch <= config.max_epochs; ++epoch) {
        const auto started = std::chrono::steady_clock::now();
        Rng rng(derive_seed(config.seed, epoch));
        // Shuffle a fresh copy so an epoch's order depends only on its own seed.
        auto order = positives;
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0.0;
        std::size_t counted = 0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<LossTerm> terms;
            terms.reserve(stop - start);
            for (std::size_t k = start; k < stop; ++k) {
                const auto& [r, e] = order[k];
                LossTerm term{r, e, {}};
                for (std::size_t n = 0; n < config.negatives_per_positive; ++n) {
                    auto neg = sampler.sample(r, e, rng);
                    if (!neg) break;
                    term.negatives.push_back(*neg);
                }
                if (term.negatives.empty()) {
                    ++state.skipped_terms;
                    continue;
                }
                terms.push_back(std::move(term));
            }
            if (terms.empty()) continue;
            try {
                Tape<Real> tape;
                auto pass = model.forward(tape, true, config.dropout, rng);
                auto loss = loss_on_tape<Real>(tape, *pass, terms);
                const double value = static_cast<double>(tape.value(loss)(0, 0));
                if (!std::isfinite(value)) throw NumericError("non-finite loss");
                tape.backward(loss);
                adam_step(model.params(), adam);
                loss_sum += value;
                counted += terms.size();
            } catch (const NumericError& err) {
                throw NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch_index) + ": " +
                                   err.what());
            }
        }

        const EdgeScorer scorer = model.scorer();
        const double val_loss = fold_loss(split, scorer, relations, Fold::Val);
        double criterion = val_loss;
        if (config.stop_on == StopCriterion::ValidationAuprc) {
            std::vector<RelationId> side_effects;
            for (RelationId r : relations) {
                if (train_graph.relation(r).ref.family == RelationFamily::SideEffect) side_effects.push_back(r);
            }
            criterion = -evaluate(train_graph, split, scorer, Fold::Val, side_effects).macro.auprc;
        }
        const bool stop = stopper.observe(criterion);
        if (stopper.last_improved()) best = model.params().snapshot();

        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        EpochRecord record{epoch, counted ? loss_sum / static_cast<double>(counted) : 0.0, val_loss, seconds};
        state.epochs.push_back(record);
        if (on_epoch) on_epoch(record);
        if (stop) break;
    }
    model.params().restore(best);
    state.best_epoch = stopper.best_epoch() ? stopper.best_epoch() + config.first_epoch - 1 : 0;
    return state;
}

template Tape<float>::Var loss_on_tape(Tape<float>&, ScoringPass<float>&, std::span<const LossTerm>);
template Tape<double>::Var loss_on_tape(Tape<double>&, ScoringPass<double>&, std::span<const LossTerm>);
template double validation_loss(const LinkModel<float>&, const EdgeSplit&);
template double validation_loss(const LinkModel<double>&, const EdgeSplit&);
template TrainState train(LinkModel<float>&, const MultimodalGraph&, const EdgeSplit&, const TrainConfig&,
                          const EpochCallback&);
template TrainState train(LinkModel<double>&, const MultimodalGraph&, const EdgeSplit&, const TrainConfig&,
                          const EpochCallback&);

}  // namespace polylink

#pragma once

#include "polylink/graph.hpp"
#include "polylink/model.hpp"

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace polylink {

enum class Fold { Val, Test };

// Scores with binary labels (1 = positive) for one relation.
struct ScoredItem {
    double score;
    int label;
};

// Mann-Whitney probability that a positive outranks a negative; ties count 1/2.
double auroc(std::span<const ScoredItem> items);
// Step-interpolated average precision. Tied scores form one block whose
// precision is taken at the block end.
double auprc(std::span<const ScoredItem> items);
// Average precision truncated at rank 50 and normalized by min(50, n_pos).
// A tied block straddling rank 50 contributes pro rata.
double ap_at_50(std::span<const ScoredItem> items);

struct RelationMetrics {
    RelationId relation;
    std::string relation_id;
    std::size_t n_pos;
    std::size_t n_neg;
    double auroc;
    double auprc;
    double ap50;
};

struct MacroMetrics {
    double auroc = 0.0;
    double auprc = 0.0;
    double ap50 = 0.0;
};

struct EvalReport {
    std::vector<RelationMetrics> relations;
    MacroMetrics macro;
    std::size_t warnings = 0;  // relations excluded because a metric was undefined
};

// Per-relation metrics over the fold's positives and its frozen negatives.
// An empty `relations` span means every side-effect relation.
EvalReport evaluate(const MultimodalGraph& graph, const EdgeSplit& split, const EdgeScorer& scorer, Fold fold,
                    std::span<const RelationId> relations = {});

// relation_id,n_pos,n_neg,auroc,auprc,ap50 with a final "macro" row.
void write_report_csv(std::ostream& out, const EvalReport& report);

// The n highest (best = true) or lowest relations by AUPRC, ties by relation id.
std::vector<RelationMetrics> extreme_relations(const EvalReport& report, std::size_t n, bool best);

}  // namespace polylink

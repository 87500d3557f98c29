#include "polylink/metrics.hpp"

#include "polylink/csv.hpp"
#include "polylink/errors.hpp"

#include <algorithm>
#include <ostream>

namespace polylink {

namespace {

struct Counts {
    std::size_t pos = 0;
    std::size_t neg = 0;
};

Counts count(std::span<const ScoredItem> items) {
    Counts c;
    for (const auto& it : items) (it.label ? c.pos : c.neg)++;
    return c;
}

std::vector<ScoredItem> descending(std::span<const ScoredItem> items) {
    std::vector<ScoredItem> sorted(items.begin(), items.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const ScoredItem& a, const ScoredItem& b) { return a.score > b.score; });
    return sorted;
}

}  // namespace

double auroc(std::span<const ScoredItem> items) {
    const Counts c = count(items);
    if (c.pos == 0 || c.neg == 0) throw UndefinedMetricError("AUROC needs at least one positive and one negative");
    const auto sorted = descending(items);
    // Walk from the top: every negative below a positive is a win, ties half.
    double wins = 0.0;
    std::size_t neg_above = 0;
    for (std::size_t s = 0; s < sorted.size();) {
        std::size_t e = s;
        std::size_t pos_block = 0;
        std::size_t neg_block = 0;
        while (e < sorted.size() && sorted[e].score == sorted[s].score) {
            (sorted[e].label ? pos_block : neg_block)++;
            ++e;
        }
        const double below = static_cast<double>(c.neg - neg_above - neg_block);
        wins += static_cast<double>(pos_block) * (below + 0.5 * static_cast<double>(neg_block));
        neg_above += neg_block;
        s = e;
    }
    return wins / (static_cast<double>(c.pos) * static_cast<double>(c.neg));
}

double auprc(std::span<const ScoredItem> items) {
    const Counts c = count(items);
    if (c.pos == 0) throw UndefinedMetricError("average precision needs at least one positive");
    const auto sorted = descending(items);
    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t s = 0; s < sorted.size();) {
        std::size_t e = s;
        std::size_t pos_block = 0;
        while (e < sorted.size() && sorted[e].score == sorted[s].score) pos_block += sorted[e++].label ? 1 : 0;
        tp += pos_block;
        if (pos_block) ap += static_cast<double>(pos_block) * static_cast<double>(tp) / static_cast<double>(e);
        s = e;
    }
    return ap / static_cast<double>(c.pos);
}

double ap_at_50(std::span<const ScoredItem> items) {
    constexpr std::size_t cutoff = 50;
    const Counts c = count(items);
    if (c.pos == 0) throw UndefinedMetricError("average precision needs at least one positive");
    const auto sorted = descending(items);
    double ap = 0.0;
    std::size_t tp = 0;
    for (std::size_t s = 0; s < sorted.size() && s < cutoff;) {
        std::size_t e = s;
        std::size_t pos_block = 0;
        while (e < sorted.size() && sorted[e].score == sorted[s].score) pos_block += sorted[e++].label ? 1 : 0;
        tp += pos_block;
        const double inside = e <= cutoff ? 1.0 : static_cast<double>(cutoff - s) / static_cast<double>(e - s);
        if (pos_block) ap += inside * static_cast<double>(pos_block) * static_cast<double>(tp) / static_cast<double>(e);
        s = e;
    }
    return ap / static_cast<double>(std::min(cutoff, c.pos));
}

EvalReport evaluate(const MultimodalGraph& graph, const EdgeSplit& split, const EdgeScorer& scorer, Fold fold,
                    std::span<const RelationId> relations) {
    std::vector<RelationId> chosen(relations.begin(), relations.end());
    if (chosen.empty()) chosen = graph.side_effect_relations();
    EvalReport report;
    for (RelationId r : chosen) {
        const RelationSplit& rs = split.relations.at(r);
        const auto& pos = fold == Fold::Val ? rs.val_pos : rs.test_pos;
        const auto& neg = fold == Fold::Val ? rs.val_neg : rs.test_neg;
        std::vector<ScoredItem> items;
        items.reserve(pos.size() + neg.size());
        if (!pos.empty()) {
            for (double p : scorer(r, pos)) items.push_back({p, 1});
        }
        if (!neg.empty()) {
            for (double p : scorer(r, neg)) items.push_back({p, 0});
        }
        try {
            report.relations.push_back(
                {r, graph.relation(r).id(), pos.size(), neg.size(), auroc(items), auprc(items), ap_at_50(items)});
        } catch (const UndefinedMetricError&) {
            ++report.warnings;
        }
    }
    if (report.relations.empty()) throw UndefinedMetricError("no relation has a defined metric on this fold");
    for (const auto& m : report.relations) {
        report.macro.auroc += m.auroc;
        report.macro.auprc += m.auprc;
        report.macro.ap50 += m.ap50;
    }
    const auto n = static_cast<double>(report.relations.size());
    report.macro.auroc /= n;
    report.macro.auprc /= n;
    report.macro.ap50 /= n;
    return report;
}

void write_report_csv(std::ostream& out, const EvalReport& report) {
    out << "relation_id,n_pos,n_neg,auroc,auprc,ap50\n";
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    for (const auto& m : report.relations) {
        write_csv_row(out, {m.relation_id, std::to_string(m.n_pos), std::to_string(m.n_neg), format_real(m.auroc),
                            format_real(m.auprc), format_real(m.ap50)});
        n_pos += m.n_pos;
        n_neg += m.n_neg;
    }
    write_csv_row(out, {"macro", std::to_string(n_pos), std::to_string(n_neg), format_real(report.macro.auroc),
                        format_real(report.macro.auprc), format_real(report.macro.ap50)});
}

std::vector<RelationMetrics> extreme_relations(const EvalReport& report, std::size_t n, bool best) {
    auto out = report.relations;
    std::sort(out.begin(), out.end(), [best](const RelationMetrics& a, const RelationMetrics& b) {
        if (a.auprc != b.auprc) return best ? a.auprc > b.auprc : a.auprc < b.auprc;
        return a.relation < b.relation;
    });
    if (out.size() > n) out.resize(n);
    return out;
}

}  // namespace polylink

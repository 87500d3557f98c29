#include "polylink/stats.hpp"

#include "polylink/csv.hpp"
#include "polylink/errors.hpp"
#include "polylink/random.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>

namespace polylink {

double jaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.empty() && b.empty()) return 0.0;
    std::size_t common = 0;
    for (std::size_t i = 0, j = 0; i < a.size() && j < b.size();) {
        if (a[i] == b[j]) {
            ++common;
            ++i;
            ++j;
        } else if (a[i] < b[j]) {
            ++i;
        } else {
            ++j;
        }
    }
    return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

double jaccard(std::vector<std::string> a, std::vector<std::string> b) {
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    if (a.empty() && b.empty()) return 0.0;
    std::vector<std::string> common;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
    return static_cast<double>(common.size()) / static_cast<double>(a.size() + b.size() - common.size());
}

JaccardStrata jaccard_strata(const MultimodalGraph& graph, PairSource source, std::optional<RelationId> relation,
                             std::size_t random_count, std::uint64_t seed) {
    const Relation& targets = graph.relation(kDrugTarget);
    if (targets.edges.empty()) throw std::invalid_argument("Jaccard strata need drug-target edges");

    std::vector<Edge> combo;
    for (RelationId r : graph.side_effect_relations()) {
        const auto& e = graph.relation(r).edges;
        combo.insert(combo.end(), e.begin(), e.end());
    }
    std::sort(combo.begin(), combo.end());
    combo.erase(std::unique(combo.begin(), combo.end()), combo.end());

    std::vector<Edge> pairs;
    switch (source) {
        case PairSource::ComboPairs:
            pairs = std::move(combo);
            break;
        case PairSource::ComboPairsWith: {
            if (!relation) throw std::invalid_argument("combo_pairs_with needs a relation");
            const Relation& rel = graph.relation(*relation);
            if (rel.ref.family != RelationFamily::SideEffect) throw std::invalid_argument("combo_pairs_with needs a side-effect relation");
            pairs = rel.edges;
            break;
        }
        case PairSource::RandomPairs: {
            const std::size_t n = graph.node_count(NodeKind::Drug);
            if (n < 2) throw std::invalid_argument("random pairs need at least two drugs");
            const std::size_t count = random_count ? random_count : combo.size();
            if (count == 0) throw std::invalid_argument("random pair count is zero and there are no combo pairs to match");
            Rng rng(seed);
            pairs.reserve(count);
            while (pairs.size() < count) {
                const auto i = static_cast<std::uint32_t>(uniform_index(rng, n));
                const auto j = static_cast<std::uint32_t>(uniform_index(rng, n));
                if (i != j) pairs.push_back({std::min(i, j), std::max(i, j)});
            }
            break;
        }
    }

    JaccardStrata s;
    s.pairs = pairs.size();
    if (pairs.empty()) return s;
    for (const Edge& e : pairs) {
        const double j = jaccard(targets.head_adjacency.row(e.head), targets.head_adjacency.row(e.tail));
        if (j == 0.0) {
            s.zero += 1.0;
        } else if (j < 0.5) {
            s.low += 1.0;
        } else {
            s.high += 1.0;
        }
    }
    const auto n = static_cast<double>(pairs.size());
    s.zero /= n;
    s.low /= n;
    s.high /= n;
    return s;
}

double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    double sf;
    if (lambda < 1.18) {
        const double pi2 = std::numbers::pi * std::numbers::pi;
        double cdf = 0.0;
        for (int k = 1; k <= 50; ++k) {
            const double m = 2.0 * k - 1.0;
            cdf += std::exp(-m * m * pi2 / (8.0 * lambda * lambda));
        }
        sf = 1.0 - std::sqrt(2.0 * std::numbers::pi) / lambda * cdf;
    } else {
        sf = 0.0;
        for (int k = 1; k <= 100; ++k) {
            const double term = std::exp(-2.0 * k * k * lambda * lambda);
            sf += (k % 2 ? 2.0 : -2.0) * term;
            if (term < 1e-300) break;
        }
    }
    return std::clamp(sf, 0.0, 1.0);
}

KsResult ks_2sample(std::span<const double> x, std::span<const double> y) {
    if (x.empty() || y.empty()) throw std::invalid_argument("ks_2sample needs two non-empty samples");
    std::vector<double> a(x.begin(), x.end());
    std::vector<double> b(y.begin(), y.end());
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    const auto n = static_cast<double>(a.size());
    const auto m = static_cast<double>(b.size());
    double d = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.size() || j < b.size()) {
        double t;
        if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
            t = a[i];
        } else {
            t = b[j];
        }
        while (i < a.size() && a[i] == t) ++i;
        while (j < b.size() && b[j] == t) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
    }
    return {d, kolmogorov_sf(std::sqrt(n * m / (n + m)) * d)};
}

CooccurrenceTable::CooccurrenceTable(std::vector<std::string> names, std::vector<std::vector<Edge>> pair_sets)
    : names_(std::move(names)) {
    if (names_.size() != pair_sets.size()) throw std::invalid_argument("one pair set per label is required");
    for (auto& set : pair_sets) {
        std::sort(set.begin(), set.end());
        set.erase(std::unique(set.begin(), set.end()), set.end());
        pool_.insert(pool_.end(), set.begin(), set.end());
    }
    std::sort(pool_.begin(), pool_.end());
    pool_.erase(std::unique(pool_.begin(), pool_.end()), pool_.end());

    const std::size_t n = names_.size();
    members_.resize(n);
    for (std::size_t k = 0; k < n; ++k) {
        for (const Edge& e : pair_sets[k]) {
            members_[k].push_back(static_cast<std::uint32_t>(std::lower_bound(pool_.begin(), pool_.end(), e) - pool_.begin()));
        }
    }
    counts_.assign(n * n, 0);
    // Per-pair label lists give every overlap in one pass over the pool.
    std::vector<std::vector<std::uint32_t>> labels(pool_.size());
    for (std::size_t k = 0; k < n; ++k) {
        for (std::uint32_t p : members_[k]) labels[p].push_back(static_cast<std::uint32_t>(k));
    }
    for (const auto& ls : labels) {
        for (std::uint32_t a : ls) {
            for (std::uint32_t b : ls) ++counts_[a * n + b];
        }
    }
}

CooccurrenceTable CooccurrenceTable::from_graph(const MultimodalGraph& graph) {
    std::vector<std::string> names;
    std::vector<std::vector<Edge>> sets;
    for (RelationId r : graph.side_effect_relations()) {
        names.push_back(graph.relation(r).id());
        sets.push_back(graph.relation(r).edges);
    }
    return CooccurrenceTable(std::move(names), std::move(sets));
}

std::size_t CooccurrenceTable::index(const std::string& name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw LookupError("unknown side effect '" + name + "'");
    return static_cast<std::size_t>(it - names_.begin());
}

std::string_view to_string(Verdict verdict) {
    switch (verdict) {
        case Verdict::Over: return "over";
        case Verdict::Under: return "under";
        case Verdict::Insignificant: return "insignificant";
    }
    return "";
}

namespace {

// Floyd's subset sampling; marks chosen positions with `stamp`.
void draw_subset(std::size_t pool, std::size_t size, Rng& rng, std::vector<std::uint32_t>& marks, std::uint32_t stamp,
                 std::vector<std::uint32_t>* chosen) {
    for (std::size_t j = pool - size; j < pool; ++j) {
        auto t = static_cast<std::uint32_t>(uniform_index(rng, j + 1));
        if (marks[t] == stamp) t = static_cast<std::uint32_t>(j);
        marks[t] = stamp;
        if (chosen) chosen->push_back(t);
    }
}

}  // namespace

std::vector<CooccurrenceResult> cooccurrence_test(const CooccurrenceTable& table, std::size_t focus,
                                                  std::vector<std::size_t> others, std::size_t n_permutations,
                                                  double alpha, std::uint64_t seed) {
    if (focus >= table.size()) throw LookupError("focus label index out of range");
    if (n_permutations < 100) throw std::invalid_argument("n_permutations must be >= 100");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (others.empty()) {
        for (std::size_t k = 0; k < table.size(); ++k) others.push_back(k);
        std::stable_sort(others.begin(), others.end(),
                         [&](std::size_t a, std::size_t b) { return table.total(a) > table.total(b); });
        others.erase(std::remove(others.begin(), others.end(), focus), others.end());
        if (others.size() > 50) others.resize(50);
    } else {
        for (std::size_t o : others) {
            if (o >= table.size()) throw LookupError("label index out of range");
        }
        others.erase(std::remove(others.begin(), others.end(), focus), others.end());
    }
    if (others.empty()) return {};

    const std::size_t pool = table.pool_size();
    std::vector<std::vector<std::size_t>> null(others.size(), std::vector<std::size_t>(n_permutations));
    std::vector<std::uint32_t> focus_marks(pool, 0);
    std::vector<std::uint32_t> other_marks(pool, 0);
    std::vector<std::uint32_t> chosen;
    std::uint32_t other_stamp = 0;
    for (std::size_t p = 0; p < n_permutations; ++p) {
        Rng rng(derive_seed(seed, p));
        const auto focus_stamp = static_cast<std::uint32_t>(p + 1);
        draw_subset(pool, table.total(focus), rng, focus_marks, focus_stamp, nullptr);
        for (std::size_t o = 0; o < others.size(); ++o) {
            chosen.clear();
            draw_subset(pool, table.total(others[o]), rng, other_marks, ++other_stamp, &chosen);
            std::size_t hits = 0;
            for (std::uint32_t t : chosen) hits += focus_marks[t] == focus_stamp ? 1 : 0;
            null[o][p] = hits;
        }
    }

    const double threshold = alpha / static_cast<double>(others.size());
    std::vector<CooccurrenceResult> out;
    for (std::size_t o = 0; o < others.size(); ++o) {
        double mean = 0.0;
        for (std::size_t v : null[o]) mean += static_cast<double>(v);
        mean /= static_cast<double>(n_permutations);
        const std::size_t observed = table.count(focus, others[o]);
        const double gap = std::abs(static_cast<double>(observed) - mean);
        std::size_t extreme = 0;
        for (std::size_t v : null[o]) extreme += std::abs(static_cast<double>(v) - mean) >= gap - 1e-9 ? 1 : 0;
        const double p_value = static_cast<double>(extreme + 1) / static_cast<double>(n_permutations + 1);
        Verdict verdict = Verdict::Insignificant;
        if (p_value <= threshold) verdict = static_cast<double>(observed) > mean ? Verdict::Over : Verdict::Under;
        out.push_back({others[o], observed, mean, p_value, verdict});
    }
    return out;
}

KsResult embedding_cooccurrence_distance(std::span<const Eigen::VectorXd> vectors, const CooccurrenceTable& table,
                                         std::size_t k, std::uint64_t seed) {
    const std::size_t n = table.size();
    if (vectors.size() != n) throw std::invalid_argument("one vector per label is required");
    if (k == 0 || k + 1 > n) throw std::invalid_argument("k must lie in [1, number of labels - 1]");
    Rng rng(seed);
    std::vector<double> near;
    std::vector<double> random;
    std::vector<std::size_t> candidates;
    for (std::size_t a = 0; a < n; ++a) {
        candidates.clear();
        for (std::size_t b = 0; b < n; ++b) {
            if (b != a) candidates.push_back(b);
        }
        std::vector<std::size_t> ranked = candidates;
        std::stable_sort(ranked.begin(), ranked.end(),
                         [&](std::size_t x, std::size_t y) { return table.count(a, x) > table.count(a, y); });
        double top = 0.0;
        for (std::size_t t = 0; t < k; ++t) top += (vectors[a] - vectors[ranked[t]]).norm();
        near.push_back(top / static_cast<double>(k));

        double drawn = 0.0;
        for (std::size_t t = 0; t < k; ++t) {
            const std::size_t pick = t + uniform_index(rng, candidates.size() - t);
            std::swap(candidates[t], candidates[pick]);
            drawn += (vectors[a] - vectors[candidates[t]]).norm();
        }
        random.push_back(drawn / static_cast<double>(k));
    }
    return ks_2sample(near, random);
}

void write_strata_csv(std::ostream& out, const std::vector<std::pair<std::string, JaccardStrata>>& rows) {
    out << "pair_source,n_pairs,jaccard_zero,jaccard_below_half,jaccard_half_or_more\n";
    for (const auto& [name, s] : rows) {
        write_csv_row(out, {name, std::to_string(s.pairs), format_real(s.zero), format_real(s.low), format_real(s.high)});
    }
}

void write_cooccurrence_csv(std::ostream& out, const CooccurrenceTable& table, std::size_t focus,
                            std::span<const CooccurrenceResult> results) {
    out << "focus,other,observed,null_mean,p_value,verdict\n";
    for (const auto& r : results) {
        write_csv_row(out, {table.name(focus), table.name(r.other), std::to_string(r.observed), format_real(r.null_mean),
                            format_real(r.p_value), std::string(to_string(r.verdict))});
    }
}

void write_verdict_summary(std::ostream& out, const CooccurrenceTable& table,
                           std::span<const CooccurrenceResult> results, std::size_t examples) {
    out << "verdict,percent,examples\n";
    for (Verdict v : {Verdict::Over, Verdict::Under, Verdict::Insignificant}) {
        std::size_t count = 0;
        std::string names;
        for (const auto& r : results) {
            if (r.verdict != v) continue;
            if (count < examples) names += (count ? ";" : "") + table.name(r.other);
            ++count;
        }
        const double percent = results.empty() ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(results.size());
        write_csv_row(out, {std::string(to_string(v)), format_real(percent), names});
    }
}

}  // namespace polylink

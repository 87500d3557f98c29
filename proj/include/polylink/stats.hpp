#pragma once

#include "polylink/graph.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace polylink {

// |A n B| / |A u B| over sorted, duplicate-free id lists; 0 when both are empty.
double jaccard(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);
double jaccard(std::vector<std::string> a, std::vector<std::string> b);

enum class PairSource { RandomPairs, ComboPairs, ComboPairsWith };

struct JaccardStrata {
    std::size_t pairs = 0;
    double zero = 0.0;  // Jaccard = 0
    double low = 0.0;   // 0 < Jaccard < 0.5
    double high = 0.0;  // 0.5 <= Jaccard <= 1
};

// Target-set overlap of drug pairs. Random pairs are distinct drugs drawn
// uniformly; `random_count` = 0 draws as many as there are combo pairs.
// `relation` is required for ComboPairsWith.
JaccardStrata jaccard_strata(const MultimodalGraph& graph, PairSource source, std::optional<RelationId> relation = {},
                             std::size_t random_count = 0, std::uint64_t seed = 0);

struct KsResult {
    double statistic;
    double p_value;
};

// Survival function of the asymptotic Kolmogorov distribution.
double kolmogorov_sf(double lambda);
KsResult ks_2sample(std::span<const double> x, std::span<const double> y);

// Drug-pair label sets per side effect and their pairwise overlap counts.
class CooccurrenceTable {
public:
    CooccurrenceTable(std::vector<std::string> names, std::vector<std::vector<Edge>> pair_sets);
    static CooccurrenceTable from_graph(const MultimodalGraph& graph);

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t k) const { return names_[k]; }
    std::size_t index(const std::string& name) const;  // LookupError when absent
    std::size_t count(std::size_t a, std::size_t b) const { return counts_[a * names_.size() + b]; }
    std::size_t total(std::size_t a) const { return count(a, a); }
    std::size_t pool_size() const { return pool_.size(); }
    // Positions in the pool of the pairs carrying label k.
    const std::vector<std::uint32_t>& members(std::size_t k) const { return members_[k]; }

private:
    std::vector<std::string> names_;
    std::vector<Edge> pool_;  // every labeled pair, sorted
    std::vector<std::vector<std::uint32_t>> members_;
    std::vector<std::size_t> counts_;
};

enum class Verdict { Over, Under, Insignificant };
std::string_view to_string(Verdict verdict);

struct CooccurrenceResult {
    std::size_t other;
    std::size_t observed;
    double null_mean;
    double p_value;
    Verdict verdict;
};

// Permutation test of each (focus, other) overlap against a null where every
// label set is redrawn as a uniform subset of the pool with its own size.
// Empty `others` means the 50 most frequent labels other than the focus.
std::vector<CooccurrenceResult> cooccurrence_test(const CooccurrenceTable& table, std::size_t focus,
                                                  std::vector<std::size_t> others, std::size_t n_permutations,
                                                  double alpha, std::uint64_t seed);

// KS comparison of mean distances to the k most co-occurring labels against
// mean distances to k labels drawn at random. `vectors` is aligned with the
// table's labels.
KsResult embedding_cooccurrence_distance(std::span<const Eigen::VectorXd> vectors, const CooccurrenceTable& table,
                                         std::size_t k, std::uint64_t seed);

void write_strata_csv(std::ostream& out, const std::vector<std::pair<std::string, JaccardStrata>>& rows);
void write_cooccurrence_csv(std::ostream& out, const CooccurrenceTable& table, std::size_t focus,
                            std::span<const CooccurrenceResult> results);
// verdict,percent,examples
void write_verdict_summary(std::ostream& out, const CooccurrenceTable& table,
                           std::span<const CooccurrenceResult> results, std::size_t examples = 3);

}  // namespace polylink

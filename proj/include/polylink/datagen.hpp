#pragma once

#include "polylink/graph.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace polylink {

struct SyntheticSpec {
    std::size_t n_drugs = 120;
    std::size_t n_proteins = 300;
    std::size_t n_side_effects = 12;
    std::size_t latent_dim = 8;
    double density_side_effect = 0.05;
    double density_ppi = 0.01;
    double density_target = 0.02;
    std::size_t feature_width = 16;
    // Edge probability is sigmoid(sharpness * standardized score + offset);
    // the offset is found by bisection to hit the density.
    double sharpness = 12.0;
    double feature_noise = 0.05;
    // The first `split_support` side effects load only on the upper half of
    // the latent axes and all others only on the lower half, so the former
    // share structure with the drug-target relation and the drug features
    // but not with the remaining side effects. 0 keeps every axis everywhere.
    std::size_t split_support = 0;
    std::uint64_t seed = 7;

    void validate() const;
};

// Planted parameters, indexed like the generated graph (nodes and relations).
struct PlantedTruth {
    Eigen::MatrixXd z_drug;     // n_drugs x d*
    Eigen::MatrixXd z_protein;  // n_proteins x d*
    Eigen::MatrixXd R;
    std::vector<Eigen::VectorXd> D;  // per RelationId; empty outside side effects
    Eigen::MatrixXd M_ppi;
    Eigen::MatrixXd M_dt;
    // Per RelationId: probability = sigmoid(sharpness * (g - mean) / sd + offset).
    std::vector<double> mean;
    std::vector<double> sd;
    std::vector<double> offset;
    double sharpness = 0.0;
};

struct SyntheticData {
    GraphInput input;  // what gets written as CSV
    MultimodalGraph graph;
    PlantedTruth truth;
};

// The graph is built from `input` with a relation threshold of 1, exactly as
// ingestion of the emitted files would build it.
SyntheticData generate(const SyntheticSpec& spec);

// External identifier of the k-th generated side effect (0-based).
std::string synthetic_side_effect_id(std::size_t k);

std::vector<double> oracle_scores(const PlantedTruth& truth, const MultimodalGraph& graph, RelationId relation,
                                  std::span<const Edge> pairs);

// bio-decagon-{ppi,targets,combo,mono}.csv in the published column layout.
void write_dataset(const std::filesystem::path& dir, const GraphInput& input);

}  // namespace polylink

#pragma once

#include "polylink/datagen.hpp"
#include "polylink/decoder.hpp"
#include "polylink/encoder.hpp"
#include "polylink/graph.hpp"
#include "polylink/trainer.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace polylink {

struct DatasetPaths {
    std::filesystem::path ppi;
    std::filesystem::path targets;
    std::filesystem::path combo;
    std::filesystem::path mono;

    // The four bio-decagon-*.csv files inside `dir`.
    static DatasetPaths in_directory(const std::filesystem::path& dir);
};

struct FileReport {
    std::string source;  // ppi, targets, combo, mono
    std::size_t rows = 0;
    std::size_t kept = 0;
    std::size_t blank_lines = 0;
    std::map<std::string, std::size_t> dropped;  // reason -> rows

    std::size_t dropped_total() const;
};

struct IngestReport {
    std::vector<FileReport> files;
    std::size_t drugs = 0;
    std::size_t proteins = 0;
    std::size_t ppi_edges = 0;
    std::size_t target_edges = 0;
    std::size_t side_effect_edges = 0;
    std::size_t side_effect_relations = 0;
    std::size_t dropped_side_effects = 0;
    std::size_t leaked_feature_columns = 0;
    std::vector<std::string> warnings;
};

struct IngestResult {
    MultimodalGraph graph;
    IngestReport report;
};

// Columns are located by header name. A missing file, header or column is a
// FormatError naming the file and column.
IngestResult ingest(const DatasetPaths& paths, std::size_t min_relation_count);

// scope,metric,value
void write_ingest_report(std::ostream& out, const IngestReport& report);

enum class ModelKind { Main, Rescal, Dedicom };
std::string_view to_string(ModelKind kind);
ModelKind parse_model(std::string_view name);

struct RunConfig {
    std::optional<std::string> data;  // directory holding the published CSV files
    bool synthetic = false;
    SyntheticSpec synth;
    TrainConfig train;
    bool activate_last = true;
    ModelKind model = ModelKind::Main;
    std::size_t baseline_dim = 32;
    std::string out = "out";
    int precision = 64;
    std::size_t min_relation_count = 500;
    Fold fold = Fold::Test;
    std::size_t top_k = 100;
    std::size_t n_permutations = 1000;
    double alpha = 0.05;
    std::string focus;  // side-effect id for the co-occurrence test; empty = most frequent

    // Throws std::invalid_argument naming the offending field.
    void validate() const;
    std::string to_json() const;
    // Canonical JSON of every field; hex FNV-1a of it.
    std::string digest() const;
};

// Applies the keys of a flat JSON object to `config`; unknown keys are a
// FormatError.
void apply_json(RunConfig& config, const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);

// node_kind,node_id,z_0,...
void write_embeddings_csv(std::ostream& out, const MultimodalGraph& graph, const NodeEmbeddings& z);
// relation_id,name,d_0,...
void write_diagonals_csv(std::ostream& out, const MultimodalGraph& graph, const std::vector<Eigen::VectorXd>& diagonals);
// rank,relation_id,drug_i,drug_j,prob
void write_predictions_csv(std::ostream& out, const MultimodalGraph& graph, const std::vector<Prediction>& predictions);
// model,epoch,train_loss,val_loss,seconds
void write_training_log(std::ostream& out, const std::string& model, const std::vector<EpochRecord>& epochs);

}  // namespace polylink

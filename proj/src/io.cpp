#include "polylink/io.hpp"

#include "polylink/csv.hpp"
#include "polylink/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

namespace polylink {

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
    return {dir / "bio-decagon-ppi.csv", dir / "bio-decagon-targets.csv", dir / "bio-decagon-combo.csv",
            dir / "bio-decagon-mono.csv"};
}

std::size_t FileReport::dropped_total() const {
    std::size_t n = 0;
    for (const auto& [reason, count] : dropped) n += count;
    return n;
}

namespace {

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Reads a headed CSV and returns, per well-formed record, the fields in the
// order of `columns`.
std::vector<std::vector<std::string>> read_table(const std::filesystem::path& path, const std::vector<std::string>& columns,
                                                 FileReport& report, std::vector<std::string>& warnings) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open file");
    CsvReader reader(in);
    std::optional<std::vector<std::string>> header;
    while ((header = reader.next()) && header->empty()) ++report.blank_lines;
    if (!header) {
        warnings.push_back(report.source + " file is empty");
        return {};
    }
    if (!header->empty() && header->front().rfind("\xEF\xBB\xBF", 0) == 0) header->front().erase(0, 3);
    std::vector<std::size_t> position;
    for (const auto& column : columns) {
        auto it = std::find_if(header->begin(), header->end(), [&](const std::string& h) { return trim(h) == column; });
        if (it == header->end()) throw FormatError(path.string() + ": missing column '" + column + "'");
        position.push_back(static_cast<std::size_t>(it - header->begin()));
    }
    std::vector<std::vector<std::string>> records;
    while (auto record = reader.next()) {
        if (record->empty()) {
            ++report.blank_lines;
            continue;
        }
        ++report.rows;
        if (record->size() != header->size()) {
            ++report.dropped["wrong column count"];
            continue;
        }
        std::vector<std::string> fields;
        for (std::size_t p : position) fields.push_back((*record)[p]);
        records.push_back(std::move(fields));
    }
    if (records.empty() && report.rows == 0) warnings.push_back(report.source + " file has no records");
    return records;
}

}  // namespace

IngestResult ingest(const DatasetPaths& paths, std::size_t min_relation_count) {
    IngestReport report;
    report.files.resize(4);
    FileReport& ppi_r = report.files[0];
    FileReport& targets_r = report.files[1];
    FileReport& combo_r = report.files[2];
    FileReport& mono_r = report.files[3];
    ppi_r.source = "ppi";
    targets_r.source = "targets";
    combo_r.source = "combo";
    mono_r.source = "mono";

    GraphInput input;
    for (auto& f : read_table(paths.ppi, {"Gene1", "Gene2"}, ppi_r, report.warnings)) {
        input.ppi_edges.push_back({std::move(f[0]), std::move(f[1])});
    }
    for (auto& f : read_table(paths.targets, {"STITCH", "Gene"}, targets_r, report.warnings)) {
        input.target_edges.push_back({std::move(f[0]), std::move(f[1])});
    }
    for (auto& f : read_table(paths.combo, {"STITCH1", "STITCH2", "Polypharmacy Side Effect", "Side Effect Name"}, combo_r,
                              report.warnings)) {
        input.combo_edges.push_back({std::move(f[0]), std::move(f[1]), std::move(f[2]), std::move(f[3])});
    }
    for (auto& f : read_table(paths.mono, {"STITCH", "Individual Side Effect", "Side Effect Name"}, mono_r,
                              report.warnings)) {
        input.mono_features.push_back({std::move(f[0]), std::move(f[1]), std::move(f[2])});
    }

    BuildResult built = build_graph(input, min_relation_count);
    std::set<std::size_t> rejected_combo;
    std::set<std::size_t> rejected_mono;
    for (const auto& err : built.rejected) {
        for (auto& f : report.files) {
            if (f.source == err.source) ++f.dropped[err.reason];
        }
        if (err.source == "combo") rejected_combo.insert(err.record);
        if (err.source == "mono") rejected_mono.insert(err.record);
    }
    const MultimodalGraph& g = built.graph;
    for (std::size_t k = 0; k < input.combo_edges.size(); ++k) {
        if (!rejected_combo.count(k) && !g.find_side_effect(trim(input.combo_edges[k].side_effect_id))) {
            ++combo_r.dropped["side effect below min_relation_count"];
        }
    }
    for (std::size_t k = 0; k < input.mono_features.size(); ++k) {
        if (!rejected_mono.count(k) && g.find_side_effect(trim(input.mono_features[k].feature_id))) {
            ++mono_r.dropped["feature matches a retained side effect"];
        }
    }
    for (auto& f : report.files) f.kept = f.rows - f.dropped_total();

    report.drugs = g.node_count(NodeKind::Drug);
    report.proteins = g.node_count(NodeKind::Protein);
    report.ppi_edges = g.relation(kProteinProtein).edges.size();
    report.target_edges = g.relation(kDrugTarget).edges.size();
    for (RelationId r : g.side_effect_relations()) report.side_effect_edges += g.relation(r).edges.size();
    report.side_effect_relations = g.side_effect_relations().size();
    report.dropped_side_effects = built.dropped_side_effects;
    report.leaked_feature_columns = built.leaked_feature_columns;
    if (report.side_effect_relations == 0) report.warnings.push_back("no side-effect relation retained");
    return {std::move(built.graph), std::move(report)};
}

void write_ingest_report(std::ostream& out, const IngestReport& report) {
    out << "scope,metric,value\n";
    auto row = [&out](const std::string& scope, const std::string& metric, std::size_t value) {
        write_csv_row(out, {scope, metric, std::to_string(value)});
    };
    for (const auto& f : report.files) {
        row(f.source, "rows", f.rows);
        row(f.source, "kept", f.kept);
        row(f.source, "dropped", f.dropped_total());
        row(f.source, "blank_lines", f.blank_lines);
        for (const auto& [reason, count] : f.dropped) row(f.source, "dropped: " + reason, count);
    }
    row("graph", "drugs", report.drugs);
    row("graph", "proteins", report.proteins);
    row("graph", "protein_protein_edges", report.ppi_edges);
    row("graph", "drug_target_edges", report.target_edges);
    row("graph", "side_effect_edges", report.side_effect_edges);
    row("graph", "side_effect_relations", report.side_effect_relations);
    row("graph", "dropped_side_effects", report.dropped_side_effects);
    row("graph", "leaked_feature_columns", report.leaked_feature_columns);
    for (const auto& w : report.warnings) row("warning", w, 1);
}

std::string_view to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::Main: return "main";
        case ModelKind::Rescal: return "rescal";
        case ModelKind::Dedicom: return "dedicom";
    }
    return "";
}

ModelKind parse_model(std::string_view name) {
    if (name == "main") return ModelKind::Main;
    if (name == "rescal") return ModelKind::Rescal;
    if (name == "dedicom") return ModelKind::Dedicom;
    throw std::invalid_argument("unknown model '" + std::string(name) + "' (expected main, rescal or dedicom)");
}

void RunConfig::validate() const {
    if (data && synthetic) throw std::invalid_argument("config names both a data directory and a synthetic spec");
    if (synthetic) synth.validate();
    train.validate();
    if (precision != 32 && precision != 64) throw std::invalid_argument("precision must be 32 or 64");
    if (baseline_dim == 0) throw std::invalid_argument("baseline_dim must be >= 1");
    if (top_k == 0) throw std::invalid_argument("top_k must be >= 1");
    if (n_permutations < 100) throw std::invalid_argument("n_permutations must be >= 100");
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["data"] = data ? nlohmann::json(*data) : nlohmann::json(nullptr);
    j["synthetic"] = synthetic;
    j["synth_n_drugs"] = synth.n_drugs;
    j["synth_n_proteins"] = synth.n_proteins;
    j["synth_n_side_effects"] = synth.n_side_effects;
    j["synth_latent_dim"] = synth.latent_dim;
    j["synth_density_side_effect"] = synth.density_side_effect;
    j["synth_density_ppi"] = synth.density_ppi;
    j["synth_density_target"] = synth.density_target;
    j["synth_feature_width"] = synth.feature_width;
    j["synth_sharpness"] = synth.sharpness;
    j["synth_feature_noise"] = synth.feature_noise;
    j["synth_split_support"] = synth.split_support;
    j["synth_seed"] = synth.seed;
    j["lr"] = train.lr;
    j["max_epochs"] = train.max_epochs;
    j["batch_size"] = train.batch_size;
    j["dropout"] = train.dropout;
    j["early_stop_window"] = train.early_stop_window;
    j["negatives_per_positive"] = train.negatives_per_positive;
    j["seed"] = train.seed;
    j["hidden_dims"] = train.hidden_dims;
    j["stop_on"] = train.stop_on == StopCriterion::ValidationLoss ? "loss" : "auprc";
    j["activate_last"] = activate_last;
    j["model"] = std::string(to_string(model));
    j["baseline_dim"] = baseline_dim;
    j["out"] = out;
    j["precision"] = precision;
    j["min_relation_count"] = min_relation_count;
    j["fold"] = fold == Fold::Val ? "val" : "test";
    j["top_k"] = top_k;
    j["n_permutations"] = n_permutations;
    j["alpha"] = alpha;
    j["focus"] = focus;
    return j.dump(2);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string RunConfig::digest() const {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(to_json())));
    return buf;
}

void apply_json(RunConfig& c, const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw FormatError("config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "data") {
                c.data = v.is_null() ? std::nullopt : std::optional<std::string>(v.get<std::string>());
            } else if (key == "synthetic") {
                c.synthetic = v.get<bool>();
            } else if (key == "synth_n_drugs") {
                c.synth.n_drugs = v.get<std::size_t>();
            } else if (key == "synth_n_proteins") {
                c.synth.n_proteins = v.get<std::size_t>();
            } else if (key == "synth_n_side_effects") {
                c.synth.n_side_effects = v.get<std::size_t>();
            } else if (key == "synth_latent_dim") {
                c.synth.latent_dim = v.get<std::size_t>();
            } else if (key == "synth_density_side_effect") {
                c.synth.density_side_effect = v.get<double>();
            } else if (key == "synth_density_ppi") {
                c.synth.density_ppi = v.get<double>();
            } else if (key == "synth_density_target") {
                c.synth.density_target = v.get<double>();
            } else if (key == "synth_feature_width") {
                c.synth.feature_width = v.get<std::size_t>();
            } else if (key == "synth_sharpness") {
                c.synth.sharpness = v.get<double>();
            } else if (key == "synth_feature_noise") {
                c.synth.feature_noise = v.get<double>();
            } else if (key == "synth_split_support") {
                c.synth.split_support = v.get<std::size_t>();
            } else if (key == "synth_seed") {
                c.synth.seed = v.get<std::uint64_t>();
            } else if (key == "lr") {
                c.train.lr = v.get<double>();
            } else if (key == "max_epochs") {
                c.train.max_epochs = v.get<std::size_t>();
            } else if (key == "batch_size") {
                c.train.batch_size = v.get<std::size_t>();
            } else if (key == "dropout") {
                c.train.dropout = v.get<double>();
            } else if (key == "early_stop_window") {
                c.train.early_stop_window = v.get<std::size_t>();
            } else if (key == "negatives_per_positive") {
                c.train.negatives_per_positive = v.get<std::size_t>();
            } else if (key == "seed") {
                c.train.seed = v.get<std::uint64_t>();
            } else if (key == "hidden_dims") {
                c.train.hidden_dims = v.get<std::vector<std::size_t>>();
            } else if (key == "stop_on") {
                const auto s = v.get<std::string>();
                if (s != "loss" && s != "auprc") throw FormatError("stop_on must be \"loss\" or \"auprc\"");
                c.train.stop_on = s == "loss" ? StopCriterion::ValidationLoss : StopCriterion::ValidationAuprc;
            } else if (key == "activate_last") {
                c.activate_last = v.get<bool>();
            } else if (key == "model") {
                c.model = parse_model(v.get<std::string>());
            } else if (key == "baseline_dim") {
                c.baseline_dim = v.get<std::size_t>();
            } else if (key == "out") {
                c.out = v.get<std::string>();
            } else if (key == "precision") {
                c.precision = v.get<int>();
            } else if (key == "min_relation_count") {
                c.min_relation_count = v.get<std::size_t>();
            } else if (key == "fold") {
                const auto s = v.get<std::string>();
                if (s != "val" && s != "test") throw FormatError("fold must be \"val\" or \"test\"");
                c.fold = s == "val" ? Fold::Val : Fold::Test;
            } else if (key == "top_k") {
                c.top_k = v.get<std::size_t>();
            } else if (key == "n_permutations") {
                c.n_permutations = v.get<std::size_t>();
            } else if (key == "alpha") {
                c.alpha = v.get<double>();
            } else if (key == "focus") {
                c.focus = v.get<std::string>();
            } else {
                throw FormatError("unknown config key '" + key + "'");
            }
        } catch (const nlohmann::json::exception& e) {
            throw FormatError("config key '" + key + "' has the wrong type");
        }
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path.string() + ": cannot open config");
    std::stringstream buf;
    buf << in.rdbuf();
    RunConfig c;
    apply_json(c, buf.str());
    return c;
}

void write_embeddings_csv(std::ostream& out, const MultimodalGraph& graph, const NodeEmbeddings& z) {
    const std::size_t d = z.dim();
    out << "node_kind,node_id";
    for (std::size_t k = 0; k < d; ++k) out << ",z_" << k;
    out << '\n';
    for (NodeKind kind : {NodeKind::Drug, NodeKind::Protein}) {
        const Matrix<double>& m = z.of(kind);
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            out << to_string(kind) << ',' << csv_field(graph.node_id({kind, static_cast<std::uint32_t>(i)}));
            for (Eigen::Index k = 0; k < m.cols(); ++k) out << ',' << format_real(m(i, k));
            out << '\n';
        }
    }
}

void write_diagonals_csv(std::ostream& out, const MultimodalGraph& graph, const std::vector<Eigen::VectorXd>& diagonals) {
    std::size_t d = 0;
    for (const auto& v : diagonals) d = std::max(d, static_cast<std::size_t>(v.size()));
    out << "relation_id,name";
    for (std::size_t k = 0; k < d; ++k) out << ",d_" << k;
    out << '\n';
    for (RelationId r : graph.side_effect_relations()) {
        if (r >= diagonals.size() || diagonals[r].size() == 0) continue;
        out << csv_field(graph.relation(r).id()) << ',' << csv_field(graph.relation(r).name);
        for (Eigen::Index k = 0; k < diagonals[r].size(); ++k) out << ',' << format_real(diagonals[r](k));
        out << '\n';
    }
}

void write_predictions_csv(std::ostream& out, const MultimodalGraph& graph, const std::vector<Prediction>& predictions) {
    out << "rank,relation_id,drug_i,drug_j,prob\n";
    for (const auto& p : predictions) {
        const Relation& rel = graph.relation(p.relation);
        write_csv_row(out, {std::to_string(p.rank), rel.id(), graph.node_id({rel.head_kind, p.i}),
                            graph.node_id({rel.tail_kind, p.j}), format_real(p.prob)});
    }
}

void write_training_log(std::ostream& out, const std::string& model, const std::vector<EpochRecord>& epochs) {
    out << "model,epoch,train_loss,val_loss,seconds\n";
    for (const auto& e : epochs) {
        write_csv_row(out, {model, std::to_string(e.epoch), format_real(e.train_loss), format_real(e.val_loss),
                            format_real(e.seconds)});
    }
}

}  // namespace polylink

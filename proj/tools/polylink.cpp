#include "polylink/baselines.hpp"
#include "polylink/csv.hpp"
#include "polylink/datagen.hpp"
#include "polylink/errors.hpp"
#include "polylink/io.hpp"
#include "polylink/metrics.hpp"
#include "polylink/model.hpp"
#include "polylink/params.hpp"
#include "polylink/stats.hpp"
#include "polylink/trainer.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

namespace fs = std::filesystem;
using namespace polylink;

namespace {

struct CliError : std::runtime_error {
    CliError(std::string code, const std::string& message) : std::runtime_error(message), code(std::move(code)) {}
    std::string code;
};

std::ofstream create(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw CliError("E_IO", "cannot write " + path.string());
    return out;
}

const char* fold_name(Fold fold) { return fold == Fold::Val ? "val" : "test"; }

struct Dataset {
    MultimodalGraph graph;
    EdgeSplit split;
    MultimodalGraph train_graph;
};

MultimodalGraph load_graph(const RunConfig& config) {
    if (config.synthetic) return generate(config.synth).graph;
    if (!config.data) throw CliError("E_ARGUMENT", "no data source: pass --data DIR or set \"synthetic\": true");
    return ingest(DatasetPaths::in_directory(*config.data), config.min_relation_count).graph;
}

Dataset load_dataset(const RunConfig& config) {
    Dataset d;
    d.graph = load_graph(config);
    d.split = split_edges(d.graph, {}, config.train.seed);
    d.train_graph = training_graph(d.graph, d.split);
    return d;
}

fs::path checkpoint_path(const RunConfig& config) { return fs::path(config.out) / "checkpoint.bin"; }

LayerSpec layer_spec(const RunConfig& config) { return {config.train.hidden_dims, config.activate_last}; }

template <typename Real>
std::unique_ptr<LinkModel<Real>> fresh_model(const RunConfig& config, const MultimodalGraph& train_graph) {
    switch (config.model) {
        case ModelKind::Main:
            return std::make_unique<EncoderDecoderModel<Real>>(train_graph, layer_spec(config), config.train.seed);
        case ModelKind::Rescal:
            return std::make_unique<FactorizationModel<Real>>(train_graph, Factorization::Rescal, config.baseline_dim,
                                                              config.train.seed);
        case ModelKind::Dedicom:
            return std::make_unique<FactorizationModel<Real>>(train_graph, Factorization::Dedicom, config.baseline_dim,
                                                              config.train.seed);
    }
    return nullptr;
}

template <typename Real>
std::unique_ptr<LinkModel<Real>> model_from(ModelKind kind, const RunConfig& config, const MultimodalGraph& train_graph,
                                            ParamStore<Real> params) {
    switch (kind) {
        case ModelKind::Main:
            return std::make_unique<EncoderDecoderModel<Real>>(train_graph, layer_spec(config), std::move(params));
        case ModelKind::Rescal:
            return std::make_unique<FactorizationModel<Real>>(train_graph, Factorization::Rescal, std::move(params));
        case ModelKind::Dedicom:
            return std::make_unique<FactorizationModel<Real>>(train_graph, Factorization::Dedicom, std::move(params));
    }
    return nullptr;
}

template <typename Real>
struct Restored {
    std::unique_ptr<LinkModel<Real>> model;
    CheckpointMeta meta;
};

// Checkpoint metadata decides the model kind.
template <typename Real>
Restored<Real> restore(const RunConfig& config, const MultimodalGraph& train_graph) {
    const fs::path path = checkpoint_path(config);
    if (!fs::exists(path)) throw CliError("E_NO_CHECKPOINT", "no checkpoint at " + path.string() + "; run train first");
    std::ifstream in(path, std::ios::binary);
    Restored<Real> r;
    ParamStore<Real> params = load_checkpoint<Real>(in, &r.meta);
    auto it = r.meta.entries.find("model");
    const ModelKind kind = it == r.meta.entries.end() ? config.model : parse_model(it->second);
    r.model = model_from<Real>(kind, config, train_graph, std::move(params));
    return r;
}

// Drug-side embeddings and per-relation diagonals of whatever model is loaded.
template <typename Real>
std::pair<NodeEmbeddings, std::vector<Eigen::VectorXd>> factors(const LinkModel<Real>& model,
                                                                  const MultimodalGraph& graph) {
    if (auto* m = dynamic_cast<const EncoderDecoderModel<Real>*>(&model)) return {m->embeddings(), m->decoder_params().D};
    const auto& f = dynamic_cast<const FactorizationModel<Real>&>(model);
    NodeEmbeddings z;
    z.drug = f.params().at(f.factor_name()).value.template cast<double>();
    z.protein = Matrix<double>(0, z.drug.cols());
    std::vector<Eigen::VectorXd> diagonals(graph.relations().size());
    if (f.kind() == Factorization::Dedicom) {
        for (RelationId r : graph.side_effect_relations()) {
            diagonals[r] = f.params().at(f.diagonal_name(r)).value.row(0).transpose().template cast<double>();
        }
    }
    return {std::move(z), std::move(diagonals)};
}

template <typename F>
void with_precision(int precision, F&& f) {
    if (precision == 32) {
        f.template operator()<float>();
    } else {
        f.template operator()<double>();
    }
}

void cmd_ingest(const RunConfig& config) {
    if (!config.data) throw CliError("E_ARGUMENT", "ingest needs --data DIR");
    auto result = ingest(DatasetPaths::in_directory(*config.data), config.min_relation_count);
    auto out = create(fs::path(config.out) / "ingest_report.csv");
    write_ingest_report(out, result.report);
    std::cout << "drugs=" << result.report.drugs << " proteins=" << result.report.proteins
              << " side_effect_relations=" << result.report.side_effect_relations << '\n';
    for (const auto& w : result.report.warnings) std::cout << "warning: " << w << '\n';
}

void cmd_synth(RunConfig config) {
    const SyntheticData data = generate(config.synth);
    const fs::path dir = fs::path(config.out) / "data";
    write_dataset(dir, data.input);
    config.synthetic = false;
    config.data = dir.string();
    config.min_relation_count = 1;
    auto out = create(fs::path(config.out) / "config.json");
    out << config.to_json() << '\n';
    std::cout << "wrote " << dir.string() << " and " << (fs::path(config.out) / "config.json").string() << '\n';
}

void cmd_train(const RunConfig& config, bool resume) {
    const Dataset d = load_dataset(config);
    with_precision(config.precision, [&]<typename Real>() {
        std::unique_ptr<LinkModel<Real>> model;
        TrainConfig tc = config.train;
        if (resume) {
            auto r = restore<Real>(config, d.train_graph);
            model = std::move(r.model);
            tc.first_epoch = std::stoul(r.meta.entries.at("epochs")) + 1;
            if (tc.first_epoch > tc.max_epochs) throw CliError("E_ARGUMENT", "checkpoint already reached max_epochs");
        } else {
            model = fresh_model<Real>(config, d.train_graph);
        }
        std::vector<EpochRecord> log;
        const TrainState state = train(*model, d.train_graph, d.split, tc, [&](const EpochRecord& e) {
            log.push_back(e);
            std::cout << "epoch " << e.epoch << " train_loss=" << format_real(e.train_loss)
                      << " val_loss=" << format_real(e.val_loss) << '\n';
        });
        if (state.skipped_terms) {
            std::cout << "warning: " << state.skipped_terms << " positives had no admissible negative and were skipped\n";
        }
        CheckpointMeta meta;
        meta.entries["model"] = model->name();
        meta.entries["precision"] = std::to_string(config.precision);
        meta.entries["config_digest"] = config.digest();
        meta.entries["best_epoch"] = std::to_string(state.best_epoch);
        meta.entries["epochs"] = std::to_string(state.epochs.empty() ? tc.first_epoch - 1 : state.epochs.back().epoch);
        {
            auto out = create(checkpoint_path(config));
            save_checkpoint(out, model->params(), meta);
        }
        auto logf = create(fs::path(config.out) / "training_log.csv");
        write_training_log(logf, model->name(), log);
        auto manifest = create(fs::path(config.out) / "split.csv");
        write_split_manifest(manifest, d.graph, d.split);
        std::cout << "best_epoch=" << state.best_epoch << " checkpoint=" << checkpoint_path(config).string() << '\n';
    });
}

void cmd_evaluate(const RunConfig& config) {
    const Dataset d = load_dataset(config);
    with_precision(config.precision, [&]<typename Real>() {
        auto r = restore<Real>(config, d.train_graph);
        const EvalReport report = evaluate(d.graph, d.split, r.model->scorer(), config.fold);
        const fs::path dir(config.out);
        auto out = create(dir / (std::string("eval_") + fold_name(config.fold) + ".csv"));
        write_report_csv(out, report);
        auto ext = create(dir / (std::string("eval_") + fold_name(config.fold) + "_extremes.csv"));
        ext << "group,rank,relation_id,name,auprc\n";
        for (bool best : {true, false}) {
            std::size_t rank = 0;
            for (const auto& m : extreme_relations(report, 10, best)) {
                write_csv_row(ext, {best ? "best" : "worst", std::to_string(++rank), m.relation_id,
                                    d.graph.relation(m.relation).name, format_real(m.auprc)});
            }
        }
        std::cout << "model=" << r.model->name() << " fold=" << fold_name(config.fold)
                  << " relations=" << report.relations.size() << " macro_auroc=" << format_real(report.macro.auroc)
                  << " macro_auprc=" << format_real(report.macro.auprc)
                  << " macro_ap50=" << format_real(report.macro.ap50) << '\n';
        if (report.warnings) std::cout << "warning: " << report.warnings << " relations excluded (undefined metric)\n";
    });
}

void cmd_predict(const RunConfig& config) {
    const Dataset d = load_dataset(config);
    with_precision(config.precision, [&]<typename Real>() {
        auto r = restore<Real>(config, d.train_graph);
        const auto relations = d.graph.side_effect_relations();
        const ExcludePredicate known = [&d](RelationId rel, Edge e) { return d.graph.has_edge(rel, e); };
        std::vector<Prediction> top;
        if (auto* m = dynamic_cast<EncoderDecoderModel<Real>*>(r.model.get())) {
            top = score_all_pairs(m->embeddings(), d.train_graph, relations, m->decoder_params(), known, config.top_k);
        } else {
            top = top_k_pairs(d.train_graph, relations, r.model->scorer(), known, config.top_k);
        }
        auto out = create(fs::path(config.out) / "predictions.csv");
        write_predictions_csv(out, d.graph, top);
        std::cout << "predictions=" << top.size() << '\n';
    });
}

void cmd_stats(const RunConfig& config) {
    const fs::path dir(config.out);
    const MultimodalGraph graph = load_graph(config);
    const CooccurrenceTable table = CooccurrenceTable::from_graph(graph);
    if (table.size() == 0) throw CliError("E_ARGUMENT", "no side-effect relations to analyse");
    std::size_t focus = 0;
    if (config.focus.empty()) {
        for (std::size_t k = 1; k < table.size(); ++k) {
            if (table.total(k) > table.total(focus)) focus = k;
        }
    } else {
        focus = table.index(config.focus);
    }

    if (!graph.relation(kDrugTarget).edges.empty()) {
        const RelationId focus_relation = *graph.find_side_effect(table.name(focus));
        std::vector<std::pair<std::string, JaccardStrata>> rows;
        rows.emplace_back("random_pairs", jaccard_strata(graph, PairSource::RandomPairs, {}, 0, config.train.seed));
        rows.emplace_back("combo_pairs", jaccard_strata(graph, PairSource::ComboPairs));
        rows.emplace_back("combo_pairs_with:" + table.name(focus),
                          jaccard_strata(graph, PairSource::ComboPairsWith, focus_relation));
        auto out = create(dir / "jaccard_strata.csv");
        write_strata_csv(out, rows);
    } else {
        std::cout << "warning: no drug-target edges; Jaccard strata skipped\n";
    }

    if (table.size() > 1) {
        const auto results = cooccurrence_test(table, focus, {}, config.n_permutations, config.alpha, config.train.seed);
        auto out = create(dir / "cooccurrence.csv");
        write_cooccurrence_csv(out, table, focus, results);
        auto summary = create(dir / "cooccurrence_summary.csv");
        write_verdict_summary(summary, table, results);
    }

    if (!fs::exists(checkpoint_path(config))) {
        std::cout << "no checkpoint; embedding distance test skipped\n";
        return;
    }
    const EdgeSplit split = split_edges(graph, {}, config.train.seed);
    const MultimodalGraph train_graph = training_graph(graph, split);
    with_precision(config.precision, [&]<typename Real>() {
        auto r = restore<Real>(config, train_graph);
        const auto diagonals = factors(*r.model, graph).second;
        std::vector<Eigen::VectorXd> aligned;
        for (RelationId rel : graph.side_effect_relations()) aligned.push_back(diagonals[rel]);
        if (aligned.empty() || aligned.front().size() == 0) {
            std::cout << "model has no per-relation diagonals; embedding distance test skipped\n";
            return;
        }
        auto vec = create(dir / "diagonals.csv");
        write_diagonals_csv(vec, graph, diagonals);
        if (table.size() < 4) {
            std::cout << "fewer than 4 side effects; embedding distance test skipped\n";
            return;
        }
        const KsResult ks = embedding_cooccurrence_distance(aligned, table, 3, config.train.seed);
        auto out = create(dir / "embedding_distance.csv");
        out << "k,statistic,p_value\n";
        write_csv_row(out, {"3", format_real(ks.statistic), format_real(ks.p_value)});
    });
}

void cmd_export(const RunConfig& config) {
    const Dataset d = load_dataset(config);
    with_precision(config.precision, [&]<typename Real>() {
        auto r = restore<Real>(config, d.train_graph);
        const auto [z, diagonals] = factors(*r.model, d.graph);
        auto emb = create(fs::path(config.out) / "embeddings.csv");
        write_embeddings_csv(emb, d.graph, z);
        auto diag = create(fs::path(config.out) / "diagonals.csv");
        write_diagonals_csv(diag, d.graph, diagonals);
    });
}

void apply_threads() {
    const char* env = std::getenv("POLYLINK_THREADS");
    if (!env) return;
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || n < 1) throw CliError("E_ARGUMENT", "POLYLINK_THREADS must be a positive integer");
    Eigen::setNbThreads(static_cast<int>(n));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polylink: multirelational link prediction on drug-protein graphs"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path;
    std::string data;
    std::uint64_t seed = 0;
    std::string out;
    std::string model;
    std::string fold;
    std::size_t top_k = 0;
    std::size_t min_relation_count = 0;
    int precision = 0;
    std::size_t max_epochs = 0;
    bool synthetic = false;
    bool resume = false;

    app.add_option("--config", config_path, "JSON config file; flags override its values");
    auto* o_data = app.add_option("--data", data, "directory with the bio-decagon-*.csv files");
    auto* o_synth = app.add_flag("--synthetic", synthetic, "use the synthetic generator as the data source");
    auto* o_seed = app.add_option("--seed", seed, "split, initialization and sampling seed");
    auto* o_out = app.add_option("--out", out, "output directory");
    auto* o_model = app.add_option("--model", model, "main, rescal or dedicom")->check(CLI::IsMember({"main", "rescal", "dedicom"}));
    auto* o_fold = app.add_option("--fold", fold, "evaluation fold")->check(CLI::IsMember({"val", "test"}));
    auto* o_topk = app.add_option("--top-k", top_k, "number of ranked predictions");
    auto* o_minrel = app.add_option("--min-relation-count", min_relation_count, "minimum drug pairs per side effect (default 500)");
    auto* o_prec = app.add_option("--precision", precision, "64 or 32")->check(CLI::IsMember({32, 64}));
    auto* o_epochs = app.add_option("--max-epochs", max_epochs, "epoch cap");

    auto* c_ingest = app.add_subcommand("ingest", "parse the published CSV files and write an ingest report");
    auto* c_synth = app.add_subcommand("synth", "write a planted synthetic dataset and a config that trains on it");
    auto* c_train = app.add_subcommand("train", "train a model and write a checkpoint and training log");
    c_train->add_flag("--resume", resume, "continue from the checkpoint in --out");
    auto* c_eval = app.add_subcommand("evaluate", "per-relation AUROC, AUPRC and AP@50 on a fold");
    auto* c_predict = app.add_subcommand("predict", "rank unobserved drug pairs per side effect");
    auto* c_stats = app.add_subcommand("stats", "target overlap, co-occurrence tests and diagonal distances");
    auto* c_export = app.add_subcommand("export-embeddings", "node embeddings and per-relation diagonals as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        apply_threads();
        RunConfig config;
        if (!config_path.empty()) config = load_config(config_path);
        if (o_data->count()) {
            config.data = data;
            config.synthetic = false;
        }
        if (o_synth->count()) {
            config.synthetic = true;
            config.data.reset();
        }
        if (o_seed->count()) config.train.seed = seed;
        if (o_out->count()) config.out = out;
        if (o_model->count()) config.model = parse_model(model);
        if (o_fold->count()) config.fold = fold == "val" ? Fold::Val : Fold::Test;
        if (o_topk->count()) config.top_k = top_k;
        if (o_minrel->count()) config.min_relation_count = min_relation_count;
        if (o_prec->count()) config.precision = precision;
        if (o_epochs->count()) config.train.max_epochs = max_epochs;
        if (c_synth->parsed()) config.synthetic = true, config.data.reset();
        config.validate();

        std::cout << "seed=" << config.train.seed << " config_digest=" << config.digest() << '\n';
        if (c_ingest->parsed()) cmd_ingest(config);
        if (c_synth->parsed()) cmd_synth(config);
        if (c_train->parsed()) cmd_train(config, resume);
        if (c_eval->parsed()) cmd_evaluate(config);
        if (c_predict->parsed()) cmd_predict(config);
        if (c_stats->parsed()) cmd_stats(config);
        if (c_export->parsed()) cmd_export(config);
        return 0;
    } catch (const CliError& e) {
        std::cerr << "error " << e.code << ": " << e.what() << '\n';
    } catch (const FormatError& e) {
        std::cerr << "error E_FORMAT: " << e.what() << '\n';
    } catch (const SplitError& e) {
        std::cerr << "error E_SPLIT: " << e.what() << '\n';
    } catch (const NumericError& e) {
        std::cerr << "error E_NUMERIC: " << e.what() << '\n';
    } catch (const GenerationError& e) {
        std::cerr << "error E_GENERATION: " << e.what() << '\n';
    } catch (const UndefinedMetricError& e) {
        std::cerr << "error E_UNDEFINED_METRIC: " << e.what() << '\n';
    } catch (const LookupError& e) {
        std::cerr << "error E_LOOKUP: " << e.what() << '\n';
    } catch (const std::invalid_argument& e) {
        std::cerr << "error E_ARGUMENT: " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "error E_INTERNAL: " << e.what() << '\n';
    }
    return 2;
}

#include "doctest.h"

#include "polylink/csv.hpp"
#include "polylink/errors.hpp"
#include "polylink/io.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace polylink;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("polylink_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out << text;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_minimal_dataset(const fs::path& dir, const std::string& combo) {
    write_file(dir / "bio-decagon-ppi.csv", "Gene1,Gene2\n1,2\n2,3\n");
    write_file(dir / "bio-decagon-targets.csv", "STITCH,Gene\nC1,1\nC2,3\n");
    write_file(dir / "bio-decagon-combo.csv", combo);
    write_file(dir / "bio-decagon-mono.csv", "STITCH,Individual Side Effect,Side Effect Name\nC1,M1,\"rash, mild\"\n");
}

int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(POLYLINK_CLI) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_SUITE("cli-io") {

TEST_CASE("csv records") {
    std::istringstream in("a,b\r\n\"x, y\",\"say \"\"hi\"\"\"\n\n\"two\nlines\",z\n");
    CsvReader reader(in);
    CHECK(*reader.next() == std::vector<std::string>{"a", "b"});
    CHECK(*reader.next() == std::vector<std::string>{"x, y", "say \"hi\""});
    CHECK(reader.line() == 2);
    CHECK(reader.next()->empty());
    CHECK(*reader.next() == std::vector<std::string>{"two\nlines", "z"});
    CHECK(reader.line() == 4);
    CHECK_FALSE(reader.next().has_value());

    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("q\"") == "\"q\"\"\"");
    CHECK(parse_csv_line("1,,3") == std::vector<std::string>{"1", "", "3"});
    CHECK(format_real(0.1) == "0.1");
    CHECK(format_real(0.0) == "0");
    CHECK(std::stod(format_real(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("ingest a combo row") {
    const auto dir = fresh_dir("ingest_row");
    write_minimal_dataset(dir, "STITCH1,STITCH2,Polypharmacy Side Effect,Side Effect Name\nC1,C2,SE00001,headache\n");
    const auto result = ingest(DatasetPaths::in_directory(dir), 1);
    const auto& g = result.graph;
    const auto r = g.find_side_effect("SE00001");
    REQUIRE(r.has_value());
    REQUIRE(g.relation(*r).edges.size() == 1);
    const Edge e = g.relation(*r).edges[0];
    CHECK(g.node_id({NodeKind::Drug, e.head}) == "C1");
    CHECK(g.node_id({NodeKind::Drug, e.tail}) == "C2");
    CHECK(g.relation(*r).name == "headache");
    CHECK(g.features(NodeKind::Drug).names == std::vector<std::string>{"M1"});
    for (const auto& f : result.report.files) CHECK(f.rows == f.kept + f.dropped_total());
    fs::remove_all(dir);
}

TEST_CASE("missing column and missing file are format errors naming the culprit") {
    const auto dir = fresh_dir("ingest_missing");
    write_minimal_dataset(dir, "STITCH1,STITCH2,Side Effect Name\nC1,C2,headache\n");
    try {
        ingest(DatasetPaths::in_directory(dir), 1);
        FAIL("expected FormatError");
    } catch (const FormatError& e) {
        const std::string what = e.what();
        CHECK(what.find("bio-decagon-combo.csv") != std::string::npos);
        CHECK(what.find("Polypharmacy Side Effect") != std::string::npos);
    }
    fs::remove(dir / "bio-decagon-ppi.csv");
    CHECK_THROWS_AS(ingest(DatasetPaths::in_directory(dir), 1), FormatError);
    fs::remove_all(dir);
}

TEST_CASE("empty combo file yields no side effects and a warning") {
    const auto dir = fresh_dir("ingest_empty");
    write_minimal_dataset(dir, "");
    const auto result = ingest(DatasetPaths::in_directory(dir), 1);
    CHECK(result.graph.side_effect_relations().empty());
    CHECK_FALSE(result.report.warnings.empty());
    fs::remove_all(dir);
}

TEST_CASE("blank lines and bad rows are counted") {
    const auto dir = fresh_dir("ingest_counts");
    write_minimal_dataset(dir,
                          "STITCH1,STITCH2,Polypharmacy Side Effect,Side Effect Name\n"
                          "C1,C2,S1,a\n\nC2,C2,S1,a\nC1,C3\nC2,C3,S1,a\nC1,C3,S2,b\n");
    const auto result = ingest(DatasetPaths::in_directory(dir), 2);
    const FileReport* combo = nullptr;
    for (const auto& f : result.report.files) {
        if (f.source == "combo") combo = &f;
    }
    REQUIRE(combo != nullptr);
    CHECK(combo->blank_lines == 1);
    CHECK(combo->rows == 5);
    CHECK(combo->kept == 2);
    CHECK(combo->dropped.at("wrong column count") == 1);
    CHECK(combo->dropped.at("self-edge in symmetric relation") == 1);
    CHECK(combo->dropped.at("side effect below min_relation_count") == 1);
    CHECK(result.report.dropped_side_effects == 1);

    std::ostringstream report;
    write_ingest_report(report, result.report);
    CHECK(report.str().rfind("scope,metric,value\n", 0) == 0);
    fs::remove_all(dir);
}

TEST_CASE("config json") {
    RunConfig c;
    const std::string digest = c.digest();
    CHECK(digest.size() == 16);
    CHECK(RunConfig{}.digest() == digest);
    apply_json(c, R"({"lr": 0.01, "hidden_dims": [16, 8], "stop_on": "auprc", "synth_seed": 3})");
    CHECK(c.train.lr == 0.01);
    CHECK(c.train.hidden_dims == std::vector<std::size_t>{16, 8});
    CHECK(c.train.stop_on == StopCriterion::ValidationAuprc);
    CHECK(c.synth.seed == 3);
    CHECK(c.digest() != digest);

    RunConfig round;
    apply_json(round, c.to_json());
    CHECK(round.to_json() == c.to_json());

    CHECK_THROWS_AS(apply_json(c, R"({"learning_rate": 0.01})"), FormatError);
    CHECK_THROWS_AS(apply_json(c, R"({"lr": "fast"})"), FormatError);
    CHECK_THROWS_AS(apply_json(c, "[1]"), FormatError);
    c.precision = 16;
    CHECK_THROWS_AS(c.validate(), std::invalid_argument);

    CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("model names") {
    CHECK(parse_model("main") == ModelKind::Main);
    CHECK(parse_model("rescal") == ModelKind::Rescal);
    CHECK(to_string(ModelKind::Dedicom) == "dedicom");
    CHECK_THROWS(parse_model("gcn"));
}

TEST_CASE("cli: evaluate without a checkpoint") {
    const auto dir = fresh_dir("cli_nockpt");
    const int code = run_cli("--synthetic --out " + dir.string() + " evaluate", dir / "log.txt");
    CHECK(code == 2);
    CHECK(read_file(dir / "log.txt").find("error E_NO_CHECKPOINT:") != std::string::npos);
    fs::remove_all(dir);
}

TEST_CASE("cli: synth, train, evaluate, predict twice give identical files") {
    const auto dir = fresh_dir("cli_pipeline");
    const auto run = dir / "run";
    write_file(dir / "small.json",
               R"({"synth_n_drugs": 40, "synth_n_proteins": 60, "synth_n_side_effects": 3, "synth_density_side_effect": 0.1,)"
               R"( "max_epochs": 3, "hidden_dims": [8, 8], "batch_size": 64, "seed": 5, "top_k": 20})");
    auto pipeline = [&]() {
        fs::remove_all(run);
        const std::string common = "--out " + run.string();
        CHECK(run_cli("--config " + (dir / "small.json").string() + " " + common + " synth", dir / "synth.txt") == 0);
        const std::string cfg = "--config " + (run / "config.json").string();
        CHECK(run_cli(cfg + " train", dir / "train.txt") == 0);
        CHECK(run_cli(cfg + " evaluate", dir / "eval.txt") == 0);
        CHECK(run_cli(cfg + " predict", dir / "predict.txt") == 0);
        CHECK(run_cli(cfg + " export-embeddings", dir / "export.txt") == 0);
        std::map<std::string, std::string> files;
        for (const char* name : {"checkpoint.bin", "eval_test.csv", "predictions.csv", "split.csv", "embeddings.csv"}) {
            files[name] = read_file(run / name);
            CHECK_FALSE(files[name].empty());
        }
        return files;
    };
    const auto first = pipeline();
    CHECK(read_file(dir / "train.txt").find("config_digest=") != std::string::npos);
    const auto second = pipeline();
    for (const auto& [name, bytes] : first) CHECK_MESSAGE(second.at(name) == bytes, name);
    fs::remove_all(dir);
}

TEST_CASE("cli: argument errors") {
    const auto dir = fresh_dir("cli_args");
    CHECK(run_cli("train --out " + dir.string(), dir / "log.txt") == 2);
    CHECK(read_file(dir / "log.txt").find("error E_ARGUMENT:") != std::string::npos);
    write_file(dir / "bad.json", R"({"no_such_key": 1})");
    CHECK(run_cli("--config " + (dir / "bad.json").string() + " train", dir / "log2.txt") == 2);
    CHECK(read_file(dir / "log2.txt").find("error E_FORMAT:") != std::string::npos);
    fs::remove_all(dir);
}

}  // TEST_SUITE

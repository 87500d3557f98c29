#include "polylink/datagen.hpp"

#include "polylink/csv.hpp"
#include "polylink/decoder.hpp"
#include "polylink/errors.hpp"
#include "polylink/random.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_map>

namespace polylink {

void SyntheticSpec::validate() const {
    if (n_drugs < 2 || n_proteins < 2) throw std::invalid_argument("synthetic graph needs at least two drugs and two proteins");
    if (n_side_effects == 0) throw std::invalid_argument("n_side_effects must be >= 1");
    if (latent_dim == 0) throw std::invalid_argument("latent_dim must be >= 1");
    for (double d : {density_side_effect, density_ppi, density_target}) {
        if (!(d > 0.0 && d < 1.0)) throw std::invalid_argument("edge densities must lie in (0, 1)");
    }
    if (!(sharpness > 0.0) || !std::isfinite(sharpness)) throw std::invalid_argument("sharpness must be positive");
    if (split_support > n_side_effects) throw std::invalid_argument("split_support exceeds n_side_effects");
    if (split_support > 0 && latent_dim < 2) throw std::invalid_argument("split_support needs latent_dim >= 2");
    if (feature_noise < 0.0 || feature_noise >= 0.5) throw std::invalid_argument("feature_noise must lie in [0, 0.5)");
}

namespace {

Eigen::MatrixXd normal_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
    }
    return m;
}

struct Calibration {
    double mean;
    double sd;
    double offset;
};

// Standardizes the scores in place and finds the offset whose expected edge
// density equals `density`.
Calibration calibrate(std::vector<double>& g, double sharpness, double density) {
    double mean = 0.0;
    for (double x : g) mean += x;
    mean /= static_cast<double>(g.size());
    double var = 0.0;
    for (double x : g) var += (x - mean) * (x - mean);
    double sd = std::sqrt(var / static_cast<double>(g.size()));
    if (!(sd > 0.0)) sd = 1.0;
    for (double& x : g) x = (x - mean) / sd;

    auto expected = [&](double offset) {
        double sum = 0.0;
        for (double x : g) sum += sigmoid(sharpness * x + offset);
        return sum / static_cast<double>(g.size());
    };
    double lo = -60.0;
    double hi = 60.0;
    for (int round = 0; round < 50; ++round) {
        const double mid = 0.5 * (lo + hi);
        (expected(mid) < density ? lo : hi) = mid;
    }
    const double offset = 0.5 * (lo + hi);
    if (std::abs(expected(offset) - density) > 1e-3 * density) {
        throw GenerationError("edge density " + format_real(density) + " unreachable after 50 bisection rounds");
    }
    return {mean, sd, offset};
}

std::string drug_id(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "CID%09zu", k + 1);
    return buf;
}

std::string protein_id(std::size_t k) { return std::to_string(1001 + k); }


std::string side_effect_id(std::size_t k) { return synthetic_side_effect_id(k); }

std::string feature_id(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "C8%06zu", k + 1);
    return buf;
}

struct Family {
    std::vector<Edge> pairs;  // all candidate pairs, generator indices
    std::vector<double> g;
};

}  // namespace

std::string synthetic_side_effect_id(std::size_t k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "C9%06zu", k + 1);
    return buf;
}

SyntheticData generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto d = static_cast<Eigen::Index>(spec.latent_dim);
    const Eigen::MatrixXd z_drug = normal_matrix(static_cast<Eigen::Index>(spec.n_drugs), d, rng);
    const Eigen::MatrixXd z_protein = normal_matrix(static_cast<Eigen::Index>(spec.n_proteins), d, rng);
    const Eigen::MatrixXd R = normal_matrix(d, d, rng);
    const Eigen::MatrixXd M_ppi = normal_matrix(d, d, rng);
    const Eigen::MatrixXd M_dt = normal_matrix(d, d, rng);
    std::vector<Eigen::VectorXd> D_gen;
    for (std::size_t k = 0; k < spec.n_side_effects; ++k) {
        Eigen::VectorXd dk = normal_matrix(d, 1, rng).col(0);
        if (spec.split_support > 0) {
            const Eigen::Index half = d / 2;
            if (k < spec.split_support) {
                dk.head(half).setZero();
            } else {
                dk.tail(d - half).setZero();
            }
        }
        D_gen.push_back(std::move(dk));
    }

    const Eigen::MatrixXd R_sym = 0.5 * (R + R.transpose());
    const Eigen::MatrixXd M_ppi_sym = 0.5 * (M_ppi + M_ppi.transpose());

    auto same_kind_family = [](const Eigen::MatrixXd& z, const Eigen::MatrixXd& core) {
        Family f;
        const Eigen::MatrixXd scores = z * core * z.transpose();
        for (Eigen::Index i = 0; i < z.rows(); ++i) {
            for (Eigen::Index j = i + 1; j < z.rows(); ++j) {
                f.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
                f.g.push_back(scores(i, j));
            }
        }
        return f;
    };

    auto sample = [&](Family& f, double density, Calibration& cal) {
        cal = calibrate(f.g, spec.sharpness, density);
        std::vector<Edge> edges;
        for (std::size_t k = 0; k < f.pairs.size(); ++k) {
            if (uniform_real(rng, 0.0, 1.0) < sigmoid(spec.sharpness * f.g[k] + cal.offset)) edges.push_back(f.pairs[k]);
        }
        return edges;
    };

    SyntheticData out;
    GraphInput& input = out.input;

    Calibration ppi_cal{};
    Family ppi = same_kind_family(z_protein, M_ppi_sym);
    for (const Edge& e : sample(ppi, spec.density_ppi, ppi_cal)) {
        input.ppi_edges.push_back({protein_id(e.head), protein_id(e.tail)});
    }

    Calibration dt_cal{};
    Family dt;
    {
        const Eigen::MatrixXd scores = z_drug * M_dt * z_protein.transpose();
        for (Eigen::Index i = 0; i < scores.rows(); ++i) {
            for (Eigen::Index j = 0; j < scores.cols(); ++j) {
                dt.pairs.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j)});
                dt.g.push_back(scores(i, j));
            }
        }
    }
    for (const Edge& e : sample(dt, spec.density_target, dt_cal)) {
        input.target_edges.push_back({drug_id(e.head), protein_id(e.tail)});
    }

    std::vector<Calibration> se_cal(spec.n_side_effects);
    for (std::size_t k = 0; k < spec.n_side_effects; ++k) {
        const Eigen::MatrixXd core = D_gen[k].asDiagonal() * R_sym * D_gen[k].asDiagonal();
        Family se = same_kind_family(z_drug, core);
        const std::string id = side_effect_id(k);
        const std::string name = "synthetic side effect " + std::to_string(k + 1);
        for (const Edge& e : sample(se, spec.density_side_effect, se_cal[k])) {
            input.combo_edges.push_back({drug_id(e.head), drug_id(e.tail), id, name});
        }
    }

    for (std::size_t i = 0; i < spec.n_drugs; ++i) {
        for (std::size_t f = 0; f < spec.feature_width; ++f) {
            const auto axis = static_cast<Eigen::Index>(f % spec.latent_dim);
            const bool positive_side = (f / spec.latent_dim) % 2 == 0;
            bool active = positive_side ? z_drug(static_cast<Eigen::Index>(i), axis) > 0.0
                                        : z_drug(static_cast<Eigen::Index>(i), axis) < 0.0;
            if (uniform_real(rng, 0.0, 1.0) < spec.feature_noise) active = !active;
            if (active) input.mono_features.push_back({drug_id(i), feature_id(f), "synthetic feature " + std::to_string(f + 1)});
        }
    }

    BuildResult built = build_graph(input, 1);
    if (!built.rejected.empty()) throw GenerationError("generated records failed validation: " + built.rejected.front().reason);
    out.graph = std::move(built.graph);
    const MultimodalGraph& g = out.graph;

    PlantedTruth& t = out.truth;
    t.sharpness = spec.sharpness;
    t.z_drug = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.node_count(NodeKind::Drug)), d);
    t.z_protein = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(g.node_count(NodeKind::Protein)), d);
    for (std::size_t k = 0; k < spec.n_drugs; ++k) {
        if (auto idx = g.find_node(NodeKind::Drug, drug_id(k))) t.z_drug.row(*idx) = z_drug.row(static_cast<Eigen::Index>(k));
    }
    for (std::size_t k = 0; k < spec.n_proteins; ++k) {
        if (auto idx = g.find_node(NodeKind::Protein, protein_id(k))) {
            t.z_protein.row(*idx) = z_protein.row(static_cast<Eigen::Index>(k));
        }
    }
    t.R = R;
    t.M_ppi = M_ppi;
    t.M_dt = M_dt;
    const std::size_t n_rel = g.relations().size();
    t.D.assign(n_rel, Eigen::VectorXd());
    t.mean.assign(n_rel, 0.0);
    t.sd.assign(n_rel, 1.0);
    t.offset.assign(n_rel, 0.0);
    auto store = [&t](RelationId r, const Calibration& c) {
        t.mean[r] = c.mean;
        t.sd[r] = c.sd;
        t.offset[r] = c.offset;
    };
    store(kProteinProtein, ppi_cal);
    store(kDrugTarget, dt_cal);
    for (std::size_t k = 0; k < spec.n_side_effects; ++k) {
        if (auto r = g.find_side_effect(side_effect_id(k))) {
            t.D[*r] = D_gen[k];
            store(*r, se_cal[k]);
        }
    }
    return out;
}

std::vector<double> oracle_scores(const PlantedTruth& truth, const MultimodalGraph& graph, RelationId relation,
                                  std::span<const Edge> pairs) {
    const Relation& rel = graph.relation(relation);
    Eigen::MatrixXd core;
    switch (rel.ref.family) {
        case RelationFamily::ProteinProtein:
            core = 0.5 * (truth.M_ppi + truth.M_ppi.transpose());
            break;
        case RelationFamily::DrugTarget:
            core = truth.M_dt;
            break;
        case RelationFamily::SideEffect:
            core = truth.D[relation].asDiagonal() * (0.5 * (truth.R + truth.R.transpose())) * truth.D[relation].asDiagonal();
            break;
    }
    const Eigen::MatrixXd& zh = rel.head_kind == NodeKind::Drug ? truth.z_drug : truth.z_protein;
    const Eigen::MatrixXd& zt = rel.tail_kind == NodeKind::Drug ? truth.z_drug : truth.z_protein;
    std::vector<double> out;
    out.reserve(pairs.size());
    for (const Edge& e : pairs) {
        const double g = zh.row(e.head).dot(core * zt.row(e.tail).transpose());
        out.push_back(sigmoid(truth.sharpness * (g - truth.mean[relation]) / truth.sd[relation] + truth.offset[relation]));
    }
    return out;
}

void write_dataset(const std::filesystem::path& dir, const GraphInput& input) {
    std::filesystem::create_directories(dir);
    auto open = [&dir](const char* name) {
        std::ofstream f(dir / name, std::ios::binary);
        if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
        return f;
    };
    {
        auto f = open("bio-decagon-ppi.csv");
        f << "Gene1,Gene2\n";
        for (const auto& p : input.ppi_edges) write_csv_row(f, {p.a, p.b});
    }
    {
        auto f = open("bio-decagon-targets.csv");
        f << "STITCH,Gene\n";
        for (const auto& p : input.target_edges) write_csv_row(f, {p.a, p.b});
    }
    {
        auto f = open("bio-decagon-combo.csv");
        f << "STITCH1,STITCH2,Polypharmacy Side Effect,Side Effect Name\n";
        for (const auto& c : input.combo_edges) write_csv_row(f, {c.drug_a, c.drug_b, c.side_effect_id, c.side_effect_name});
    }
    {
        auto f = open("bio-decagon-mono.csv");
        f << "STITCH,Individual Side Effect,Side Effect Name\n";
        for (const auto& m : input.mono_features) write_csv_row(f, {m.drug, m.feature_id, m.feature_name});
    }
}

}  // namespace polylink

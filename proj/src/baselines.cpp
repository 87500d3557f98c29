#include "polylink/baselines.hpp"

#include "polylink/init.hpp"

#include <stdexcept>

namespace polylink {

namespace {

Eigen::Map<const Eigen::VectorXd> as_vector(std::span<const double> v) {
    return {v.data(), static_cast<Eigen::Index>(v.size())};
}

void check_dims(std::span<const double> a_i, std::span<const double> a_j, Eigen::Index d) {
    if (static_cast<Eigen::Index>(a_i.size()) != d || static_cast<Eigen::Index>(a_j.size()) != d) {
        throw std::invalid_argument("factor length does not match the core matrix");
    }
}

}  // namespace

EdgeScore rescal_score(std::span<const double> a_i, std::span<const double> a_j, const Eigen::MatrixXd& T_r) {
    if (T_r.rows() != T_r.cols()) throw std::invalid_argument("core matrix must be square");
    check_dims(a_i, a_j, T_r.rows());
    const Eigen::MatrixXd sym = 0.5 * (T_r + T_r.transpose());
    const double g = as_vector(a_i).dot(sym * as_vector(a_j));
    return {g, sigmoid(g)};
}

EdgeScore dedicom_score(std::span<const double> a_i, std::span<const double> a_j, const Eigen::VectorXd& u_r,
                        const Eigen::MatrixXd& T) {
    if (T.rows() != T.cols() || u_r.size() != T.rows()) throw std::invalid_argument("diagonal and core dimensions differ");
    check_dims(a_i, a_j, T.rows());
    const Eigen::MatrixXd sym = 0.5 * (T + T.transpose());
    const Eigen::VectorXd left = u_r.cwiseProduct(as_vector(a_i));
    const Eigen::VectorXd right = u_r.cwiseProduct(as_vector(a_j));
    const double g = left.dot(sym * right);
    return {g, sigmoid(g)};
}

std::string_view to_string(Factorization kind) {
    return kind == Factorization::Rescal ? "rescal" : "dedicom";
}

Factorization parse_factorization(std::string_view name) {
    if (name == "rescal") return Factorization::Rescal;
    if (name == "dedicom") return Factorization::Dedicom;
    throw std::invalid_argument("unknown factorization '" + std::string(name) + "'");
}

namespace {

template <typename Real>
class FactorizationPass final : public ScoringPass<Real> {
public:
    using Var = typename Tape<Real>::Var;
    using Getter = std::function<Var(const std::string&)>;

    FactorizationPass(Tape<Real>& tape, const FactorizationModel<Real>& model, Getter param, Var a)
        : tape_(tape), model_(model), param_(std::move(param)), a_(a) {}

    Var raw_scores(RelationId relation, std::span<const Edge> edges) override {
        std::vector<std::uint32_t> heads;
        std::vector<std::uint32_t> tails;
        for (const Edge& e : edges) {
            heads.push_back(e.head);
            tails.push_back(e.tail);
        }
        Var ai = tape_.gather_rows(a_, std::move(heads));
        Var aj = tape_.gather_rows(a_, std::move(tails));
        Var core = param_(model_.core_name(relation));
        Var sym = tape_.scale(tape_.add(core, tape_.transpose(core)), Real(0.5));
        if (model_.kind() == Factorization::Dedicom) {
            Var u = param_(model_.diagonal_name(relation));
            ai = tape_.mul_row(ai, u);
            aj = tape_.mul_row(aj, u);
        }
        return tape_.row_sum(tape_.hadamard(tape_.matmul(ai, sym), aj));
    }

private:
    Tape<Real>& tape_;
    const FactorizationModel<Real>& model_;
    Getter param_;
    Var a_;
};

}  // namespace

template <typename Real>
FactorizationModel<Real>::FactorizationModel(const MultimodalGraph& train_graph, Factorization kind, std::size_t dim,
                                             std::uint64_t seed)
    : graph_(&train_graph), kind_(kind), dim_(dim) {
    if (dim == 0) throw std::invalid_argument("factorization dimension must be >= 1");
    Rng rng(derive_seed(seed, 0x1418));
    params_.add(factor_name(), glorot_init<Real>(train_graph.node_count(NodeKind::Drug), dim, rng));
    if (kind_ == Factorization::Dedicom) params_.add(core_name(0), glorot_init<Real>(dim, dim, rng));
    for (RelationId r : train_graph.side_effect_relations()) {
        if (kind_ == Factorization::Rescal) {
            params_.add(core_name(r), glorot_init<Real>(dim, dim, rng));
        } else {
            params_.add(diagonal_name(r), glorot_uniform<Real>(1, dim, dim, dim, rng));
        }
    }
}

template <typename Real>
FactorizationModel<Real>::FactorizationModel(const MultimodalGraph& train_graph, Factorization kind,
                                             ParamStore<Real> params)
    : graph_(&train_graph), kind_(kind), params_(std::move(params)) {
    const auto& a = params_.at(factor_name()).value;
    if (static_cast<std::size_t>(a.rows()) != train_graph.node_count(NodeKind::Drug)) {
        throw std::invalid_argument("factor matrix rows do not match the drug count");
    }
    dim_ = static_cast<std::size_t>(a.cols());
    for (RelationId r : train_graph.side_effect_relations()) {
        const auto& core = params_.at(core_name(r)).value;
        if (static_cast<std::size_t>(core.rows()) != dim_ || static_cast<std::size_t>(core.cols()) != dim_) {
            throw std::invalid_argument("core matrix " + core_name(r) + " has the wrong shape");
        }
        if (kind_ == Factorization::Dedicom && static_cast<std::size_t>(params_.at(diagonal_name(r)).value.cols()) != dim_) {
            throw std::invalid_argument("diagonal " + diagonal_name(r) + " has the wrong length");
        }
    }
}

template <typename Real>
std::string FactorizationModel<Real>::factor_name() const {
    return std::string(to_string(kind_)) + ".A";
}

template <typename Real>
std::string FactorizationModel<Real>::core_name(RelationId relation) const {
    if (kind_ == Factorization::Dedicom) return "dedicom.T";
    return "rescal.T.r" + std::to_string(relation);
}

template <typename Real>
std::string FactorizationModel<Real>::diagonal_name(RelationId relation) const {
    return "dedicom.U.r" + std::to_string(relation);
}

template <typename Real>
std::vector<RelationId> FactorizationModel<Real>::relations() const {
    std::vector<RelationId> out;
    for (RelationId r : graph_->side_effect_relations()) {
        if (!graph_->relation(r).edges.empty()) out.push_back(r);
    }
    return out;
}

template <typename Real>
std::unique_ptr<ScoringPass<Real>> FactorizationModel<Real>::forward(Tape<Real>& tape, bool training,
                                                                     double dropout_rate, Rng& rng,
                                                                     bool differentiable) {
    typename FactorizationPass<Real>::Getter param;
    if (differentiable) {
        param = [this, &tape](const std::string& name) { return tape.parameter(params_, name); };
    } else {
        param = [this, &tape](const std::string& name) { return tape.frozen(params_, name); };
    }
    auto a = param(factor_name());
    if (training && dropout_rate > 0.0) a = tape.dropout(a, dropout_rate, rng);
    return std::make_unique<FactorizationPass<Real>>(tape, *this, param, a);
}

template <typename Real>
EdgeScorer FactorizationModel<Real>::scorer() const {
    struct State {
        Eigen::MatrixXd a;
        std::vector<Eigen::MatrixXd> cores;  // symmetrized, with the diagonals folded in
    };
    auto state = std::make_shared<State>();
    state->a = params_.at(factor_name()).value.template cast<double>();
    state->cores.resize(graph_->relations().size());
    for (RelationId r : graph_->side_effect_relations()) {
        const Eigen::MatrixXd core = params_.at(core_name(r)).value.template cast<double>();
        Eigen::MatrixXd sym = 0.5 * (core + core.transpose());
        if (kind_ == Factorization::Dedicom) {
            const Eigen::VectorXd u = params_.at(diagonal_name(r)).value.row(0).transpose().template cast<double>();
            sym = u.asDiagonal() * sym * u.asDiagonal();
        }
        state->cores[r] = std::move(sym);
    }
    const MultimodalGraph* g = graph_;
    return [state, g](RelationId relation, std::span<const Edge> edges) {
        if (g->relation(relation).ref.family != RelationFamily::SideEffect) {
            throw std::invalid_argument("factorization baselines only score side-effect relations");
        }
        const Eigen::MatrixXd& core = state->cores[relation];
        std::vector<double> out;
        out.reserve(edges.size());
        for (const Edge& e : edges) {
            out.push_back(sigmoid(state->a.row(e.head).dot(core * state->a.row(e.tail).transpose())));
        }
        return out;
    };
}

template class FactorizationModel<float>;
template class FactorizationModel<double>;

}  // namespace polylink

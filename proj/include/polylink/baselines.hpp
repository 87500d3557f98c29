#pragma once

#include "polylink/decoder.hpp"
#include "polylink/model.hpp"
#include "polylink/trainer.hpp"

#include <Eigen/Dense>

#include <memory>
#include <span>
#include <string>
#include <string_view>

namespace polylink {

// g = a_i^T T_sym a_j with T_sym = (T + T^T) / 2.
EdgeScore rescal_score(std::span<const double> a_i, std::span<const double> a_j, const Eigen::MatrixXd& T_r);
// g = a_i^T U T_sym U a_j with U = diag(u).
EdgeScore dedicom_score(std::span<const double> a_i, std::span<const double> a_j, const Eigen::VectorXd& u_r,
                        const Eigen::MatrixXd& T);

enum class Factorization { Rescal, Dedicom };

std::string_view to_string(Factorization kind);
Factorization parse_factorization(std::string_view name);

// Drug factor matrix A fitted directly over the side-effect relations; no
// encoder and no protein relations.
template <typename Real>
class FactorizationModel final : public LinkModel<Real> {
public:
    FactorizationModel(const MultimodalGraph& train_graph, Factorization kind, std::size_t dim, std::uint64_t seed);
    FactorizationModel(const MultimodalGraph& train_graph, Factorization kind, ParamStore<Real> params);
    FactorizationModel(MultimodalGraph&&, Factorization, std::size_t, std::uint64_t) = delete;
    FactorizationModel(MultimodalGraph&&, Factorization, ParamStore<Real>) = delete;

    std::string name() const override { return std::string(to_string(kind_)); }
    ParamStore<Real>& params() override { return params_; }
    const ParamStore<Real>& params() const override { return params_; }
    std::vector<RelationId> relations() const override;
    std::unique_ptr<ScoringPass<Real>> forward(Tape<Real>& tape, bool training, double dropout_rate, Rng& rng,
                                               bool differentiable = true) override;
    EdgeScorer scorer() const override;

    Factorization kind() const { return kind_; }
    std::size_t dim() const { return dim_; }
    std::string factor_name() const;
    std::string core_name(RelationId relation) const;  // T_r for RESCAL, T for DEDICOM
    std::string diagonal_name(RelationId relation) const;  // DEDICOM only

private:
    const MultimodalGraph* graph_;
    Factorization kind_;
    std::size_t dim_;
    ParamStore<Real> params_;
};

}  // namespace polylink

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nmd/decision.hpp"
#include "nmd/posterior.hpp"

namespace nmd {

enum class CriterionKind { marginal, general, ordered };

std::string to_string(CriterionKind kind);
CriterionKind parse_criterion_kind(const std::string& name);

enum class InitKind { zeros, ones, explicit_vector };

/// Objective choice plus the knobs of the relaxation that maximizes it.
struct CriterionSpec {
    CriterionKind kind = CriterionKind::general;
    double lambda = 1.0;
    /// Working order for the ordered kind; empty means identity.
    std::vector<std::size_t> order;
    /// Coordinate update order for one sweep; empty means ascending index.
    std::vector<std::size_t> sweep;
    InitKind init = InitKind::ones;
    DecisionVector init_vector;

    /// Rejects lambda < 1 for non-marginal kinds, lambda <= 0 for the marginal kind,
    /// and orderings that are not permutations of 0..m-1.
    void validate(std::size_t m) const;

    ConditioningSpec conditioning() const;
    std::vector<std::size_t> sweep_order(std::size_t m) const;
    std::vector<std::size_t> working_order(std::size_t m) const;
    DecisionVector initial(std::size_t m) const;
};

/// lambda / (1 + lambda)
double acceptance_threshold(double lambda);

/// Counts of the eight (d_i, r_i, z_i) cells.
struct ErrorDecomposition {
    std::size_t ne1 = 0;  // d=1 r=1 z=1
    std::size_t ne2 = 0;  // d=0 r=0 z=1
    std::size_t e1 = 0;   // d=1 r=0 z=1
    std::size_t e2 = 0;   // d=1 r=0 z=0
    std::size_t e3 = 0;   // d=1 r=1 z=0
    std::size_t e4 = 0;   // d=0 r=0 z=0
    std::size_t e5 = 0;   // d=0 r=1 z=1
    std::size_t e6 = 0;   // d=0 r=1 z=0

    std::size_t total() const noexcept { return ne1 + ne2 + e1 + e2 + e3 + e4 + e5 + e6; }
    std::size_t true_positives() const noexcept { return ne1; }
    /// E = E1 + E2 + E3 = sum_i d_i (1 - r_i z_i).
    std::size_t controlled_error() const noexcept { return e1 + e2 + e3; }

    friend bool operator==(const ErrorDecomposition&, const ErrorDecomposition&) = default;
};

/// z_i = 1 iff d_j == r_j for every j in the conditioning set of i.
DecisionVector z_vector(const DecisionVector& d, const DecisionVector& r, const ConditioningSpec& cond);

ErrorDecomposition decompose(const DecisionVector& d, const DecisionVector& r, const ConditioningSpec& cond);

/// g(d) = sum_i d_i (v_{i|d_j, j != i} - lambda/(1+lambda)).
double objective_general(const PosteriorSource& source, const DecisionVector& d, double lambda);

/// g(d) = sum_i d_i (v_{i|preceding} - lambda/(1+lambda)) along `order`.
double objective_ordered(const PosteriorSource& source, const DecisionVector& d, double lambda,
                         const std::vector<std::size_t>& order);

/// R(d) = -(1+lambda) sum_i d_i (v_i - lambda/(1+lambda)).
double guindani_risk(const std::vector<double>& v, const DecisionVector& d, double lambda);

/// sum_i d_i (1 - v_{i|.}) under the given conditioning.
double expected_error(const PosteriorSource& source, const DecisionVector& d, const ConditioningSpec& cond);

/// sum_i d_i (1 - v_i) with marginal posteriors.
double expected_false_positives(const std::vector<double>& v, const DecisionVector& d);

/// Binds a source to a criterion so the optimizer can evaluate g(d) and the
/// controlled error without re-deriving marginals on every call.
class Objective {
public:
    Objective(const PosteriorSource& source, const CriterionSpec& spec);

    std::size_t dimension() const noexcept { return m_; }
    const CriterionSpec& spec() const noexcept { return spec_; }

    /// The quantity the optimizer maximizes.
    double operator()(const DecisionVector& d) const;

    /// Posterior expectation of the controlled error at d.
    double expected_error(const DecisionVector& d) const;

private:
    const PosteriorSource* source_;
    CriterionSpec spec_;
    std::size_t m_;
    std::vector<double> marginals_;
};

}  // namespace nmd

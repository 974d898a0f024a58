#pragma once

// Posterior probabilities of hypothesis-indicator events.
//
// Every probability used by the decision criteria is the probability of an
// event of the form {h_j = p_j for all j in some set}. A PosteriorSource
// answers exactly that question; the free functions below assemble the
// marginal, joint, conditional and factorized quantities from it.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nmd/decision.hpp"

namespace nmd {

/// Pattern entry meaning "this coordinate is unconstrained".
inline constexpr std::int8_t kFree = -1;

/// An event pattern: entry j is 0, 1 or kFree.
using EventPattern = std::vector<std::int8_t>;

class PosteriorSource {
public:
    virtual ~PosteriorSource() = default;

    virtual std::size_t dimension() const noexcept = 0;

    /// Pr(h_j = pattern[j] for every constrained j | D).
    virtual double event_probability(std::span<const std::int8_t> pattern) const = 0;
};

/// S x m matrix of posterior indicator draws, h(s,i) = 1 when draw s has theta_i in Theta_1i.
///
/// Rows are bit-packed. All estimates share the same rows, so nested events
/// give nested counts and complementary events add up exactly at the count level.
class IndicatorSampleMatrix final : public PosteriorSource {
public:
    /// Throws std::invalid_argument on ragged or non-binary input or S == 0 / m == 0.
    /// Names default to h1..hm.
    explicit IndicatorSampleMatrix(const std::vector<std::vector<std::uint8_t>>& rows,
                                   std::vector<std::string> names = {});

    std::size_t dimension() const noexcept override { return m_; }
    std::size_t sample_count() const noexcept { return s_; }
    const std::vector<std::string>& names() const noexcept { return names_; }

    std::uint8_t at(std::size_t s, std::size_t i) const;

    /// Number of rows matching the pattern.
    std::size_t count_matching(std::span<const std::int8_t> pattern) const;
    double event_probability(std::span<const std::int8_t> pattern) const override;

private:
    std::size_t s_ = 0;
    std::size_t m_ = 0;
    std::size_t words_ = 0;
    std::vector<std::uint64_t> bits_;
    std::vector<std::string> names_;
};

/// Exact distribution over {0,1}^m for small m. Configuration index c has h_j = bit j of c.
class ProbabilityTable final : public PosteriorSource {
public:
    static constexpr std::size_t kMaxDimension = 20;

    /// Masses must be non-negative and sum to 1 within 1e-12.
    ProbabilityTable(std::size_t m, std::vector<double> masses);

    /// Normalizes non-negative weights with positive total.
    static ProbabilityTable from_weights(std::size_t m, std::vector<double> weights);

    /// Independent hypotheses with the given marginals.
    static ProbabilityTable product(const std::vector<double>& marginals);

    std::size_t dimension() const noexcept override { return m_; }
    double mass(std::uint64_t configuration) const { return masses_.at(configuration); }
    const std::vector<double>& masses() const noexcept { return masses_; }

    double event_probability(std::span<const std::int8_t> pattern) const override;

private:
    std::size_t m_ = 0;
    std::vector<double> masses_;
};

/// Which other hypotheses a term conditions on.
enum class Conditioning {
    general,  ///< every j != i
    ordered,  ///< every j preceding i in the working order
};

/// Conditioning set plus, for ordered mode, the working order
/// (order[k] = hypothesis at position k). An empty order means identity.
struct ConditioningSpec {
    Conditioning mode = Conditioning::general;
    std::vector<std::size_t> order;

    static ConditioningSpec general() { return {}; }
    static ConditioningSpec ordered(std::vector<std::size_t> order = {}) {
        return {Conditioning::ordered, std::move(order)};
    }
};

/// Per-hypothesis prior odds Pr(H0i)/Pr(H1i); strictly positive and finite.
class HypothesisPriorOdds {
public:
    /// All odds equal to 1.
    explicit HypothesisPriorOdds(std::size_t m);
    explicit HypothesisPriorOdds(std::vector<double> odds);

    std::size_t size() const noexcept { return odds_.size(); }
    double operator[](std::size_t i) const { return odds_.at(i); }

private:
    std::vector<double> odds_;
};

/// Pattern for {h_i = target} intersected with {h_j = d_j, j in the conditioning set of i}.
/// Pass target = kFree for the conditioning event alone.
EventPattern conditioning_pattern(const DecisionVector& d, std::size_t i, const ConditioningSpec& cond,
                                  std::int8_t target);

double marginal_posterior(const PosteriorSource& source, std::size_t i);
std::vector<double> marginal_posteriors(const PosteriorSource& source);

double joint_probability(const PosteriorSource& source, const DecisionVector& d, std::size_t i,
                         const ConditioningSpec& cond, int target);

/// w_{-i}: probability of the conditioning event alone; independent of d_i.
double rest_event_probability(const PosteriorSource& source, const DecisionVector& d, std::size_t i,
                              const ConditioningSpec& cond);

/// Joint over w_{-i}; std::nullopt when w_{-i} == 0 (undefined conditional).
std::optional<double> conditional_probability(const PosteriorSource& source, const DecisionVector& d,
                                              std::size_t i, const ConditioningSpec& cond, int target);

/// [v_i / (1 - v_i)] * odds_i, +infinity when v_i == 1.
double bayes_factor(const PosteriorSource& source, const HypothesisPriorOdds& odds, std::size_t i);
double bayes_factor_from_marginal(double v, double odds);

/// Hypotheses in non-increasing Bayes factor order; ties keep ascending index.
std::vector<std::size_t> rank_by_bayes_factor(const PosteriorSource& source, const HypothesisPriorOdds& odds);

/// Product-form joint under independence:
/// Pr(h_i = target) * prod over the conditioning set of [d_j v_j + (1 - d_j)(1 - v_j)].
double factorized_joint(std::span<const double> marginals, const DecisionVector& d, std::size_t i, int target,
                        const ConditioningSpec& cond = ConditioningSpec::general());

/// Pr(h_{order[0]} = ... = h_{order[k]} = 1) for k = 0..m-1.
std::vector<double> nested_alternative_probabilities(const PosteriorSource& source,
                                                     const std::vector<std::size_t>& order);

}  // namespace nmd

#include "nmd/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace nmd {

namespace {

void check_index(std::size_t i, std::size_t m) {
    if (i >= m) throw std::out_of_range("hypothesis index " + std::to_string(i) + " out of range");
}

void check_pattern(std::span<const std::int8_t> pattern, std::size_t m) {
    if (pattern.size() != m) throw std::invalid_argument("event pattern length does not match dimension");
}

void check_target(int target) {
    if (target != 0 && target != 1) throw std::invalid_argument("target must be 0 or 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// IndicatorSampleMatrix

IndicatorSampleMatrix::IndicatorSampleMatrix(const std::vector<std::vector<std::uint8_t>>& rows,
                                             std::vector<std::string> names)
    : names_(std::move(names)) {
    if (rows.empty()) throw std::invalid_argument("sample matrix needs at least one row");
    s_ = rows.size();
    m_ = rows.front().size();
    if (m_ == 0) throw std::invalid_argument("sample matrix needs at least one column");
    if (!names_.empty() && names_.size() != m_)
        throw std::invalid_argument("hypothesis name count does not match column count");
    if (names_.empty())
        for (std::size_t i = 0; i < m_; ++i) names_.push_back("h" + std::to_string(i + 1));
    words_ = (m_ + 63) / 64;
    bits_.assign(s_ * words_, 0);
    for (std::size_t s = 0; s < s_; ++s) {
        if (rows[s].size() != m_) throw std::invalid_argument("ragged sample row " + std::to_string(s + 1));
        for (std::size_t i = 0; i < m_; ++i) {
            auto v = rows[s][i];
            if (v > 1) throw std::invalid_argument("non-binary sample entry in row " + std::to_string(s + 1));
            if (v) bits_[s * words_ + i / 64] |= std::uint64_t{1} << (i % 64);
        }
    }
}

std::uint8_t IndicatorSampleMatrix::at(std::size_t s, std::size_t i) const {
    if (s >= s_) throw std::out_of_range("sample row out of range");
    check_index(i, m_);
    return static_cast<std::uint8_t>((bits_[s * words_ + i / 64] >> (i % 64)) & 1U);
}

std::size_t IndicatorSampleMatrix::count_matching(std::span<const std::int8_t> pattern) const {
    check_pattern(pattern, m_);
    std::vector<std::uint64_t> mask(words_, 0), value(words_, 0);
    for (std::size_t j = 0; j < m_; ++j) {
        if (pattern[j] == kFree) continue;
        const auto bit = std::uint64_t{1} << (j % 64);
        mask[j / 64] |= bit;
        if (pattern[j] == 1) value[j / 64] |= bit;
    }
    std::size_t count = 0;
    for (std::size_t s = 0; s < s_; ++s) {
        const std::uint64_t* row = &bits_[s * words_];
        bool match = true;
        for (std::size_t w = 0; w < words_ && match; ++w) match = ((row[w] ^ value[w]) & mask[w]) == 0;
        count += match ? 1 : 0;
    }
    return count;
}

double IndicatorSampleMatrix::event_probability(std::span<const std::int8_t> pattern) const {
    return static_cast<double>(count_matching(pattern)) / static_cast<double>(s_);
}

// ---------------------------------------------------------------------------
// ProbabilityTable

ProbabilityTable::ProbabilityTable(std::size_t m, std::vector<double> masses) : m_(m), masses_(std::move(masses)) {
    if (m_ == 0 || m_ > kMaxDimension)
        throw std::invalid_argument("probability table dimension must be in 1.." + std::to_string(kMaxDimension));
    if (masses_.size() != (std::size_t{1} << m_)) throw std::invalid_argument("probability table needs 2^m masses");
    double total = 0.0;
    for (double p : masses_) {
        if (!(p >= 0.0) || !std::isfinite(p)) throw std::invalid_argument("probability masses must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-12) throw std::invalid_argument("probability masses must sum to 1");
}

ProbabilityTable ProbabilityTable::from_weights(std::size_t m, std::vector<double> weights) {
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) throw std::invalid_argument("weights must be non-negative");
        total += w;
    }
    if (!(total > 0.0)) throw std::invalid_argument("weights must have positive total");
    for (double& w : weights) w /= total;
    // Renormalizing once can leave the total a few ulps off; absorb it in the largest mass.
    const double residual = 1.0 - std::accumulate(weights.begin(), weights.end(), 0.0);
    *std::max_element(weights.begin(), weights.end()) += residual;
    return ProbabilityTable(m, std::move(weights));
}

ProbabilityTable ProbabilityTable::product(const std::vector<double>& marginals) {
    const std::size_t m = marginals.size();
    if (m == 0 || m > kMaxDimension) throw std::invalid_argument("product table dimension out of range");
    for (double v : marginals) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("marginal outside [0,1]");
    }
    std::vector<double> masses(std::size_t{1} << m);
    for (std::size_t c = 0; c < masses.size(); ++c) {
        double p = 1.0;
        for (std::size_t j = 0; j < m; ++j) p *= ((c >> j) & 1U) ? marginals[j] : 1.0 - marginals[j];
        masses[c] = p;
    }
    return ProbabilityTable(m, std::move(masses));
}

double ProbabilityTable::event_probability(std::span<const std::int8_t> pattern) const {
    check_pattern(pattern, m_);
    std::uint64_t value = 0, free = 0;
    for (std::size_t j = 0; j < m_; ++j) {
        if (pattern[j] == kFree)
            free |= std::uint64_t{1} << j;
        else if (pattern[j] == 1)
            value |= std::uint64_t{1} << j;
    }
    // Submasks of `free` in ascending order, so every event sums its masses in
    // configuration order and nested events stay nested after rounding.
    double total = 0.0;
    std::uint64_t sub = 0;
    do {
        total += masses_[value | sub];
        sub = (sub - free) & free;
    } while (sub != 0);
    return total;
}

// ---------------------------------------------------------------------------
// HypothesisPriorOdds

HypothesisPriorOdds::HypothesisPriorOdds(std::size_t m) : odds_(m, 1.0) {}

HypothesisPriorOdds::HypothesisPriorOdds(std::vector<double> odds) : odds_(std::move(odds)) {
    for (double o : odds_) {
        if (!(o > 0.0) || !std::isfinite(o)) throw std::invalid_argument("prior odds must be positive and finite");
    }
}

// ---------------------------------------------------------------------------
// Event assembly

EventPattern conditioning_pattern(const DecisionVector& d, std::size_t i, const ConditioningSpec& cond,
                                  std::int8_t target) {
    const std::size_t m = d.size();
    check_index(i, m);
    EventPattern pattern(m, kFree);
    if (cond.mode == Conditioning::general) {
        for (std::size_t j = 0; j < m; ++j) pattern[j] = static_cast<std::int8_t>(d[j]);
    } else if (cond.order.empty()) {
        for (std::size_t j = 0; j < i; ++j) pattern[j] = static_cast<std::int8_t>(d[j]);
    } else {
        validate_permutation(cond.order, m);
        for (std::size_t k = 0; cond.order[k] != i; ++k) {
            const auto j = cond.order[k];
            pattern[j] = static_cast<std::int8_t>(d[j]);
        }
    }
    pattern[i] = target;
    return pattern;
}

double marginal_posterior(const PosteriorSource& source, std::size_t i) {
    check_index(i, source.dimension());
    EventPattern pattern(source.dimension(), kFree);
    pattern[i] = 1;
    return source.event_probability(pattern);
}

std::vector<double> marginal_posteriors(const PosteriorSource& source) {
    std::vector<double> v(source.dimension());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = marginal_posterior(source, i);
    return v;
}

double joint_probability(const PosteriorSource& source, const DecisionVector& d, std::size_t i,
                         const ConditioningSpec& cond, int target) {
    check_target(target);
    if (d.size() != source.dimension()) throw std::invalid_argument("decision vector length mismatch");
    return source.event_probability(conditioning_pattern(d, i, cond, static_cast<std::int8_t>(target)));
}

double rest_event_probability(const PosteriorSource& source, const DecisionVector& d, std::size_t i,
                              const ConditioningSpec& cond) {
    if (d.size() != source.dimension()) throw std::invalid_argument("decision vector length mismatch");
    return source.event_probability(conditioning_pattern(d, i, cond, kFree));
}

std::optional<double> conditional_probability(const PosteriorSource& source, const DecisionVector& d,
                                              std::size_t i, const ConditioningSpec& cond, int target) {
    const double rest = rest_event_probability(source, d, i, cond);
    if (rest <= 0.0) return std::nullopt;
    return joint_probability(source, d, i, cond, target) / rest;
}

double bayes_factor_from_marginal(double v, double odds) {
    if (v >= 1.0) return std::numeric_limits<double>::infinity();
    return v / (1.0 - v) * odds;
}

double bayes_factor(const PosteriorSource& source, const HypothesisPriorOdds& odds, std::size_t i) {
    if (odds.size() != source.dimension()) throw std::invalid_argument("prior odds length mismatch");
    return bayes_factor_from_marginal(marginal_posterior(source, i), odds[i]);
}

std::vector<std::size_t> rank_by_bayes_factor(const PosteriorSource& source, const HypothesisPriorOdds& odds) {
    const std::size_t m = source.dimension();
    std::vector<double> bf(m);
    for (std::size_t i = 0; i < m; ++i) bf[i] = bayes_factor(source, odds, i);
    auto order = identity_permutation(m);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return bf[a] > bf[b]; });
    return order;
}

double factorized_joint(std::span<const double> marginals, const DecisionVector& d, std::size_t i, int target,
                        const ConditioningSpec& cond) {
    check_target(target);
    if (marginals.size() != d.size()) throw std::invalid_argument("marginal vector length mismatch");
    for (double v : marginals) {
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("marginal outside [0,1]");
    }
    const auto pattern = conditioning_pattern(d, i, cond, kFree);
    double p = target == 1 ? marginals[i] : 1.0 - marginals[i];
    for (std::size_t j = 0; j < d.size(); ++j) {
        if (pattern[j] == kFree) continue;
        p *= d[j] ? marginals[j] : 1.0 - marginals[j];
    }
    return p;
}

std::vector<double> nested_alternative_probabilities(const PosteriorSource& source,
                                                     const std::vector<std::size_t>& order) {
    validate_permutation(order, source.dimension());
    EventPattern pattern(source.dimension(), kFree);
    std::vector<double> out;
    out.reserve(order.size());
    for (auto j : order) {
        pattern[j] = 1;
        out.push_back(source.event_probability(pattern));
    }
    return out;
}

}  // namespace nmd

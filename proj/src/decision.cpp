#include "nmd/decision.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace nmd {

DecisionVector::DecisionVector(std::size_t m, std::uint8_t fill) : values_(m, fill ? 1 : 0) {}

DecisionVector::DecisionVector(std::initializer_list<int> values) {
    values_.reserve(values.size());
    for (int v : values) {
        if (v != 0 && v != 1) throw std::invalid_argument("decision entries must be 0 or 1");
        values_.push_back(static_cast<std::uint8_t>(v));
    }
}

DecisionVector::DecisionVector(std::vector<std::uint8_t> values) : values_(std::move(values)) {
    for (auto v : values_) {
        if (v > 1) throw std::invalid_argument("decision entries must be 0 or 1");
    }
}

DecisionVector DecisionVector::from_bits(std::uint64_t bits, std::size_t m) {
    if (m > 64) throw std::invalid_argument("from_bits supports at most 64 hypotheses");
    DecisionVector d(m);
    for (std::size_t j = 0; j < m; ++j) d.values_[j] = static_cast<std::uint8_t>((bits >> j) & 1U);
    return d;
}

std::uint64_t DecisionVector::to_bits() const {
    if (values_.size() > 64) throw std::invalid_argument("to_bits supports at most 64 hypotheses");
    std::uint64_t bits = 0;
    for (std::size_t j = 0; j < values_.size(); ++j) bits |= static_cast<std::uint64_t>(values_[j]) << j;
    return bits;
}

std::size_t DecisionVector::count_ones() const noexcept {
    return static_cast<std::size_t>(std::count(values_.begin(), values_.end(), std::uint8_t{1}));
}

std::string DecisionVector::to_string() const {
    std::string s;
    for (std::size_t i = 0; i < values_.size(); ++i) {
        if (i) s += ',';
        s += values_[i] ? '1' : '0';
    }
    return s;
}

void validate_permutation(const std::vector<std::size_t>& order, std::size_t m) {
    if (order.size() != m) throw std::invalid_argument("ordering length does not match the number of hypotheses");
    std::vector<bool> seen(m, false);
    for (auto k : order) {
        if (k >= m || seen[k]) throw std::invalid_argument("ordering is not a permutation");
        seen[k] = true;
    }
}

std::vector<std::size_t> identity_permutation(std::size_t m) {
    std::vector<std::size_t> p(m);
    std::iota(p.begin(), p.end(), std::size_t{0});
    return p;
}

std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& order) {
    std::vector<std::size_t> inv(order.size());
    for (std::size_t k = 0; k < order.size(); ++k) inv[order[k]] = k;
    return inv;
}

}  // namespace nmd

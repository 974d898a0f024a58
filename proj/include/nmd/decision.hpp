#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <string>
#include <vector>

namespace nmd {

/// Binary accept/reject vector over m hypotheses; entry i is 1 when H1i is accepted.
class DecisionVector {
public:
    DecisionVector() = default;
    explicit DecisionVector(std::size_t m, std::uint8_t fill = 0);
    DecisionVector(std::initializer_list<int> values);
    explicit DecisionVector(std::vector<std::uint8_t> values);

    static DecisionVector zeros(std::size_t m) { return DecisionVector(m, 0); }
    static DecisionVector ones(std::size_t m) { return DecisionVector(m, 1); }

    /// Bit j of `bits` becomes entry j.
    static DecisionVector from_bits(std::uint64_t bits, std::size_t m);
    std::uint64_t to_bits() const;

    std::size_t size() const noexcept { return values_.size(); }
    bool empty() const noexcept { return values_.empty(); }

    std::uint8_t operator[](std::size_t i) const { return values_[i]; }
    void set(std::size_t i, bool accept) { values_[i] = accept ? 1 : 0; }

    std::size_t count_ones() const noexcept;
    const std::vector<std::uint8_t>& values() const noexcept { return values_; }

    /// "1,0,1"
    std::string to_string() const;

    friend bool operator==(const DecisionVector&, const DecisionVector&) = default;
    friend auto operator<=>(const DecisionVector&, const DecisionVector&) = default;

private:
    std::vector<std::uint8_t> values_;
};

/// Throws std::invalid_argument unless `order` is a permutation of 0..m-1.
void validate_permutation(const std::vector<std::size_t>& order, std::size_t m);

std::vector<std::size_t> identity_permutation(std::size_t m);
std::vector<std::size_t> inverse_permutation(const std::vector<std::size_t>& order);

}  // namespace nmd

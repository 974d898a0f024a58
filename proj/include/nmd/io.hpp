#pragma once

// Plain-text interchange formats:
//   samples   CSV rows of 0/1, optional single header line of hypothesis names
//   vectors   one 0/1 token per line (decisions, truth)
//   orderings one 1-based index per line, forming a permutation
//   reals     one positive real per line (prior odds)

#include <cstddef>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmd/decision.hpp"
#include "nmd/posterior.hpp"

namespace nmd {

/// Malformed input file; `line()` is 1-based, 0 when not tied to a line.
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, std::size_t line = 0, std::string token = {})
        : std::runtime_error(what), line_(line), token_(std::move(token)) {}

    std::size_t line() const noexcept { return line_; }
    const std::string& token() const noexcept { return token_; }

private:
    std::size_t line_;
    std::string token_;
};

IndicatorSampleMatrix parse_samples(std::istream& in);
IndicatorSampleMatrix parse_samples(const std::string& path);
void write_samples(std::ostream& out, const IndicatorSampleMatrix& samples);

DecisionVector parse_binary_vector(std::istream& in);
DecisionVector read_binary_vector(const std::string& path);
void write_binary_vector(std::ostream& out, const DecisionVector& d);

/// Returns a 0-based permutation of 0..m-1.
std::vector<std::size_t> parse_ordering(std::istream& in, std::size_t m);
std::vector<std::size_t> read_ordering(const std::string& path, std::size_t m);

std::vector<double> parse_positive_reals(std::istream& in);
std::vector<double> read_positive_reals(const std::string& path);

}  // namespace nmd

#include "nmd/io.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nmd {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool is_binary_token(const std::string& t) { return t == "0" || t == "1"; }

std::ifstream open(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return in;
}

}  // namespace

IndicatorSampleMatrix parse_samples(std::istream& in) {
    std::vector<std::vector<std::uint8_t>> rows;
    std::vector<std::string> names;
    std::string line;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        const auto cells = split_csv(line);
        const bool first = rows.empty() && names.empty();
        if (first) {
            width = cells.size();
            // A header is a first line whose cells are not all binary tokens.
            bool numeric = true;
            for (const auto& c : cells) numeric = numeric && is_binary_token(c);
            if (!numeric) {
                bool looks_numeric = false;
                for (const auto& c : cells) {
                    if (c.empty()) throw DataError("empty hypothesis name on line 1", line_no, c);
                    looks_numeric = looks_numeric || std::isdigit(static_cast<unsigned char>(c.front())) != 0;
                }
                // "1,2" is a bad data row, not a header.
                if (!looks_numeric) {
                    names = cells;
                    continue;
                }
            }
        }
        if (cells.size() != width)
            throw DataError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) +
                                " values, found " + std::to_string(cells.size()),
                            line_no);
        std::vector<std::uint8_t> row(width);
        for (std::size_t j = 0; j < width; ++j) {
            if (!is_binary_token(cells[j]))
                throw DataError("line " + std::to_string(line_no) + ": non-binary token '" + cells[j] + "'", line_no,
                                cells[j]);
            row[j] = cells[j] == "1" ? 1 : 0;
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataError("sample file contains no rows");
    return IndicatorSampleMatrix(rows, std::move(names));
}

IndicatorSampleMatrix parse_samples(const std::string& path) {
    auto in = open(path);
    return parse_samples(in);
}

void write_samples(std::ostream& out, const IndicatorSampleMatrix& samples) {
    const auto& names = samples.names();
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << names[j];
    if (!names.empty()) out << '\n';
    for (std::size_t s = 0; s < samples.sample_count(); ++s) {
        for (std::size_t j = 0; j < samples.dimension(); ++j) out << (j ? "," : "") << int{samples.at(s, j)};
        out << '\n';
    }
}

DecisionVector parse_binary_vector(std::istream& in) {
    std::vector<std::uint8_t> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        if (!is_binary_token(line))
            throw DataError("line " + std::to_string(line_no) + ": non-binary token '" + line + "'", line_no, line);
        values.push_back(line == "1" ? 1 : 0);
    }
    if (values.empty()) throw DataError("vector file is empty");
    return DecisionVector(std::move(values));
}

DecisionVector read_binary_vector(const std::string& path) {
    auto in = open(path);
    return parse_binary_vector(in);
}

void write_binary_vector(std::ostream& out, const DecisionVector& d) {
    for (std::size_t i = 0; i < d.size(); ++i) out << int{d[i]} << '\n';
}

std::vector<std::size_t> parse_ordering(std::istream& in, std::size_t m) {
    std::vector<std::size_t> order;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::size_t used = 0;
        unsigned long long value = 0;
        try {
            value = std::stoull(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != line.size() || value < 1 || value > m)
            throw DataError("line " + std::to_string(line_no) + ": '" + line + "' is not an index in 1.." +
                                std::to_string(m),
                            line_no, line);
        order.push_back(static_cast<std::size_t>(value - 1));
    }
    try {
        validate_permutation(order, m);
    } catch (const std::invalid_argument& e) {
        throw DataError(std::string("ordering file: ") + e.what());
    }
    return order;
}

std::vector<std::size_t> read_ordering(const std::string& path, std::size_t m) {
    auto in = open(path);
    return parse_ordering(in, m);
}

std::vector<double> parse_positive_reals(std::istream& in) {
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty()) continue;
        std::size_t used = 0;
        double value = 0.0;
        try {
            value = std::stod(line, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != line.size() || !(value > 0.0) || !std::isfinite(value))
            throw DataError("line " + std::to_string(line_no) + ": '" + line + "' is not a positive real", line_no,
                            line);
        values.push_back(value);
    }
    if (values.empty()) throw DataError("file of reals is empty");
    return values;
}

std::vector<double> read_positive_reals(const std::string& path) {
    auto in = open(path);
    return parse_positive_reals(in);
}

}  // namespace nmd

#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "nmd/report.hpp"

namespace nmd::cli {

/// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNonconvergence = 2;

/// Bad flag combination or flag value.
class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct GridOptions {
    std::optional<double> min;
    std::optional<double> max;
    std::optional<std::size_t> points;
};

struct DecideOptions {
    std::string samples;
    std::string criterion = "general";
    std::optional<double> lambda;
    std::optional<double> alpha;
    std::string order = "index";        // bf | index | file:PATH
    std::string init = "ones";          // ones | zeros | file:PATH
    std::string sweep_order = "index";  // index | reverse | file:PATH
    std::string prior_odds;             // file:PATH, empty for all ones
    std::optional<std::string> procedure;
    std::optional<std::string> truth;
    std::uint64_t seed = 0;
    std::size_t max_sweeps = 1000;
    GridOptions grid;
    unsigned threads = 1;
};

struct ChainCliOptions {
    std::string samples;
    std::string criterion = "general";
    double lambda = 1.0;
    std::size_t max_m_states = 16;
    std::string order = "index";
    std::string sweep_order = "index";
    std::string prior_odds;
    std::size_t dense_limit = 2048;
    unsigned threads = 1;
};

struct SimulateOptions {
    std::string config;
    std::string out_samples;
    std::optional<std::string> out_truth;
    std::optional<std::string> probe;  // "m_small,m_large"
};

struct DecomposeOptions {
    std::string decisions;
    std::string truth;
    std::string mode = "general";
    std::optional<std::string> order;  // file of 1-based indices for ordered mode
};

RunReport run_decide(const DecideOptions& options);
RunReport run_chain(const ChainCliOptions& options);
RunReport run_simulate(const SimulateOptions& options);
RunReport run_decompose(const DecomposeOptions& options);

/// Full command-line entry point; returns the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nmd::cli

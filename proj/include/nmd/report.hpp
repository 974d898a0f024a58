#pragma once

// Machine-readable run report. The JSON layout is described by
// docs/report-schema.json; bump kReportSchemaVersion when it changes.

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace nmd {

inline constexpr const char* kReportSchemaVersion = "1.0";
inline constexpr const char* kToolVersion = "0.3.0";

struct CriterionEcho {
    std::string kind;
    double lambda = 0.0;
    std::string procedure;
    /// 1-based working order (ordered kind) and sweep order.
    std::vector<std::size_t> order;
    std::vector<std::size_t> sweep;
    std::string init;

    friend bool operator==(const CriterionEcho&, const CriterionEcho&) = default;
};

struct ConvergenceSummary {
    std::size_t sweeps_to_converge = 0;
    std::size_t sweeps_executed = 0;
    bool converged = false;
    bool cycle_detected = false;
    std::vector<std::vector<int>> cycle_states;
    bool max_sweeps_exceeded = false;
    /// Ordered procedures only: whether the shortcut output is a plain-relaxation fixed point.
    std::optional<bool> shortcut_is_fixed_point;

    friend bool operator==(const ConvergenceSummary&, const ConvergenceSummary&) = default;
};

struct CalibrationPoint {
    double lambda = 0.0;
    double achieved = 0.0;
    bool feasible = false;

    friend bool operator==(const CalibrationPoint&, const CalibrationPoint&) = default;
};

struct CalibrationSummary {
    double alpha = 0.0;
    bool feasible = false;
    double lambda_star = 0.0;
    double achieved = 0.0;
    std::vector<CalibrationPoint> path;

    friend bool operator==(const CalibrationSummary&, const CalibrationSummary&) = default;
};

struct DecompositionSummary {
    std::string mode;
    std::size_t m = 0;
    std::map<std::string, std::size_t> counts;  // NE1, NE2, E1..E6
    std::size_t total = 0;
    bool partition_holds = false;

    friend bool operator==(const DecompositionSummary&, const DecompositionSummary&) = default;
};

struct TransientState {
    std::vector<int> state;
    double expected_sweeps = 0.0;
    std::size_t simulated_sweeps = 0;
    std::vector<int> absorbed_into;

    friend bool operator==(const TransientState&, const TransientState&) = default;
};

struct ChainSummary {
    std::size_t m = 0;
    std::size_t state_count = 0;
    std::vector<std::vector<int>> fixed_points;
    std::vector<TransientState> transient;
    bool fundamental_materialized = false;
    double identity_residual = 0.0;
    /// "exact", "mismatch", or "non-absorbing".
    std::string verification;
    std::vector<std::vector<int>> offending_cycle;

    friend bool operator==(const ChainSummary&, const ChainSummary&) = default;
};

struct ProbeSummary {
    std::size_t m_small = 0;
    std::size_t m_large = 0;
    double v_small = 0.0;
    double v_large = 0.0;
    double difference = 0.0;

    friend bool operator==(const ProbeSummary&, const ProbeSummary&) = default;
};

struct SimulationSummary {
    std::size_t m = 0;
    std::size_t samples = 0;
    std::size_t seed = 0;
    std::string samples_path;
    std::string truth_path;
    std::vector<double> data;
    std::vector<int> truth;
    std::vector<double> analytic_marginals;

    friend bool operator==(const SimulationSummary&, const SimulationSummary&) = default;
};

struct RunReport {
    std::string schema_version = kReportSchemaVersion;
    std::string tool_version = kToolVersion;
    std::string command;
    /// Echo of the invocation: flag name -> value.
    std::map<std::string, std::string> inputs;
    std::size_t m = 0;
    std::size_t sample_count = 0;
    std::vector<std::string> hypothesis_names;

    std::optional<CriterionEcho> criterion;
    std::optional<std::vector<int>> decisions;
    std::optional<double> objective;
    std::optional<double> expected_error;
    std::optional<ConvergenceSummary> convergence;
    std::optional<CalibrationSummary> calibration;
    std::optional<DecompositionSummary> decomposition;
    std::optional<ChainSummary> chain;
    std::optional<SimulationSummary> simulation;
    std::optional<ProbeSummary> probe;

    std::optional<std::string> error;
    int exit_code = 0;
    double wall_clock_seconds = 0.0;

    friend bool operator==(const RunReport&, const RunReport&) = default;
};

void to_json(nlohmann::json& j, const RunReport& r);
void from_json(const nlohmann::json& j, RunReport& r);

std::string serialize(const RunReport& report);
RunReport deserialize_report(const std::string& text);

}  // namespace nmd

#include "nmd/report.hpp"

namespace nmd {

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CriterionEcho, kind, lambda, procedure, order, sweep, init)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CalibrationPoint, lambda, achieved, feasible)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(CalibrationSummary, alpha, feasible, lambda_star, achieved, path)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(DecompositionSummary, mode, m, counts, total, partition_holds)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(TransientState, state, expected_sweeps, simulated_sweeps, absorbed_into)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ChainSummary, m, state_count, fixed_points, transient, fundamental_materialized,
                                   identity_residual, verification, offending_cycle)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(ProbeSummary, m_small, m_large, v_small, v_large, difference)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE(SimulationSummary, m, samples, seed, samples_path, truth_path, data, truth,
                                   analytic_marginals)

void to_json(nlohmann::json& j, const ConvergenceSummary& c) {
    j = nlohmann::json{{"sweeps_to_converge", c.sweeps_to_converge},
                       {"sweeps_executed", c.sweeps_executed},
                       {"converged", c.converged},
                       {"cycle_detected", c.cycle_detected},
                       {"cycle_states", c.cycle_states},
                       {"max_sweeps_exceeded", c.max_sweeps_exceeded}};
    if (c.shortcut_is_fixed_point) j["shortcut_is_fixed_point"] = *c.shortcut_is_fixed_point;
}

void from_json(const nlohmann::json& j, ConvergenceSummary& c) {
    j.at("sweeps_to_converge").get_to(c.sweeps_to_converge);
    j.at("sweeps_executed").get_to(c.sweeps_executed);
    j.at("converged").get_to(c.converged);
    j.at("cycle_detected").get_to(c.cycle_detected);
    j.at("cycle_states").get_to(c.cycle_states);
    j.at("max_sweeps_exceeded").get_to(c.max_sweeps_exceeded);
    if (j.contains("shortcut_is_fixed_point")) c.shortcut_is_fixed_point = j.at("shortcut_is_fixed_point").get<bool>();
}

namespace {

template <typename T>
void put(nlohmann::json& j, const char* key, const std::optional<T>& value) {
    if (value) j[key] = *value;
}

template <typename T>
void take(const nlohmann::json& j, const char* key, std::optional<T>& value) {
    if (j.contains(key) && !j.at(key).is_null())
        value = j.at(key).get<T>();
    else
        value.reset();
}

}  // namespace

void to_json(nlohmann::json& j, const RunReport& r) {
    j = nlohmann::json{{"schema_version", r.schema_version},
                       {"tool_version", r.tool_version},
                       {"command", r.command},
                       {"inputs", r.inputs},
                       {"m", r.m},
                       {"sample_count", r.sample_count},
                       {"hypothesis_names", r.hypothesis_names},
                       {"exit_code", r.exit_code},
                       {"wall_clock_seconds", r.wall_clock_seconds}};
    put(j, "criterion", r.criterion);
    put(j, "decisions", r.decisions);
    put(j, "objective", r.objective);
    put(j, "expected_error", r.expected_error);
    put(j, "convergence", r.convergence);
    put(j, "calibration", r.calibration);
    put(j, "decomposition", r.decomposition);
    put(j, "chain", r.chain);
    put(j, "simulation", r.simulation);
    put(j, "probe", r.probe);
    put(j, "error", r.error);
}

void from_json(const nlohmann::json& j, RunReport& r) {
    j.at("schema_version").get_to(r.schema_version);
    j.at("tool_version").get_to(r.tool_version);
    j.at("command").get_to(r.command);
    j.at("inputs").get_to(r.inputs);
    j.at("m").get_to(r.m);
    j.at("sample_count").get_to(r.sample_count);
    j.at("hypothesis_names").get_to(r.hypothesis_names);
    j.at("exit_code").get_to(r.exit_code);
    j.at("wall_clock_seconds").get_to(r.wall_clock_seconds);
    take(j, "criterion", r.criterion);
    take(j, "decisions", r.decisions);
    take(j, "objective", r.objective);
    take(j, "expected_error", r.expected_error);
    take(j, "convergence", r.convergence);
    take(j, "calibration", r.calibration);
    take(j, "decomposition", r.decomposition);
    take(j, "chain", r.chain);
    take(j, "simulation", r.simulation);
    take(j, "probe", r.probe);
    take(j, "error", r.error);
}

std::string serialize(const RunReport& report) { return nlohmann::json(report).dump(2) + "\n"; }

RunReport deserialize_report(const std::string& text) { return nlohmann::json::parse(text).get<RunReport>(); }

}  // namespace nmd

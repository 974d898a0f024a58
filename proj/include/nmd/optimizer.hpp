#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "nmd/criteria.hpp"
#include "nmd/decision.hpp"
#include "nmd/posterior.hpp"

namespace nmd {

/// Two objective values closer than this are treated as tied by brute_force.
inline constexpr double kTieTolerance = 1e-12;

struct RelaxationOptions {
    std::size_t max_sweeps = 1000;
};

/// History of one relaxation run.
struct RelaxationTrace {
    DecisionVector initial;
    std::vector<std::size_t> sweep_order;
    /// State after each executed sweep.
    std::vector<DecisionVector> snapshots;
    /// Objective after each executed sweep.
    std::vector<double> sweep_values;
    /// Objective at the start, then after every coordinate update.
    std::vector<double> update_values;
    /// Sweeps that changed the state; equals the absorption time of the initial state.
    std::size_t sweeps_to_converge = 0;
    bool converged = false;
    bool cycle_detected = false;
    std::vector<DecisionVector> cycle_states;
    bool max_sweeps_exceeded = false;

    std::size_t sweeps_executed() const noexcept { return snapshots.size(); }
};

struct RelaxationResult {
    DecisionVector decisions;
    double value = 0.0;
    RelaxationTrace trace;
};

/// Result of an ordered step-down or step-up run.
struct OrderedResult {
    DecisionVector decisions;
    double value = 0.0;
    RelaxationTrace trace;
    /// Whether the shortcut output is already a fixed point of the plain relaxation.
    bool shortcut_is_fixed_point = false;
    /// Plain relaxation started from the shortcut output.
    RelaxationResult refined;
};

struct BruteForceResult {
    DecisionVector decisions;
    double value = 0.0;
    bool unique = true;
    std::size_t maximizer_count = 1;
};

/// Ascending lambda values.
class LambdaGrid {
public:
    explicit LambdaGrid(std::vector<double> values);

    static LambdaGrid geometric(double lo, double hi, std::size_t points);
    /// 64 points over [1, 1e3].
    static LambdaGrid default_nonmarginal();
    /// 64 points over [1e-3, 1e3].
    static LambdaGrid default_marginal();

    const std::vector<double>& values() const noexcept { return values_; }
    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }

    /// Largest gap between consecutive grid points measured on the lambda/(1+lambda) scale.
    double threshold_resolution() const;

private:
    std::vector<double> values_;
};

struct CalibrationStep {
    double lambda = 0.0;
    double achieved = 0.0;
    bool feasible = false;
    DecisionVector decisions;
};

struct CalibrationResult {
    double lambda_star = 0.0;
    DecisionVector decisions;
    double achieved = 0.0;
    bool feasible = false;
    /// Grid points evaluated, in evaluation order.
    std::vector<CalibrationStep> path;
};

enum class Procedure { relaxation, step_down, step_up };

std::string to_string(Procedure p);
Procedure parse_procedure(const std::string& name);

/// d_i = 1{v_i > lambda/(1+lambda)}.
DecisionVector guindani_oracle(const std::vector<double>& v, double lambda);

/// Smallest grid lambda whose oracle decisions keep sum d_i(1 - v_i) <= alpha,
/// located by bisection on the monotone constraint.
CalibrationResult calibrate_lambda_marginal(const std::vector<double>& v, double alpha,
                                            const LambdaGrid& grid = LambdaGrid::default_marginal());

/// Sets d_i to 1 iff objective(d with d_i = 1) strictly exceeds objective(d with d_i = 0).
/// Returns true when d_i changed. `values` receives the objective after the update when non-null.
bool coordinate_update(const Objective& objective, DecisionVector& d, std::size_t i, double* value = nullptr);

/// One pass over `sweep_order`. Returns true when any coordinate changed.
bool sweep_once(const Objective& objective, DecisionVector& d, const std::vector<std::size_t>& sweep_order);

/// Coordinate-wise maximization from spec.init until a sweep changes nothing.
RelaxationResult block_relaxation(const PosteriorSource& source, const CriterionSpec& spec,
                                  const RelaxationOptions& options = {});

/// Ordered criterion from all ones, updating the working order back to front.
/// The first coordinate set to 1 also sets every earlier coordinate to 1 and ends the sweep.
OrderedResult step_down_ordered(const PosteriorSource& source, double lambda, const std::vector<std::size_t>& order,
                                const RelaxationOptions& options = {});

/// Ordered criterion from all zeros, updating front to back.
/// The first coordinate set to 0 also zeroes every later coordinate and ends the sweep.
OrderedResult step_up_ordered(const PosteriorSource& source, double lambda, const std::vector<std::size_t>& order,
                              const RelaxationOptions& options = {});

/// Global maximizer by enumeration. Ties (within kTieTolerance) go to fewer ones, then
/// the lexicographically smallest vector.
BruteForceResult brute_force(const PosteriorSource& source, const CriterionSpec& spec);
inline constexpr std::size_t kBruteForceMaxDimension = 24;

/// Runs `procedure` under `spec` (kind, order, sweep and init are honored where they apply).
RelaxationResult solve(const PosteriorSource& source, const CriterionSpec& spec, Procedure procedure,
                       const RelaxationOptions& options = {});

/// First ascending grid lambda whose fixed-point decisions keep the expected
/// controlled error at or below alpha. No monotonicity is assumed.
CalibrationResult calibrate_lambda_nonmarginal(const PosteriorSource& source, double alpha, const CriterionSpec& spec,
                                               const LambdaGrid& grid = LambdaGrid::default_nonmarginal(),
                                               Procedure procedure = Procedure::relaxation,
                                               const RelaxationOptions& options = {}, unsigned threads = 1);

/// True when d_i == 1{g(d_i=1) > g(d_i=0)} for every i.
bool is_fixed_point(const Objective& objective, const DecisionVector& d);

/// True when d[order[k]] == 1 implies d[order[j]] == 1 for all j < k.
bool is_monotone_in_order(const DecisionVector& d, const std::vector<std::size_t>& order);

}  // namespace nmd

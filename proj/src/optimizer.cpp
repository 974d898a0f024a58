#include "nmd/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "nmd/parallel.hpp"

namespace nmd {

std::string to_string(Procedure p) {
    switch (p) {
        case Procedure::relaxation: return "relaxation";
        case Procedure::step_down: return "step-down";
        case Procedure::step_up: return "step-up";
    }
    return "unknown";
}

Procedure parse_procedure(const std::string& name) {
    if (name == "relaxation") return Procedure::relaxation;
    if (name == "step-down") return Procedure::step_down;
    if (name == "step-up") return Procedure::step_up;
    throw std::invalid_argument("unknown procedure '" + name + "'");
}

// ---------------------------------------------------------------------------
// LambdaGrid

LambdaGrid::LambdaGrid(std::vector<double> values) : values_(std::move(values)) {
    if (values_.empty()) throw std::invalid_argument("lambda grid is empty");
    for (std::size_t k = 0; k < values_.size(); ++k) {
        if (!(values_[k] > 0.0) || !std::isfinite(values_[k]))
            throw std::invalid_argument("lambda grid values must be positive and finite");
        if (k > 0 && !(values_[k] > values_[k - 1]))
            throw std::invalid_argument("lambda grid must be strictly ascending");
    }
}

LambdaGrid LambdaGrid::geometric(double lo, double hi, std::size_t points) {
    if (!(lo > 0.0) || !(hi > lo) || points < 2) throw std::invalid_argument("invalid geometric lambda grid");
    std::vector<double> v(points);
    const double step = std::log(hi / lo) / static_cast<double>(points - 1);
    for (std::size_t k = 0; k < points; ++k) v[k] = lo * std::exp(step * static_cast<double>(k));
    v.front() = lo;
    v.back() = hi;
    return LambdaGrid(std::move(v));
}

LambdaGrid LambdaGrid::default_nonmarginal() { return geometric(1.0, 1e3, 64); }
LambdaGrid LambdaGrid::default_marginal() { return geometric(1e-3, 1e3, 64); }

double LambdaGrid::threshold_resolution() const {
    double gap = 0.0;
    for (std::size_t k = 1; k < values_.size(); ++k)
        gap = std::max(gap, acceptance_threshold(values_[k]) - acceptance_threshold(values_[k - 1]));
    return gap;
}

// ---------------------------------------------------------------------------
// Marginal rule

DecisionVector guindani_oracle(const std::vector<double>& v, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    const double t = acceptance_threshold(lambda);
    DecisionVector d(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) d.set(i, v[i] > t);
    return d;
}

CalibrationResult calibrate_lambda_marginal(const std::vector<double>& v, double alpha, const LambdaGrid& grid) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    CalibrationResult result;
    auto evaluate = [&](std::size_t k) {
        CalibrationStep step;
        step.lambda = grid[k];
        step.decisions = guindani_oracle(v, grid[k]);
        step.achieved = expected_false_positives(v, step.decisions);
        step.feasible = step.achieved <= alpha;
        result.path.push_back(step);
        return step;
    };
    auto accept = [&](const CalibrationStep& step) {
        result.lambda_star = step.lambda;
        result.decisions = step.decisions;
        result.achieved = step.achieved;
        result.feasible = step.feasible;
    };

    // The constraint is non-increasing in lambda: find the first feasible index.
    const auto last = evaluate(grid.size() - 1);
    if (!last.feasible) {
        accept(last);
        return result;
    }
    std::size_t lo = 0, hi = grid.size() - 1;  // hi is feasible
    CalibrationStep best = last;
    while (lo < hi) {
        const std::size_t mid = lo + (hi - lo) / 2;
        const auto step = evaluate(mid);
        if (step.feasible) {
            hi = mid;
            best = step;
        } else {
            lo = mid + 1;
        }
    }
    accept(best);
    return result;
}

// ---------------------------------------------------------------------------
// Block relaxation

bool coordinate_update(const Objective& objective, DecisionVector& d, std::size_t i, double* value) {
    const std::uint8_t before = d[i];
    d.set(i, true);
    const double with_one = objective(d);
    d.set(i, false);
    const double with_zero = objective(d);
    const bool accept = with_one > with_zero;
    d.set(i, accept);
    if (value) *value = accept ? with_one : with_zero;
    return d[i] != before;
}

bool sweep_once(const Objective& objective, DecisionVector& d, const std::vector<std::size_t>& sweep_order) {
    bool changed = false;
    for (auto i : sweep_order) changed = coordinate_update(objective, d, i) || changed;
    return changed;
}

bool is_fixed_point(const Objective& objective, const DecisionVector& d) {
    DecisionVector probe = d;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (coordinate_update(objective, probe, i)) return false;
    }
    return true;
}

bool is_monotone_in_order(const DecisionVector& d, const std::vector<std::size_t>& order) {
    bool seen_zero = false;
    for (auto i : order) {
        if (d[i] == 0)
            seen_zero = true;
        else if (seen_zero)
            return false;
    }
    return true;
}

namespace {

/// Runs sweeps of `step` until one reports no change, detecting revisited states.
/// `step` mutates d, appends objective values to trace.update_values, and returns whether d changed.
template <typename SweepFn>
void iterate_sweeps(const Objective& objective, DecisionVector d, std::vector<std::size_t> sweep_order,
                    const RelaxationOptions& options, RelaxationTrace& trace, SweepFn&& step) {
    trace.initial = d;
    trace.sweep_order = std::move(sweep_order);
    trace.update_values.push_back(objective(d));

    std::vector<DecisionVector> history{d};
    std::map<std::vector<std::uint8_t>, std::size_t> seen{{d.values(), 0}};

    while (trace.snapshots.size() < options.max_sweeps) {
        const bool changed = step(d);
        trace.snapshots.push_back(d);
        trace.sweep_values.push_back(trace.update_values.back());
        if (!changed) {
            trace.converged = true;
            return;
        }
        ++trace.sweeps_to_converge;
        if (auto it = seen.find(d.values()); it != seen.end()) {
            trace.cycle_detected = true;
            trace.cycle_states.assign(history.begin() + static_cast<std::ptrdiff_t>(it->second), history.end());
            return;
        }
        seen.emplace(d.values(), history.size());
        history.push_back(d);
    }
    trace.max_sweeps_exceeded = true;
}

CriterionSpec ordered_spec(double lambda, const std::vector<std::size_t>& order) {
    CriterionSpec spec;
    spec.kind = CriterionKind::ordered;
    spec.lambda = lambda;
    spec.order = order;
    return spec;
}

}  // namespace

RelaxationResult block_relaxation(const PosteriorSource& source, const CriterionSpec& spec,
                                  const RelaxationOptions& options) {
    const Objective objective(source, spec);
    const std::size_t m = objective.dimension();
    RelaxationResult result;
    const auto order = spec.sweep_order(m);
    iterate_sweeps(objective, spec.initial(m), order, options, result.trace, [&](DecisionVector& d) {
        bool changed = false;
        for (auto i : order) {
            double value = 0.0;
            changed = coordinate_update(objective, d, i, &value) || changed;
            result.trace.update_values.push_back(value);
        }
        return changed;
    });
    result.decisions = result.trace.snapshots.empty() ? result.trace.initial : result.trace.snapshots.back();
    result.value = objective(result.decisions);
    return result;
}

namespace {

enum class Direction { down, up };

OrderedResult ordered_shortcut(const PosteriorSource& source, double lambda, const std::vector<std::size_t>& order,
                               const RelaxationOptions& options, Direction direction) {
    const auto spec = ordered_spec(lambda, order);
    const Objective objective(source, spec);
    const std::size_t m = objective.dimension();
    const auto working = spec.working_order(m);

    // Positions visited in update order.
    std::vector<std::size_t> sweep(working);
    if (direction == Direction::down) std::reverse(sweep.begin(), sweep.end());
    const std::uint8_t stop_value = direction == Direction::down ? 1 : 0;

    OrderedResult result;
    const auto init = direction == Direction::down ? DecisionVector::ones(m) : DecisionVector::zeros(m);
    iterate_sweeps(objective, init, sweep, options, result.trace, [&](DecisionVector& d) {
        bool changed = false;
        for (std::size_t p = 0; p < m; ++p) {
            const std::size_t i = sweep[p];
            double value = 0.0;
            changed = coordinate_update(objective, d, i, &value) || changed;
            result.trace.update_values.push_back(value);
            if (d[i] != stop_value) continue;
            // Remaining coordinates (later in update order) inherit the stop value.
            bool filled = false;
            for (std::size_t q = p + 1; q < m; ++q) {
                if (d[sweep[q]] != stop_value) {
                    d.set(sweep[q], stop_value == 1);
                    filled = true;
                }
            }
            if (filled) {
                changed = true;
                result.trace.update_values.push_back(objective(d));
            }
            break;
        }
        return changed;
    });
    result.decisions = result.trace.snapshots.empty() ? result.trace.initial : result.trace.snapshots.back();
    result.value = objective(result.decisions);
    result.shortcut_is_fixed_point = is_fixed_point(objective, result.decisions);

    CriterionSpec refine = spec;
    refine.sweep = sweep;
    refine.init = InitKind::explicit_vector;
    refine.init_vector = result.decisions;
    result.refined = block_relaxation(source, refine, options);
    return result;
}

}  // namespace

OrderedResult step_down_ordered(const PosteriorSource& source, double lambda, const std::vector<std::size_t>& order,
                                const RelaxationOptions& options) {
    return ordered_shortcut(source, lambda, order, options, Direction::down);
}

OrderedResult step_up_ordered(const PosteriorSource& source, double lambda, const std::vector<std::size_t>& order,
                              const RelaxationOptions& options) {
    return ordered_shortcut(source, lambda, order, options, Direction::up);
}

BruteForceResult brute_force(const PosteriorSource& source, const CriterionSpec& spec) {
    const std::size_t m = source.dimension();
    if (m > kBruteForceMaxDimension)
        throw std::invalid_argument("brute force enumeration limited to m <= " +
                                    std::to_string(kBruteForceMaxDimension));
    const Objective objective(source, spec);
    const std::uint64_t states = std::uint64_t{1} << m;
    std::vector<double> values(states);
    double best = -std::numeric_limits<double>::infinity();
    for (std::uint64_t c = 0; c < states; ++c) {
        values[c] = objective(DecisionVector::from_bits(c, m));
        best = std::max(best, values[c]);
    }

    BruteForceResult result;
    result.maximizer_count = 0;
    for (std::uint64_t c = 0; c < states; ++c) {
        if (values[c] < best - kTieTolerance) continue;
        ++result.maximizer_count;
        auto candidate = DecisionVector::from_bits(c, m);
        const bool better = result.maximizer_count == 1 ||
                            candidate.count_ones() < result.decisions.count_ones() ||
                            (candidate.count_ones() == result.decisions.count_ones() && candidate < result.decisions);
        if (better) {
            result.decisions = std::move(candidate);
            result.value = values[c];
        }
    }
    result.unique = result.maximizer_count == 1;
    return result;
}

RelaxationResult solve(const PosteriorSource& source, const CriterionSpec& spec, Procedure procedure,
                       const RelaxationOptions& options) {
    if (procedure == Procedure::relaxation) return block_relaxation(source, spec, options);
    if (spec.kind != CriterionKind::ordered)
        throw std::invalid_argument(to_string(procedure) + " requires the ordered criterion");
    spec.validate(source.dimension());
    auto ordered = procedure == Procedure::step_down
                       ? step_down_ordered(source, spec.lambda, spec.order, options)
                       : step_up_ordered(source, spec.lambda, spec.order, options);
    return RelaxationResult{std::move(ordered.decisions), ordered.value, std::move(ordered.trace)};
}

CalibrationResult calibrate_lambda_nonmarginal(const PosteriorSource& source, double alpha, const CriterionSpec& spec,
                                               const LambdaGrid& grid, Procedure procedure,
                                               const RelaxationOptions& options, unsigned threads) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
    if (spec.kind == CriterionKind::marginal)
        throw std::invalid_argument("use calibrate_lambda_marginal for the marginal criterion");
    if (grid[0] < 1.0) throw std::invalid_argument("non-marginal lambda grid must satisfy lambda >= 1");

    auto evaluate = [&](std::size_t k) {
        CriterionSpec at = spec;
        at.lambda = grid[k];
        const auto run = solve(source, at, procedure, options);
        CalibrationStep step;
        step.lambda = grid[k];
        step.decisions = run.decisions;
        step.achieved = Objective(source, at).expected_error(run.decisions);
        step.feasible = step.achieved <= alpha;
        return step;
    };

    // Scan ascending in blocks of `threads` grid points; stop after the first block with a feasible point.
    CalibrationResult result;
    const std::size_t block = std::max(1U, threads);
    for (std::size_t start = 0; start < grid.size(); start += block) {
        const std::size_t count = std::min(block, grid.size() - start);
        std::vector<CalibrationStep> steps(count);
        parallel_for(count, threads, [&](std::size_t k) { steps[k] = evaluate(start + k); });
        for (auto& step : steps) {
            result.path.push_back(step);
            if (step.feasible) {
                result.lambda_star = step.lambda;
                result.decisions = step.decisions;
                result.achieved = step.achieved;
                result.feasible = true;
                return result;
            }
        }
    }
    const auto best = std::min_element(result.path.begin(), result.path.end(),
                                       [](const auto& a, const auto& b) { return a.achieved < b.achieved; });
    result.lambda_star = best->lambda;
    result.decisions = best->decisions;
    result.achieved = best->achieved;
    result.feasible = false;
    return result;
}

}  // namespace nmd

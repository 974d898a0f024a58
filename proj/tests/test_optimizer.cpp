#include <doctest.h>

#include <random>

#include "nmd/optimizer.hpp"
#include "oracle.hpp"

using namespace nmd;

namespace {

IndicatorSampleMatrix split_rows() {
    return IndicatorSampleMatrix(oracle::Rows{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 1}});
}

IndicatorSampleMatrix mostly_joint_rows() {
    return IndicatorSampleMatrix(oracle::repeat({{3, {1, 1}}, {1, {0, 0}}, {1, {1, 0}}}));
}

IndicatorSampleMatrix nested_rows() {
    return IndicatorSampleMatrix(oracle::repeat({{3, {1, 1, 1}}, {4, {1, 1, 0}}, {2, {1, 0, 0}}, {1, {0, 0, 0}}}));
}

CriterionSpec general_spec(double lambda, InitKind init = InitKind::ones) {
    CriterionSpec spec;
    spec.lambda = lambda;
    spec.init = init;
    return spec;
}

void check_ascent(const RelaxationTrace& trace) {
    for (std::size_t k = 1; k < trace.update_values.size(); ++k)
        CHECK(trace.update_values[k] >= trace.update_values[k - 1] - 1e-12);
}

}  // namespace

TEST_CASE("guindani_oracle") {
    const std::vector<double> v{0.8, 0.4, 0.6};
    CHECK(guindani_oracle(v, 1.0) == DecisionVector{1, 0, 1});
    CHECK(guindani_oracle(v, 99.0) == DecisionVector{0, 0, 0});
    CHECK(guindani_oracle({0.5}, 1.0) == DecisionVector{0});
    CHECK_THROWS_AS(guindani_oracle(v, 0.0), std::invalid_argument);
}

TEST_CASE("lambda grid") {
    const auto grid = LambdaGrid::default_nonmarginal();
    CHECK(grid.size() == 64);
    CHECK(grid[0] == 1.0);
    CHECK(grid[63] == doctest::Approx(1e3));
    CHECK(LambdaGrid::default_marginal()[0] == doctest::Approx(1e-3));
    CHECK(grid.threshold_resolution() > 0.0);
    CHECK_THROWS_AS(LambdaGrid({2.0, 1.0}), std::invalid_argument);
    CHECK_THROWS_AS(LambdaGrid::geometric(1.0, 1.0, 5), std::invalid_argument);
}

TEST_CASE("calibrate_lambda_marginal") {
    const auto grid = LambdaGrid::default_marginal();
    const std::vector<double> v{0.9, 0.8, 0.6};
    const auto r = calibrate_lambda_marginal(v, 0.5, grid);
    REQUIRE(r.feasible);
    CHECK(r.decisions == DecisionVector{1, 1, 0});
    CHECK(r.achieved == doctest::Approx(0.3).epsilon(1e-12));
    const double t = acceptance_threshold(r.lambda_star);
    CHECK(t > 0.6);
    CHECK(t <= 0.6 + grid.threshold_resolution());

    // Vacuous constraint: the smallest grid lambda already keeps everything.
    const auto loose = calibrate_lambda_marginal({0.9, 0.95}, 0.5, grid);
    CHECK(loose.feasible);
    CHECK(loose.lambda_star == grid[0]);
    CHECK(loose.decisions == DecisionVector{1, 1});

    const auto empty = calibrate_lambda_marginal({0.0, 0.0}, 0.1, grid);
    CHECK(empty.feasible);
    CHECK(empty.lambda_star == grid[0]);
    CHECK(empty.decisions == DecisionVector{0, 0});
    CHECK(empty.achieved == 0.0);

    CHECK_THROWS_AS(calibrate_lambda_marginal(v, 1.0, grid), std::invalid_argument);
}

TEST_CASE("calibrate_lambda_marginal matches an ascending scan") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const auto grid = LambdaGrid::geometric(1e-2, 1e2, 40);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> v(1 + rng() % 10);
        for (auto& x : v) x = unif(rng);
        const double alpha = 0.05 + 0.9 * unif(rng);
        std::optional<std::size_t> first;
        for (std::size_t k = 0; k < grid.size() && !first; ++k)
            if (expected_false_positives(v, guindani_oracle(v, grid[k])) <= alpha) first = k;
        const auto r = calibrate_lambda_marginal(v, alpha, grid);
        CHECK(r.feasible == first.has_value());
        if (first) {
            CHECK(r.lambda_star == grid[*first]);
            CHECK(r.achieved <= alpha);
        }
    }
}

TEST_CASE("block relaxation examples") {
    const auto split = split_rows();
    const auto r = block_relaxation(split, general_spec(1.0));
    CHECK(r.decisions == DecisionVector{0, 0});
    CHECK(r.trace.sweeps_to_converge == 1);
    CHECK(r.trace.converged);
    CHECK(r.value == 0.0);
    CHECK(brute_force(split, general_spec(1.0)).value == 0.0);

    const auto joint = mostly_joint_rows();
    const auto from_ones = block_relaxation(joint, general_spec(1.0));
    CHECK(from_ones.decisions == DecisionVector{1, 1});
    CHECK(from_ones.value == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(from_ones.trace.sweeps_to_converge == 0);

    // From zeros each single acceptance looks worse than none, so (0,0) is a fixed point.
    const auto from_zeros = block_relaxation(joint, general_spec(1.0, InitKind::zeros));
    CHECK(from_zeros.decisions == DecisionVector{0, 0});
    CHECK(from_zeros.trace.converged);
}

TEST_CASE("brute force examples") {
    const auto a = brute_force(split_rows(), general_spec(1.0));
    CHECK(a.decisions == DecisionVector{0, 0});
    CHECK(a.value == 0.0);
    CHECK(a.unique);

    const auto b = brute_force(mostly_joint_rows(), general_spec(1.0));
    CHECK(b.decisions == DecisionVector{1, 1});
    CHECK(b.value == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(b.unique);

    const IndicatorSampleMatrix half(oracle::Rows{{1}, {0}});
    const auto tie = brute_force(half, general_spec(1.0));
    CHECK(tie.decisions == DecisionVector{0});
    CHECK(tie.value == 0.0);
    CHECK_FALSE(tie.unique);
    CHECK(tie.maximizer_count == 2);
}

TEST_CASE("brute force agrees with the independent enumeration") {
    std::mt19937_64 rng(12);
    for (int rep = 0; rep < 60; ++rep) {
        const std::size_t m = 1 + rng() % 6;
        const auto table = oracle::random_table(m, rng);
        const auto w = oracle::from_table(table);
        const double lambda = 1.0 + static_cast<double>(rng() % 30) / 10.0;
        const auto order = oracle::random_permutation(m, rng);
        CriterionSpec spec = general_spec(lambda);
        auto expect = oracle::enumerate_max(m, [&](const DecisionVector& d) { return oracle::objective(w, d, lambda); });
        auto got = brute_force(table, spec);
        CHECK(got.value == doctest::Approx(expect.value).epsilon(1e-12));
        if (expect.maximizers == 1) CHECK(got.decisions == expect.best);

        spec.kind = CriterionKind::ordered;
        spec.order = order;
        expect = oracle::enumerate_max(
            m, [&](const DecisionVector& d) { return oracle::objective(w, d, lambda, order, true); });
        got = brute_force(table, spec);
        CHECK(got.value == doctest::Approx(expect.value).epsilon(1e-12));
        if (expect.maximizers == 1) CHECK(got.decisions == expect.best);
    }
}

TEST_CASE("marginal kind reproduces the oracle rule") {
    std::mt19937_64 rng(31);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t m = 1 + rng() % 10;
        const IndicatorSampleMatrix mat(oracle::random_rows(1 + rng() % 50, m, rng, 0.6));
        const auto v = marginal_posteriors(mat);
        CriterionSpec spec;
        spec.kind = CriterionKind::marginal;
        spec.lambda = 0.2 + static_cast<double>(rng() % 40) / 10.0;
        const auto target = guindani_oracle(v, spec.lambda);
        for (const auto init : {InitKind::zeros, InitKind::ones}) {
            spec.init = init;
            const auto r = block_relaxation(mat, spec);
            CHECK(r.decisions == target);
            CHECK(r.trace.converged);
            CHECK(r.trace.sweeps_executed() <= 2);
            if (init == InitKind::zeros) CHECK(r.trace.snapshots.front() == target);
        }
    }
}

TEST_CASE("relaxation ascent, fixed points and the threshold lemma") {
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 150; ++rep) {
        const std::size_t m = 1 + rng() % 8;
        const auto table = oracle::random_table(m, rng);
        CriterionSpec spec = general_spec(1.0 + static_cast<double>(rng() % 40) / 10.0);
        spec.kind = rep % 2 ? CriterionKind::ordered : CriterionKind::general;
        spec.order = oracle::random_permutation(m, rng);
        spec.sweep = oracle::random_permutation(m, rng);
        spec.init = InitKind::explicit_vector;
        spec.init_vector = oracle::random_decision(m, rng);

        const auto r = block_relaxation(table, spec);
        check_ascent(r.trace);
        CHECK(r.trace.converged);
        const Objective objective(table, spec);
        CHECK(is_fixed_point(objective, r.decisions));
        CHECK(r.value == objective(r.decisions));

        if (spec.kind != CriterionKind::general) continue;
        // Replay the sweeps and check the lemma at every update.
        const double t = acceptance_threshold(spec.lambda);
        auto d = spec.init_vector;
        for (std::size_t sweep = 0; sweep < r.trace.sweeps_executed(); ++sweep) {
            for (auto i : spec.sweep) {
                auto with = d;
                with.set(i, true);
                const double p = joint_probability(table, with, i, ConditioningSpec::general(), 1);
                coordinate_update(objective, d, i);
                if (p > t) CHECK(d[i] == 1);
            }
            CHECK(d == r.trace.snapshots[sweep]);
        }
    }
}

TEST_CASE("step-down and step-up examples") {
    const IndicatorSampleMatrix all_ones(oracle::Rows{{1, 1, 1, 1}, {1, 1, 1, 1}});
    const auto down = step_down_ordered(all_ones, 1.0, {});
    CHECK(down.decisions == DecisionVector::ones(4));
    CHECK(down.trace.update_values.size() == 2);  // start value plus the single update
    CHECK(down.shortcut_is_fixed_point);

    const IndicatorSampleMatrix all_zeros(oracle::Rows{{0, 0, 0}, {0, 0, 0}});
    CHECK(step_up_ordered(all_zeros, 1.0, {}).decisions == DecisionVector::zeros(3));
    CHECK(step_down_ordered(all_zeros, 1.0, {}).decisions == DecisionVector::zeros(3));
    CHECK(step_up_ordered(all_ones, 1.0, {}).decisions == DecisionVector::ones(4));

    const auto nested = nested_rows();
    for (const auto& r : {step_down_ordered(nested, 1.0, {0, 1, 2}), step_up_ordered(nested, 1.0, {0, 1, 2})}) {
        CHECK(r.decisions == DecisionVector{1, 1, 0});
        CHECK(r.shortcut_is_fixed_point);
        CHECK(r.refined.decisions == r.decisions);
        CHECK(r.value == doctest::Approx(0.6).epsilon(1e-14));
    }
    CHECK(brute_force(nested, [] {
              CriterionSpec s;
              s.kind = CriterionKind::ordered;
              return s;
          }()).decisions == DecisionVector{1, 1, 0});

    // Reversed working order: nested probabilities (0.3, 0.3, 0.3) all fail the threshold.
    CHECK(step_down_ordered(nested, 1.0, {2, 1, 0}).decisions == DecisionVector::zeros(3));
    CHECK(step_up_ordered(nested, 1.0, {2, 1, 0}).decisions == DecisionVector::zeros(3));

    CHECK_THROWS_AS(step_down_ordered(nested, 0.5, {}), std::invalid_argument);
}

TEST_CASE("ordered procedures give monotone outputs") {
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t m = 1 + rng() % 9;
        const IndicatorSampleMatrix mat(oracle::random_rows(5 + rng() % 60, m, rng, 0.75));
        const auto order = oracle::random_permutation(m, rng);
        const double lambda = 1.0 + static_cast<double>(rng() % 20) / 10.0;
        for (const auto& r : {step_down_ordered(mat, lambda, order), step_up_ordered(mat, lambda, order)}) {
            CHECK(is_monotone_in_order(r.decisions, order));
            for (const auto& snapshot : r.trace.snapshots) CHECK(is_monotone_in_order(snapshot, order));
            check_ascent(r.refined.trace);
            CHECK(r.refined.value >= r.value - 1e-12);
        }
    }
    CHECK(is_monotone_in_order(DecisionVector{1, 1, 0}, {0, 1, 2}));
    CHECK_FALSE(is_monotone_in_order(DecisionVector{1, 1, 0}, {2, 1, 0}));
}

TEST_CASE("step-down fill can lower the objective and cycle") {
    // Working order (h3, h1, h2). From (0,0,0) the middle update accepts h1 because
    // Pr(h3 = 0, h1 = 1) = 0.6, then the fill also accepts h3 and both terms drop to 0.3.
    const auto r = step_down_ordered(nested_rows(), 1.0, {2, 0, 1});
    CHECK(r.trace.cycle_detected);
    CHECK_FALSE(r.trace.converged);
    REQUIRE(r.trace.cycle_states.size() == 2);
    CHECK(r.trace.cycle_states[0] == DecisionVector{0, 0, 0});
    CHECK(r.trace.cycle_states[1] == DecisionVector{1, 0, 1});
    CHECK(is_monotone_in_order(r.decisions, {2, 0, 1}));
    // The plain relaxation from the same place still converges.
    CHECK(r.refined.trace.converged);
}

TEST_CASE("m = 1 reduction") {
    for (const double v1 : {0.1, 0.5, 0.55, 0.75, 0.9, 1.0}) {
        const auto table = ProbabilityTable::product({v1});
        for (const double lambda : {1.0, 1.5, 3.0}) {
            const auto expect = guindani_oracle({v1}, lambda);
            for (const auto init : {InitKind::zeros, InitKind::ones}) {
                for (const auto kind : {CriterionKind::general, CriterionKind::ordered}) {
                    CriterionSpec spec = general_spec(lambda, init);
                    spec.kind = kind;
                    CHECK(block_relaxation(table, spec).decisions == expect);
                }
            }
            CHECK(step_down_ordered(table, lambda, {}).decisions == expect);
            CHECK(step_up_ordered(table, lambda, {}).decisions == expect);
        }
    }
}

TEST_CASE("solve dispatches on the procedure") {
    CriterionSpec spec;
    spec.kind = CriterionKind::ordered;
    const auto nested = nested_rows();
    CHECK(solve(nested, spec, Procedure::step_down).decisions == DecisionVector{1, 1, 0});
    CHECK(solve(nested, spec, Procedure::step_up).decisions == DecisionVector{1, 1, 0});
    CHECK(solve(nested, spec, Procedure::relaxation).decisions == DecisionVector{1, 1, 0});
    spec.kind = CriterionKind::general;
    CHECK_THROWS_AS(solve(nested, spec, Procedure::step_down), std::invalid_argument);
    CHECK(parse_procedure("step-up") == Procedure::step_up);
    CHECK(to_string(Procedure::step_down) == "step-down");
}

TEST_CASE("max sweeps bound is reported") {
    CriterionSpec spec = general_spec(1.0);
    const auto r = block_relaxation(split_rows(), spec, RelaxationOptions{0});
    CHECK(r.trace.max_sweeps_exceeded);
    CHECK_FALSE(r.trace.converged);
}

TEST_CASE("calibrate_lambda_nonmarginal") {
    const auto grid = LambdaGrid::default_nonmarginal();

    const auto zeros = calibrate_lambda_nonmarginal(split_rows(), 0.1, general_spec(1.0), grid);
    CHECK(zeros.feasible);
    CHECK(zeros.lambda_star == grid[0]);
    CHECK(zeros.decisions == DecisionVector{0, 0});
    CHECK(zeros.achieved == 0.0);

    const IndicatorSampleMatrix certain(oracle::Rows{{1, 1, 1}, {1, 1, 1}});
    const auto ones = calibrate_lambda_nonmarginal(certain, 0.1, general_spec(1.0), grid);
    CHECK(ones.feasible);
    CHECK(ones.lambda_star == grid[0]);
    CHECK(ones.decisions == DecisionVector::ones(3));
    CHECK(ones.achieved == 0.0);

    // From ones, (1,1) stays fixed at every lambda since 1.2 - 2t > -t for t < 1.
    const auto joint = mostly_joint_rows();
    const auto stuck = calibrate_lambda_nonmarginal(joint, 0.75, general_spec(1.0), grid);
    CHECK_FALSE(stuck.feasible);
    CHECK(stuck.achieved == doctest::Approx(0.8).epsilon(1e-14));
    CHECK(stuck.path.size() == grid.size());
    CHECK(stuck.path.front().decisions == DecisionVector{1, 1});

    const auto from_zeros = calibrate_lambda_nonmarginal(joint, 0.75, general_spec(1.0, InitKind::zeros), grid);
    CHECK(from_zeros.feasible);
    CHECK(from_zeros.lambda_star == grid[0]);
    CHECK(from_zeros.decisions == DecisionVector{0, 0});

    // Threaded scan returns the same first feasible point.
    std::mt19937_64 rng(2);
    for (int rep = 0; rep < 20; ++rep) {
        const IndicatorSampleMatrix mat(oracle::random_rows(40, 5, rng, 0.8));
        const auto serial = calibrate_lambda_nonmarginal(mat, 0.3, general_spec(1.0), grid);
        const auto threaded = calibrate_lambda_nonmarginal(mat, 0.3, general_spec(1.0), grid, Procedure::relaxation, {}, 4);
        CHECK(serial.lambda_star == threaded.lambda_star);
        CHECK(serial.decisions == threaded.decisions);
        CHECK(serial.feasible == threaded.feasible);
        if (serial.feasible) CHECK(serial.achieved <= 0.3);
    }

    CHECK_THROWS_AS(calibrate_lambda_nonmarginal(joint, 0.5, general_spec(1.0), LambdaGrid({0.5, 2.0})),
                    std::invalid_argument);
}

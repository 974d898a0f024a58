#include <doctest.h>

#include <random>

#include "nmd/chain.hpp"
#include "nmd/optimizer.hpp"
#include "oracle.hpp"

using namespace nmd;

namespace {

IndicatorSampleMatrix split_rows() {
    return IndicatorSampleMatrix(oracle::Rows{{1, 0}, {0, 1}, {1, 0}, {0, 1}, {1, 1}});
}

}  // namespace

TEST_CASE("sweep kernel on the split instance") {
    CriterionSpec spec;
    const auto kernel = build_sweep_kernel(split_rows(), spec);
    CHECK(kernel.state_count() == 4);
    for (std::uint64_t s = 0; s < 4; ++s) CHECK(kernel.successor[s] == 0);
    CHECK(kernel.is_fixed(0));

    const auto form = canonical_decomposition(kernel);
    CHECK(form.absorbing == std::vector<std::size_t>{0});
    CHECK(form.transient.size() == 3);
    CHECK(form.Q.isZero());
    CHECK(form.R.rows() == 3);
    CHECK(form.R.cols() == 1);
    CHECK((form.R.array() == 1.0).all());

    const auto N = fundamental_matrix(form.Q);
    CHECK(N.isIdentity());
    const auto t = absorption_times(N);
    CHECK(t.size() == 3);
    CHECK((t.array() == 1.0).all());
}

TEST_CASE("marginal kernel absorbs in one sweep") {
    std::mt19937_64 rng(6);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t m = 1 + rng() % 6;
        const IndicatorSampleMatrix mat(oracle::random_rows(20, m, rng));
        CriterionSpec spec;
        spec.kind = CriterionKind::marginal;
        spec.lambda = 0.5 + static_cast<double>(rng() % 30) / 10.0;
        const auto target = guindani_oracle(marginal_posteriors(mat), spec.lambda).to_bits();
        const auto kernel = build_sweep_kernel(mat, spec);
        for (auto s : kernel.successor) CHECK(s == target);
        const auto report = analyze_chain(kernel);
        CHECK(report.form.absorbing == std::vector<std::size_t>{target});
        CHECK((report.t.array() == 1.0).all());
        CHECK(report.times_match_simulation);
    }
}

TEST_CASE("kernel fixed points are relaxation outputs") {
    std::mt19937_64 rng(8);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t m = 1 + rng() % 6;
        const auto table = oracle::random_table(m, rng);
        CriterionSpec spec;
        spec.kind = rep % 2 ? CriterionKind::ordered : CriterionKind::general;
        spec.lambda = 1.0 + static_cast<double>(rng() % 20) / 10.0;
        spec.order = oracle::random_permutation(m, rng);
        spec.sweep = oracle::random_permutation(m, rng);
        const auto kernel = build_sweep_kernel(table, spec, {16, 3});
        const auto report = analyze_chain(kernel);
        for (std::uint64_t s = 0; s < kernel.state_count(); ++s) {
            CriterionSpec from = spec;
            from.init = InitKind::explicit_vector;
            from.init_vector = DecisionVector::from_bits(s, m);
            const auto r = block_relaxation(table, from);
            CHECK(r.decisions.to_bits() == report.absorbed_into[s]);
            CHECK(kernel.is_fixed(s) == (r.trace.sweeps_to_converge == 0));
        }
        for (std::size_t k = 0; k < report.form.transient.size(); ++k) {
            CriterionSpec from = spec;
            from.init = InitKind::explicit_vector;
            from.init_vector = DecisionVector::from_bits(report.form.transient[k], m);
            CHECK(report.t[static_cast<Eigen::Index>(k)] ==
                  static_cast<double>(block_relaxation(table, from).trace.sweeps_to_converge));
        }
    }
}

TEST_CASE("identity kernel has no transient states") {
    SweepKernel kernel{2, {0, 1, 2, 3}};
    const auto report = analyze_chain(kernel);
    CHECK(report.form.transient.empty());
    CHECK(report.form.absorbing.size() == 4);
    CHECK(report.form.Q.size() == 0);
    CHECK(report.form.R.size() == 0);
    CHECK(report.t.size() == 0);
    CHECK(report.times_match_simulation);
}

TEST_CASE("structural errors") {
    SweepKernel two_cycle{2, {0, 2, 1, 3}};
    try {
        canonical_decomposition(two_cycle);
        FAIL("expected an error");
    } catch (const ChainStructureError& e) {
        CHECK(e.kind() == ChainStructureError::Kind::unabsorbable_transient);
        CHECK(e.cycle() == std::vector<std::size_t>{1, 2});
    }

    SweepKernel no_fixed{1, {1, 0}};
    try {
        canonical_decomposition(no_fixed);
        FAIL("expected an error");
    } catch (const ChainStructureError& e) {
        CHECK(e.kind() == ChainStructureError::Kind::no_absorbing_state);
    }

    const auto sims = simulate_absorption_steps(two_cycle);
    CHECK(sims[0] == std::optional<std::size_t>{0});
    CHECK_FALSE(sims[1].has_value());

    Eigen::MatrixXd not_stochastic(2, 2);
    not_stochastic << 0.5, 0.4, 0.0, 1.0;
    CHECK_THROWS_AS(canonical_decomposition(not_stochastic), ChainStructureError);

    Eigen::MatrixXd singular(1, 1);
    singular << 1.0;
    CHECK_THROWS_AS(fundamental_matrix(singular), ChainStructureError);

    CriterionSpec spec;
    CHECK_THROWS_AS(build_sweep_kernel(split_rows(), spec, {1, 1}), std::invalid_argument);
}

TEST_CASE("fundamental matrix examples") {
    CHECK(fundamental_matrix(Eigen::MatrixXd::Zero(3, 3)).isIdentity());

    Eigen::MatrixXd half(1, 1);
    half << 0.5;
    CHECK(fundamental_matrix(half)(0, 0) == doctest::Approx(2.0).epsilon(1e-15));

    Eigen::MatrixXd path(2, 2);
    path << 0, 1, 0, 0;
    Eigen::MatrixXd expected(2, 2);
    expected << 1, 1, 0, 1;
    const auto N = fundamental_matrix(path);
    CHECK(N == expected);
    const auto t = absorption_times(N);
    CHECK(t[0] == 2.0);
    CHECK(t[1] == 1.0);

    CHECK(absorption_times(Eigen::MatrixXd(0, 0)).size() == 0);
}

TEST_CASE("general stochastic matrix decomposition") {
    // Gambler's ruin on {0,1,2,3} with absorbing ends.
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(4, 4);
    P(0, 0) = 1.0;
    P(3, 3) = 1.0;
    P(1, 0) = 0.5;
    P(1, 2) = 0.5;
    P(2, 1) = 0.5;
    P(2, 3) = 0.5;
    const auto form = canonical_decomposition(P);
    CHECK(form.transient.size() == 2);
    CHECK(form.absorbing == std::vector<std::size_t>{0, 3});
    const auto N = fundamental_matrix(form.Q);
    const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(2, 2);
    CHECK((N * (I - form.Q) - I).cwiseAbs().maxCoeff() <= 1e-12);
    const auto t = absorption_times(N);
    CHECK(t[0] == doctest::Approx(2.0));
    CHECK(t[1] == doctest::Approx(2.0));
    CHECK((N.array() >= 0.0).all());

    const auto assembled = form.assemble();
    CHECK(assembled.rows() == 4);
    CHECK((assembled.rowwise().sum().array() - 1.0).abs().maxCoeff() <= 1e-15);
    CHECK(assembled.bottomLeftCorner(2, 2).isZero());
    CHECK(assembled.bottomRightCorner(2, 2).isIdentity());
}

TEST_CASE("absorption times equal simulated sweep counts") {
    std::mt19937_64 rng(123);
    std::size_t with_transients = 0;
    for (int rep = 0; rep < 40; ++rep) {
        const std::size_t m = 2 + rng() % 7;
        const auto table = oracle::random_table(m, rng);
        CriterionSpec spec;
        spec.kind = rep % 3 == 0 ? CriterionKind::ordered : CriterionKind::general;
        spec.lambda = 1.0 + static_cast<double>(rng() % 20) / 10.0;
        spec.order = oracle::random_permutation(m, rng);
        const auto kernel = build_sweep_kernel(table, spec);
        const auto report = analyze_chain(kernel);
        CHECK(report.fundamental_materialized);
        CHECK(report.times_match_simulation);
        CHECK(report.identity_residual <= 1e-9);
        CHECK((report.N.array() >= 0.0).all());
        // Strictly upper triangular Q under the chosen transient order.
        CHECK(report.form.Q.triangularView<Eigen::Lower>().toDenseMatrix().isZero());
        const auto P = kernel.transition_matrix();
        CHECK((P.rowwise().sum().array() == 1.0).all());
        for (std::size_t k = 0; k < report.form.transient.size(); ++k) {
            const double tk = report.t[static_cast<Eigen::Index>(k)];
            CHECK(tk == std::floor(tk));
            CHECK(tk == static_cast<double>(report.simulated[k]));
        }
        if (!report.form.transient.empty()) ++with_transients;

        // The path-accumulated times agree with the dense ones.
        const auto sparse = analyze_chain(kernel, ChainOptions{0});
        CHECK_FALSE(sparse.fundamental_materialized);
        CHECK(sparse.t == report.t);
        CHECK(sparse.times_match_simulation);
    }
    CHECK(with_transients > 0);
}

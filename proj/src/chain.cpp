#include "nmd/chain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>

#include "nmd/optimizer.hpp"
#include "nmd/parallel.hpp"

namespace nmd {

Eigen::MatrixXd SweepKernel::transition_matrix() const {
    const auto n = static_cast<Eigen::Index>(state_count());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index s = 0; s < n; ++s) P(s, static_cast<Eigen::Index>(successor[static_cast<std::size_t>(s)])) = 1.0;
    return P;
}

SweepKernel build_sweep_kernel(const PosteriorSource& source, const CriterionSpec& spec,
                               const KernelOptions& options) {
    const std::size_t m = source.dimension();
    if (m > options.max_m || m > 30)
        throw std::invalid_argument("sweep kernel enumerates 2^m states; m = " + std::to_string(m) +
                                    " exceeds the cap of " + std::to_string(std::min<std::size_t>(options.max_m, 30)));
    const Objective objective(source, spec);
    const auto sweep = spec.sweep_order(m);
    SweepKernel kernel;
    kernel.m = m;
    kernel.successor.resize(std::size_t{1} << m);
    parallel_for(kernel.successor.size(), options.threads, [&](std::size_t s) {
        auto d = DecisionVector::from_bits(s, m);
        sweep_once(objective, d, sweep);
        kernel.successor[s] = d.to_bits();
    });
    return kernel;
}

Eigen::MatrixXd CanonicalForm::assemble() const {
    const auto nt = static_cast<Eigen::Index>(transient.size());
    const auto na = static_cast<Eigen::Index>(absorbing.size());
    Eigen::MatrixXd P = Eigen::MatrixXd::Zero(nt + na, nt + na);
    if (nt > 0) {
        P.topLeftCorner(nt, nt) = Q;
        P.topRightCorner(nt, na) = R;
    }
    P.bottomRightCorner(na, na).setIdentity();
    return P;
}

namespace {

struct StateLayout {
    std::vector<std::size_t> transient;
    std::vector<std::size_t> absorbing;
    std::vector<std::size_t> distance;  // sweeps to absorption, per state
};

/// Distances to absorption for every state; throws on states that never reach a fixed point.
StateLayout layout_states(const SweepKernel& kernel) {
    const std::size_t n = kernel.state_count();
    constexpr std::size_t kUnknown = static_cast<std::size_t>(-1);
    StateLayout layout;
    layout.distance.assign(n, kUnknown);
    for (std::size_t s = 0; s < n; ++s) {
        if (kernel.successor[s] == s) {
            layout.absorbing.push_back(s);
            layout.distance[s] = 0;
        }
    }
    if (layout.absorbing.empty()) {
        std::vector<std::size_t> cycle;
        std::vector<bool> seen(n, false);
        std::size_t s = 0;
        while (!seen[s]) {
            seen[s] = true;
            s = kernel.successor[s];
        }
        const std::size_t start = s;
        do {
            cycle.push_back(s);
            s = kernel.successor[s];
        } while (s != start);
        throw ChainStructureError(ChainStructureError::Kind::no_absorbing_state,
                                  "sweep map has no fixed point; the chain is not absorbing", cycle);
    }

    std::vector<std::uint8_t> on_path(n, 0);
    std::vector<std::size_t> path;
    for (std::size_t s0 = 0; s0 < n; ++s0) {
        path.clear();
        std::size_t s = s0;
        while (layout.distance[s] == kUnknown) {
            if (on_path[s]) {
                std::vector<std::size_t> cycle(std::find(path.begin(), path.end(), s), path.end());
                throw ChainStructureError(ChainStructureError::Kind::unabsorbable_transient,
                                          "transient state cannot be absorbed: sweep map cycles", cycle);
            }
            on_path[s] = 1;
            path.push_back(s);
            s = kernel.successor[s];
        }
        std::size_t dist = layout.distance[s];
        for (auto it = path.rbegin(); it != path.rend(); ++it) {
            layout.distance[*it] = ++dist;
            on_path[*it] = 0;
        }
    }
    for (std::size_t s = 0; s < n; ++s) {
        if (layout.distance[s] > 0) layout.transient.push_back(s);
    }
    std::stable_sort(layout.transient.begin(), layout.transient.end(), [&](std::size_t a, std::size_t b) {
        return layout.distance[a] > layout.distance[b];
    });
    return layout;
}

CanonicalForm dense_form(const SweepKernel& kernel, const StateLayout& layout) {
    CanonicalForm form;
    form.transient = layout.transient;
    form.absorbing = layout.absorbing;
    const auto nt = static_cast<Eigen::Index>(form.transient.size());
    const auto na = static_cast<Eigen::Index>(form.absorbing.size());
    std::vector<Eigen::Index> position(kernel.state_count(), -1);
    for (Eigen::Index k = 0; k < nt; ++k) position[form.transient[static_cast<std::size_t>(k)]] = k;
    for (Eigen::Index k = 0; k < na; ++k) position[form.absorbing[static_cast<std::size_t>(k)]] = k;
    form.Q = Eigen::MatrixXd::Zero(nt, nt);
    form.R = Eigen::MatrixXd::Zero(nt, na);
    for (Eigen::Index k = 0; k < nt; ++k) {
        const auto next = kernel.successor[form.transient[static_cast<std::size_t>(k)]];
        if (kernel.successor[next] == next)
            form.R(k, position[next]) = 1.0;
        else
            form.Q(k, position[next]) = 1.0;
    }
    return form;
}

}  // namespace

CanonicalForm canonical_decomposition(const SweepKernel& kernel) { return dense_form(kernel, layout_states(kernel)); }

CanonicalForm canonical_decomposition(const Eigen::MatrixXd& P) {
    if (P.rows() != P.cols() || P.rows() == 0)
        throw ChainStructureError(ChainStructureError::Kind::invalid_matrix, "transition matrix must be square");
    const auto n = P.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        if ((P.row(i).array() < 0.0).any() || std::abs(P.row(i).sum() - 1.0) > 1e-9)
            throw ChainStructureError(ChainStructureError::Kind::invalid_matrix,
                                      "row " + std::to_string(i) + " is not a probability vector");
    }

    CanonicalForm form;
    std::vector<bool> absorbing(static_cast<std::size_t>(n), false);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (P(i, i) == 1.0) {
            absorbing[static_cast<std::size_t>(i)] = true;
            form.absorbing.push_back(static_cast<std::size_t>(i));
        } else {
            form.transient.push_back(static_cast<std::size_t>(i));
        }
    }
    if (form.absorbing.empty())
        throw ChainStructureError(ChainStructureError::Kind::no_absorbing_state, "chain has no absorbing state");

    // Backward reachability from the absorbing set.
    std::vector<bool> reaches(absorbing);
    std::deque<Eigen::Index> queue(form.absorbing.begin(), form.absorbing.end());
    while (!queue.empty()) {
        const auto j = queue.front();
        queue.pop_front();
        for (Eigen::Index i = 0; i < n; ++i) {
            if (!reaches[static_cast<std::size_t>(i)] && P(i, j) > 0.0) {
                reaches[static_cast<std::size_t>(i)] = true;
                queue.push_back(i);
            }
        }
    }
    std::vector<std::size_t> stuck;
    for (std::size_t i = 0; i < reaches.size(); ++i) {
        if (!reaches[i]) stuck.push_back(i);
    }
    if (!stuck.empty())
        throw ChainStructureError(ChainStructureError::Kind::unabsorbable_transient,
                                  "transient state cannot be absorbed", stuck);

    const auto nt = static_cast<Eigen::Index>(form.transient.size());
    const auto na = static_cast<Eigen::Index>(form.absorbing.size());
    form.Q.resize(nt, nt);
    form.R.resize(nt, na);
    for (Eigen::Index k = 0; k < nt; ++k) {
        const auto row = static_cast<Eigen::Index>(form.transient[static_cast<std::size_t>(k)]);
        for (Eigen::Index l = 0; l < nt; ++l)
            form.Q(k, l) = P(row, static_cast<Eigen::Index>(form.transient[static_cast<std::size_t>(l)]));
        for (Eigen::Index l = 0; l < na; ++l)
            form.R(k, l) = P(row, static_cast<Eigen::Index>(form.absorbing[static_cast<std::size_t>(l)]));
    }
    return form;
}

Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& Q) {
    if (Q.rows() != Q.cols()) throw ChainStructureError(ChainStructureError::Kind::invalid_matrix, "Q must be square");
    const auto n = Q.rows();
    if (n == 0) return Eigen::MatrixXd(0, 0);
    const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n) - Q;
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    const double scale = A.cwiseAbs().maxCoeff();
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(min_pivot > 1e-13 * scale))
        throw ChainStructureError(ChainStructureError::Kind::singular, "I - Q is singular");
    return lu.solve(Eigen::MatrixXd::Identity(n, n));
}

Eigen::VectorXd absorption_times(const Eigen::MatrixXd& N) { return N * Eigen::VectorXd::Ones(N.cols()); }

std::vector<std::optional<std::size_t>> simulate_absorption_steps(const SweepKernel& kernel) {
    const std::size_t n = kernel.state_count();
    std::vector<std::optional<std::size_t>> steps(n);
    for (std::size_t s0 = 0; s0 < n; ++s0) {
        std::size_t s = s0;
        for (std::size_t k = 0; k <= n; ++k) {
            if (kernel.successor[s] == s) {
                steps[s0] = k;
                break;
            }
            s = kernel.successor[s];
        }
    }
    return steps;
}

AbsorbingChainReport analyze_chain(const SweepKernel& kernel, const ChainOptions& options) {
    const auto layout = layout_states(kernel);
    AbsorbingChainReport report;
    report.m = kernel.m;

    const auto nt = static_cast<Eigen::Index>(layout.transient.size());
    if (layout.transient.size() <= options.dense_limit) {
        report.form = dense_form(kernel, layout);
        report.N = fundamental_matrix(report.form.Q);
        report.t = absorption_times(report.N);
        report.fundamental_materialized = true;
        if (nt > 0) {
            const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(nt, nt);
            report.identity_residual = (report.N * (I - report.form.Q) - I).cwiseAbs().maxCoeff();
        }
    } else {
        report.form.transient = layout.transient;
        report.form.absorbing = layout.absorbing;
        // N 1 = sum_k Q^k 1; with Q strictly upper triangular in this ordering the
        // series is finite and can be accumulated from the end of the order.
        std::vector<double> time(kernel.state_count(), 0.0);
        report.t.resize(nt);
        for (Eigen::Index k = nt - 1; k >= 0; --k) {
            const auto s = layout.transient[static_cast<std::size_t>(k)];
            time[s] = 1.0 + time[kernel.successor[s]];
            report.t(k) = time[s];
        }
    }

    const auto simulated = simulate_absorption_steps(kernel);
    report.simulated.reserve(layout.transient.size());
    report.times_match_simulation = true;
    for (Eigen::Index k = 0; k < nt; ++k) {
        const auto& steps = simulated[layout.transient[static_cast<std::size_t>(k)]];
        report.simulated.push_back(steps.value_or(0));
        if (!steps || report.t(k) != static_cast<double>(*steps)) report.times_match_simulation = false;
    }

    report.absorbed_into.resize(kernel.state_count());
    for (std::size_t s0 = 0; s0 < kernel.state_count(); ++s0) {
        std::size_t s = s0;
        while (kernel.successor[s] != s) s = kernel.successor[s];
        report.absorbed_into[s0] = s;
    }
    return report;
}

}  // namespace nmd

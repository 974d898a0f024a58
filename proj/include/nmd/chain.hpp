#pragma once

// The sweep map of a block relaxation viewed as an absorbing Markov chain on {0,1}^m.
// One chain step is one full sweep; fixed points are the absorbing states.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmd/criteria.hpp"
#include "nmd/posterior.hpp"

namespace nmd {

/// Deterministic successor of every state after one sweep. State s encodes d_j as bit j.
struct SweepKernel {
    std::size_t m = 0;
    std::vector<std::uint64_t> successor;

    std::size_t state_count() const noexcept { return successor.size(); }
    bool is_fixed(std::uint64_t s) const { return successor.at(s) == s; }

    /// Dense row-stochastic matrix with one unit entry per row.
    Eigen::MatrixXd transition_matrix() const;
};

struct KernelOptions {
    std::size_t max_m = 16;
    unsigned threads = 1;
};

SweepKernel build_sweep_kernel(const PosteriorSource& source, const CriterionSpec& spec,
                               const KernelOptions& options = {});

class ChainStructureError : public std::runtime_error {
public:
    enum class Kind { no_absorbing_state, unabsorbable_transient, singular, invalid_matrix };

    ChainStructureError(Kind kind, const std::string& what, std::vector<std::size_t> cycle = {})
        : std::runtime_error(what), kind_(kind), cycle_(std::move(cycle)) {}

    Kind kind() const noexcept { return kind_; }
    /// States on the offending closed class, when one was found.
    const std::vector<std::size_t>& cycle() const noexcept { return cycle_; }

private:
    Kind kind_;
    std::vector<std::size_t> cycle_;
};

/// P rearranged as [[Q, R], [0, I]]: transient states first, absorbing last.
struct CanonicalForm {
    std::vector<std::size_t> transient;
    std::vector<std::size_t> absorbing;
    Eigen::MatrixXd Q;
    Eigen::MatrixXd R;

    /// Reassembles the canonical block matrix.
    Eigen::MatrixXd assemble() const;
};

/// Transient states are ordered by decreasing distance to absorption (ties by state index),
/// which makes Q strictly upper triangular.
CanonicalForm canonical_decomposition(const SweepKernel& kernel);

/// General row-stochastic matrix; absorbing states are those with P(i,i) == 1.
CanonicalForm canonical_decomposition(const Eigen::MatrixXd& P);

/// N = (I - Q)^{-1} via LU with partial pivoting.
Eigen::MatrixXd fundamental_matrix(const Eigen::MatrixXd& Q);

/// t = N 1.
Eigen::VectorXd absorption_times(const Eigen::MatrixXd& N);

/// Sweeps from each state until a fixed point; std::nullopt when none is reached.
std::vector<std::optional<std::size_t>> simulate_absorption_steps(const SweepKernel& kernel);

struct ChainOptions {
    /// Largest transient count for which N is formed densely. Above it t is
    /// accumulated along the (nilpotent) transient paths instead.
    std::size_t dense_limit = 2048;
};

struct AbsorbingChainReport {
    std::size_t m = 0;
    CanonicalForm form;
    bool fundamental_materialized = false;
    Eigen::MatrixXd N;
    /// Indexed like form.transient.
    Eigen::VectorXd t;
    /// Directly simulated sweep counts, indexed like form.transient.
    std::vector<std::size_t> simulated;
    /// Absorbing state reached from every state.
    std::vector<std::uint64_t> absorbed_into;
    /// max |N (I - Q) - I|; 0 when N is not materialized.
    double identity_residual = 0.0;
    /// t equals the simulated counts exactly.
    bool times_match_simulation = false;
};

AbsorbingChainReport analyze_chain(const SweepKernel& kernel, const ChainOptions& options = {});

}  // namespace nmd

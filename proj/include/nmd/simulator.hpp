#pragma once

// Synthetic multiple-testing problems from an equicorrelated Gaussian model:
//   X | theta ~ N(theta, sigma2 I),  theta ~ N(mu0, tau2 [(1 - rho) I + rho J]),
//   H0i: theta_i <= c  vs  H1i: theta_i > c.
// The posterior is Gaussian, so indicator draws carry no MCMC error.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nmd/decision.hpp"
#include "nmd/posterior.hpp"

namespace nmd {

struct GaussianScenario {
    std::size_t m = 1;
    double sigma2 = 1.0;
    double tau2 = 1.0;
    double rho = 0.0;
    /// Length m, or length 1 to broadcast.
    std::vector<double> mu0{0.0};
    /// Length m, or length 1 to broadcast.
    std::vector<double> theta_true{0.0};
    double cutpoint = 0.0;
    std::uint64_t seed = 1;
    std::size_t samples = 1000;
    /// Fixed observations; drawn from the model when absent.
    std::optional<std::vector<double>> data;

    /// Throws std::invalid_argument on a malformed scenario.
    void validate() const;

    Eigen::VectorXd prior_mean() const;
    Eigen::VectorXd true_mean() const;
    Eigen::MatrixXd prior_covariance() const;

    /// The first k hypotheses of this scenario (same prior marginals and observations).
    GaussianScenario leading(std::size_t k) const;
};

struct GaussianPosterior {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;
};

/// Conjugate update of the scenario's prior given observations x.
GaussianPosterior gaussian_posterior(const GaussianScenario& scenario, const Eigen::VectorXd& x);

/// Pr(theta_i > c | x) for each i, from the exact posterior.
std::vector<double> analytic_marginals(const GaussianScenario& scenario, const Eigen::VectorXd& x);

struct SimulationOutput {
    std::vector<double> data;
    DecisionVector truth;
    IndicatorSampleMatrix samples;
    std::vector<double> analytic;
};

/// Draws X (unless fixed), then `samples` posterior draws of theta, thresholded at c.
/// Deterministic in the scenario, including its seed.
SimulationOutput generate(const GaussianScenario& scenario);

/// Observations for the scenario: the fixed data, or the first draw of generate().
Eigen::VectorXd scenario_observations(const GaussianScenario& scenario);

struct MultiplicityReport {
    std::size_t m_small = 0;
    std::size_t m_large = 0;
    double v_small = 0.0;
    double v_large = 0.0;
    double difference = 0.0;  // v_large - v_small
};

/// Analytic Pr(theta_1 > c | D) when only the first m_small versus the first m_large
/// hypotheses are tested; hypothesis 1 keeps the same observation and prior marginal.
MultiplicityReport multiplicity_probe(const GaussianScenario& scenario, std::size_t m_small, std::size_t m_large);

/// Flat key=value text; '#' starts a comment; lists are comma separated.
GaussianScenario parse_scenario(std::istream& in);
GaussianScenario load_scenario(const std::string& path);
std::string to_config_text(const GaussianScenario& scenario);

}  // namespace nmd

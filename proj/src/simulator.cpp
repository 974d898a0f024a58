#include "nmd/simulator.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace nmd {

namespace {

Eigen::VectorXd broadcast(const std::vector<double>& values, std::size_t m, const char* name) {
    if (values.size() == 1) return Eigen::VectorXd::Constant(static_cast<Eigen::Index>(m), values.front());
    if (values.size() != m) throw std::invalid_argument(std::string(name) + " must have length 1 or m");
    return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(m));
}

std::vector<double> leading_values(const std::vector<double>& values, std::size_t k) {
    if (values.size() == 1) return values;
    return {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(k)};
}

double upper_tail(double mean, double variance, double c) {
    if (variance <= 0.0) return mean > c ? 1.0 : 0.0;
    return 0.5 * std::erfc((c - mean) / std::sqrt(2.0 * variance));
}

}  // namespace

void GaussianScenario::validate() const {
    if (m == 0) throw std::invalid_argument("scenario needs m >= 1");
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) throw std::invalid_argument("sigma2 must be positive");
    if (!(tau2 > 0.0) || !std::isfinite(tau2)) throw std::invalid_argument("tau2 must be positive");
    if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1) for a positive definite prior");
    if (samples == 0) throw std::invalid_argument("scenario needs at least one posterior sample");
    broadcast(mu0, m, "mu0");
    broadcast(theta_true, m, "theta_true");
    if (data && data->size() != m) throw std::invalid_argument("data must have length m");
}

Eigen::VectorXd GaussianScenario::prior_mean() const { return broadcast(mu0, m, "mu0"); }
Eigen::VectorXd GaussianScenario::true_mean() const { return broadcast(theta_true, m, "theta_true"); }

Eigen::MatrixXd GaussianScenario::prior_covariance() const {
    const auto n = static_cast<Eigen::Index>(m);
    Eigen::MatrixXd cov = Eigen::MatrixXd::Constant(n, n, tau2 * rho);
    cov.diagonal().setConstant(tau2);
    return cov;
}

GaussianScenario GaussianScenario::leading(std::size_t k) const {
    if (k == 0 || k > m) throw std::invalid_argument("leading sub-problem size out of range");
    GaussianScenario sub = *this;
    sub.m = k;
    sub.mu0 = leading_values(mu0, k);
    sub.theta_true = leading_values(theta_true, k);
    if (data) sub.data = std::vector<double>(data->begin(), data->begin() + static_cast<std::ptrdiff_t>(k));
    return sub;
}

GaussianPosterior gaussian_posterior(const GaussianScenario& scenario, const Eigen::VectorXd& x) {
    scenario.validate();
    if (x.size() != static_cast<Eigen::Index>(scenario.m)) throw std::invalid_argument("observation length mismatch");
    const Eigen::MatrixXd prior = scenario.prior_covariance();
    const Eigen::VectorXd mu0 = scenario.prior_mean();
    Eigen::MatrixXd marginal = prior;
    marginal.diagonal().array() += scenario.sigma2;

    // Gain form: mean = mu0 + S0 (S0 + sigma2 I)^{-1} (x - mu0), cov = S0 - S0 (S0 + sigma2 I)^{-1} S0.
    const Eigen::LLT<Eigen::MatrixXd> llt(marginal);
    if (llt.info() != Eigen::Success) throw std::invalid_argument("prior covariance is not positive definite");
    GaussianPosterior post;
    post.mean = mu0 + prior * llt.solve(x - mu0);
    post.covariance = prior - prior * llt.solve(prior);
    post.covariance = 0.5 * (post.covariance + post.covariance.transpose()).eval();
    return post;
}

std::vector<double> analytic_marginals(const GaussianScenario& scenario, const Eigen::VectorXd& x) {
    const auto post = gaussian_posterior(scenario, x);
    std::vector<double> v(scenario.m);
    for (std::size_t i = 0; i < scenario.m; ++i) {
        const auto k = static_cast<Eigen::Index>(i);
        v[i] = upper_tail(post.mean(k), post.covariance(k, k), scenario.cutpoint);
    }
    return v;
}

namespace {

Eigen::VectorXd draw_observations(const GaussianScenario& scenario, std::mt19937_64& rng) {
    if (scenario.data)
        return Eigen::Map<const Eigen::VectorXd>(scenario.data->data(), static_cast<Eigen::Index>(scenario.m));
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::VectorXd theta = scenario.true_mean();
    const double sd = std::sqrt(scenario.sigma2);
    Eigen::VectorXd x(theta.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = theta(i) + sd * normal(rng);
    return x;
}

}  // namespace

Eigen::VectorXd scenario_observations(const GaussianScenario& scenario) {
    scenario.validate();
    std::mt19937_64 rng(scenario.seed);
    return draw_observations(scenario, rng);
}

SimulationOutput generate(const GaussianScenario& scenario) {
    scenario.validate();
    std::mt19937_64 rng(scenario.seed);
    const Eigen::VectorXd x = draw_observations(scenario, rng);
    const auto post = gaussian_posterior(scenario, x);

    // cov = V diag(e) V^T; draws are mean + V sqrt(e) z. Tolerates a nearly singular posterior.
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(post.covariance);
    const Eigen::MatrixXd factor = eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();

    const std::size_t m = scenario.m;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<std::vector<std::uint8_t>> rows(scenario.samples, std::vector<std::uint8_t>(m));
    Eigen::VectorXd z(static_cast<Eigen::Index>(m));
    for (auto& row : rows) {
        for (Eigen::Index k = 0; k < z.size(); ++k) z(k) = normal(rng);
        const Eigen::VectorXd theta = post.mean + factor * z;
        for (std::size_t i = 0; i < m; ++i) row[i] = theta(static_cast<Eigen::Index>(i)) > scenario.cutpoint ? 1 : 0;
    }

    const Eigen::VectorXd truth_mean = scenario.true_mean();
    DecisionVector truth(m);
    for (std::size_t i = 0; i < m; ++i) truth.set(i, truth_mean(static_cast<Eigen::Index>(i)) > scenario.cutpoint);

    std::vector<std::string> names(m);
    for (std::size_t i = 0; i < m; ++i) names[i] = "h" + std::to_string(i + 1);

    return SimulationOutput{std::vector<double>(x.data(), x.data() + x.size()), std::move(truth),
                            IndicatorSampleMatrix(rows, std::move(names)), analytic_marginals(scenario, x)};
}

MultiplicityReport multiplicity_probe(const GaussianScenario& scenario, std::size_t m_small, std::size_t m_large) {
    scenario.validate();
    if (m_small == 0 || m_small > m_large || m_large > scenario.m)
        throw std::invalid_argument("multiplicity probe needs 1 <= m_small <= m_large <= m");
    const Eigen::VectorXd x = scenario_observations(scenario);
    auto first_marginal = [&](std::size_t k) {
        const auto sub = scenario.leading(k);
        return analytic_marginals(sub, x.head(static_cast<Eigen::Index>(k))).front();
    };
    MultiplicityReport report;
    report.m_small = m_small;
    report.m_large = m_large;
    report.v_small = first_marginal(m_small);
    report.v_large = first_marginal(m_large);
    report.difference = report.v_large - report.v_small;
    return report;
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

double parse_real(const std::string& token, const std::string& key) {
    std::size_t used = 0;
    double value = 0.0;
    try {
        value = std::stod(token, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != token.size() || token.empty())
        throw std::invalid_argument("scenario key '" + key + "': invalid number '" + token + "'");
    return value;
}

std::vector<double> parse_list(const std::string& text, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_real(trim(item), key));
    if (out.empty()) throw std::invalid_argument("scenario key '" + key + "' is empty");
    return out;
}

std::uint64_t parse_count(const std::string& token, const std::string& key) {
    const double v = parse_real(token, key);
    if (v < 0 || v != std::floor(v) || v > 9.0e15)
        throw std::invalid_argument("scenario key '" + key + "' must be a non-negative integer");
    return static_cast<std::uint64_t>(v);
}

std::string join(const std::vector<double>& values) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? "," : "") << values[i];
    return out.str();
}

}  // namespace

GaussianScenario parse_scenario(std::istream& in) {
    GaussianScenario scenario;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": expected key=value");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "m")
            scenario.m = parse_count(value, key);
        else if (key == "sigma2")
            scenario.sigma2 = parse_real(value, key);
        else if (key == "tau2")
            scenario.tau2 = parse_real(value, key);
        else if (key == "rho")
            scenario.rho = parse_real(value, key);
        else if (key == "mu0")
            scenario.mu0 = parse_list(value, key);
        else if (key == "theta_true")
            scenario.theta_true = parse_list(value, key);
        else if (key == "cutpoint")
            scenario.cutpoint = parse_real(value, key);
        else if (key == "seed")
            scenario.seed = parse_count(value, key);
        else if (key == "samples")
            scenario.samples = parse_count(value, key);
        else if (key == "data")
            scenario.data = parse_list(value, key);
        else
            throw std::invalid_argument("scenario line " + std::to_string(line_no) + ": unknown key '" + key + "'");
    }
    scenario.validate();
    return scenario;
}

GaussianScenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open scenario file '" + path + "'");
    return parse_scenario(in);
}

std::string to_config_text(const GaussianScenario& scenario) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "m=" << scenario.m << '\n'
        << "sigma2=" << scenario.sigma2 << '\n'
        << "tau2=" << scenario.tau2 << '\n'
        << "rho=" << scenario.rho << '\n'
        << "mu0=" << join(scenario.mu0) << '\n'
        << "theta_true=" << join(scenario.theta_true) << '\n'
        << "cutpoint=" << scenario.cutpoint << '\n'
        << "seed=" << scenario.seed << '\n'
        << "samples=" << scenario.samples << '\n';
    if (scenario.data) out << "data=" << join(*scenario.data) << '\n';
    return out.str();
}

}  // namespace nmd

#include "nmd/criteria.hpp"

#include <stdexcept>

namespace nmd {

std::string to_string(CriterionKind kind) {
    switch (kind) {
        case CriterionKind::marginal: return "marginal";
        case CriterionKind::general: return "general";
        case CriterionKind::ordered: return "ordered";
    }
    return "unknown";
}

CriterionKind parse_criterion_kind(const std::string& name) {
    if (name == "marginal") return CriterionKind::marginal;
    if (name == "general") return CriterionKind::general;
    if (name == "ordered") return CriterionKind::ordered;
    throw std::invalid_argument("unknown criterion '" + name + "'");
}

double acceptance_threshold(double lambda) { return lambda / (1.0 + lambda); }

void CriterionSpec::validate(std::size_t m) const {
    if (kind == CriterionKind::marginal) {
        if (!(lambda > 0.0)) throw std::invalid_argument("marginal criterion requires lambda > 0");
    } else if (!(lambda >= 1.0)) {
        throw std::invalid_argument("non-marginal criteria require lambda >= 1 (the coordinate update "
                                    "threshold argument needs lambda/(1+lambda) >= 1/2)");
    }
    if (!order.empty()) validate_permutation(order, m);
    if (!sweep.empty()) validate_permutation(sweep, m);
    if (init == InitKind::explicit_vector && init_vector.size() != m)
        throw std::invalid_argument("initial decision vector length mismatch");
}

ConditioningSpec CriterionSpec::conditioning() const {
    if (kind == CriterionKind::ordered) return ConditioningSpec::ordered(order);
    return ConditioningSpec::general();
}

std::vector<std::size_t> CriterionSpec::sweep_order(std::size_t m) const {
    return sweep.empty() ? identity_permutation(m) : sweep;
}

std::vector<std::size_t> CriterionSpec::working_order(std::size_t m) const {
    return order.empty() ? identity_permutation(m) : order;
}

DecisionVector CriterionSpec::initial(std::size_t m) const {
    switch (init) {
        case InitKind::zeros: return DecisionVector::zeros(m);
        case InitKind::ones: return DecisionVector::ones(m);
        case InitKind::explicit_vector: return init_vector;
    }
    return DecisionVector::ones(m);
}

DecisionVector z_vector(const DecisionVector& d, const DecisionVector& r, const ConditioningSpec& cond) {
    const std::size_t m = d.size();
    if (r.size() != m) throw std::invalid_argument("decision and truth vectors differ in length");
    const auto order = cond.order.empty() ? identity_permutation(m) : cond.order;
    if (cond.mode == Conditioning::ordered) validate_permutation(order, m);

    DecisionVector z(m);
    if (cond.mode == Conditioning::general) {
        std::size_t wrong = 0;
        for (std::size_t j = 0; j < m; ++j) wrong += d[j] != r[j] ? 1 : 0;
        for (std::size_t i = 0; i < m; ++i) {
            const std::size_t wrong_elsewhere = wrong - (d[i] != r[i] ? 1 : 0);
            z.set(i, wrong_elsewhere == 0);
        }
    } else {
        bool all_correct = true;
        for (auto i : order) {
            z.set(i, all_correct);
            all_correct = all_correct && d[i] == r[i];
        }
    }
    return z;
}

ErrorDecomposition decompose(const DecisionVector& d, const DecisionVector& r, const ConditioningSpec& cond) {
    const auto z = z_vector(d, r, cond);
    ErrorDecomposition out;
    for (std::size_t i = 0; i < d.size(); ++i) {
        const int key = d[i] * 4 + r[i] * 2 + z[i];
        switch (key) {
            case 0b111: ++out.ne1; break;
            case 0b001: ++out.ne2; break;
            case 0b101: ++out.e1; break;
            case 0b100: ++out.e2; break;
            case 0b110: ++out.e3; break;
            case 0b000: ++out.e4; break;
            case 0b011: ++out.e5; break;
            case 0b010: ++out.e6; break;
        }
    }
    return out;
}

namespace {

double conditioned_objective(const PosteriorSource& source, const DecisionVector& d, double lambda,
                             const ConditioningSpec& cond) {
    if (d.size() != source.dimension()) throw std::invalid_argument("decision vector length mismatch");
    const double t = acceptance_threshold(lambda);
    double g = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i]) g += joint_probability(source, d, i, cond, 1) - t;
    }
    return g;
}

}  // namespace

double objective_general(const PosteriorSource& source, const DecisionVector& d, double lambda) {
    return conditioned_objective(source, d, lambda, ConditioningSpec::general());
}

double objective_ordered(const PosteriorSource& source, const DecisionVector& d, double lambda,
                         const std::vector<std::size_t>& order) {
    if (!order.empty()) validate_permutation(order, source.dimension());
    return conditioned_objective(source, d, lambda, ConditioningSpec::ordered(order));
}

double guindani_risk(const std::vector<double>& v, const DecisionVector& d, double lambda) {
    if (v.size() != d.size()) throw std::invalid_argument("marginal vector length mismatch");
    const double t = acceptance_threshold(lambda);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i]) sum += v[i] - t;
    }
    return -(1.0 + lambda) * sum;
}

double expected_error(const PosteriorSource& source, const DecisionVector& d, const ConditioningSpec& cond) {
    if (d.size() != source.dimension()) throw std::invalid_argument("decision vector length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i]) e += 1.0 - joint_probability(source, d, i, cond, 1);
    }
    return e;
}

double expected_false_positives(const std::vector<double>& v, const DecisionVector& d) {
    if (v.size() != d.size()) throw std::invalid_argument("marginal vector length mismatch");
    double e = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
        if (d[i]) e += 1.0 - v[i];
    }
    return e;
}

Objective::Objective(const PosteriorSource& source, const CriterionSpec& spec)
    : source_(&source), spec_(spec), m_(source.dimension()) {
    spec_.validate(m_);
    if (spec_.kind == CriterionKind::marginal) marginals_ = marginal_posteriors(source);
}

double Objective::operator()(const DecisionVector& d) const {
    if (d.size() != m_) throw std::invalid_argument("decision vector length mismatch");
    if (spec_.kind == CriterionKind::marginal) {
        const double t = acceptance_threshold(spec_.lambda);
        double g = 0.0;
        for (std::size_t i = 0; i < m_; ++i) {
            if (d[i]) g += marginals_[i] - t;
        }
        return g;
    }
    return conditioned_objective(*source_, d, spec_.lambda, spec_.conditioning());
}

double Objective::expected_error(const DecisionVector& d) const {
    if (spec_.kind == CriterionKind::marginal) return expected_false_positives(marginals_, d);
    return nmd::expected_error(*source_, d, spec_.conditioning());
}

}  // namespace nmd

#include "nmd/cli.hpp"

#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "nmd/chain.hpp"
#include "nmd/criteria.hpp"
#include "nmd/io.hpp"
#include "nmd/optimizer.hpp"
#include "nmd/parallel.hpp"
#include "nmd/posterior.hpp"
#include "nmd/simulator.hpp"

namespace nmd::cli {

namespace {

using Clock = std::chrono::steady_clock;

std::vector<int> to_ints(const DecisionVector& d) { return {d.values().begin(), d.values().end()}; }

std::vector<std::size_t> one_based(const std::vector<std::size_t>& p) {
    std::vector<std::size_t> out(p);
    for (auto& k : out) ++k;
    return out;
}

std::string format_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

/// "file:PATH" -> PATH, otherwise empty.
std::optional<std::string> file_argument(const std::string& value) {
    constexpr std::string_view prefix = "file:";
    if (value.rfind(prefix, 0) == 0) return value.substr(prefix.size());
    return std::nullopt;
}

HypothesisPriorOdds load_odds(const std::string& flag, std::size_t m) {
    if (flag.empty()) return HypothesisPriorOdds(m);
    const auto path = file_argument(flag);
    if (!path) throw UsageError("--prior-odds expects file:PATH");
    auto odds = read_positive_reals(*path);
    if (odds.size() != m) throw DataError("prior odds file has " + std::to_string(odds.size()) + " entries, expected " +
                                          std::to_string(m));
    return HypothesisPriorOdds(std::move(odds));
}

std::vector<std::size_t> resolve_order(const std::string& flag, const PosteriorSource& source,
                                       const HypothesisPriorOdds& odds) {
    const std::size_t m = source.dimension();
    if (flag == "index") return identity_permutation(m);
    if (flag == "bf") return rank_by_bayes_factor(source, odds);
    if (auto path = file_argument(flag)) return read_ordering(*path, m);
    throw UsageError("--order must be bf, index or file:PATH");
}

std::vector<std::size_t> resolve_sweep(const std::string& flag, std::size_t m) {
    if (flag == "index") return identity_permutation(m);
    if (flag == "reverse") {
        auto p = identity_permutation(m);
        std::reverse(p.begin(), p.end());
        return p;
    }
    if (auto path = file_argument(flag)) return read_ordering(*path, m);
    throw UsageError("--sweep-order must be index, reverse or file:PATH");
}

void resolve_init(const std::string& flag, std::size_t m, CriterionSpec& spec) {
    if (flag == "ones") {
        spec.init = InitKind::ones;
    } else if (flag == "zeros") {
        spec.init = InitKind::zeros;
    } else if (auto path = file_argument(flag)) {
        spec.init = InitKind::explicit_vector;
        spec.init_vector = read_binary_vector(*path);
        if (spec.init_vector.size() != m) throw DataError("initial decision file length does not match m");
    } else {
        throw UsageError("--init must be ones, zeros or file:PATH");
    }
}

void check_lambda(CriterionKind kind, double lambda) {
    if (kind == CriterionKind::marginal) {
        if (!(lambda > 0.0)) throw UsageError("--lambda must be positive");
    } else if (!(lambda >= 1.0)) {
        throw UsageError("--lambda " + format_double(lambda) + " rejected: the " + to_string(kind) +
                         " criterion requires lambda >= 1 so that a coordinate whose joint probability "
                         "exceeds lambda/(1+lambda) is always accepted");
    }
}

LambdaGrid resolve_grid(const GridOptions& g, CriterionKind kind) {
    const bool marginal = kind == CriterionKind::marginal;
    const double lo = g.min.value_or(marginal ? 1e-3 : 1.0);
    const double hi = g.max.value_or(1e3);
    const std::size_t points = g.points.value_or(64);
    if (!marginal && lo < 1.0) throw UsageError("--grid-min must be >= 1 for non-marginal criteria");
    try {
        return LambdaGrid::geometric(lo, hi, points);
    } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
    }
}

std::vector<std::vector<int>> state_list(const std::vector<DecisionVector>& states) {
    std::vector<std::vector<int>> out;
    for (const auto& s : states) out.push_back(to_ints(s));
    return out;
}

ConvergenceSummary summarize(const RelaxationTrace& trace) {
    ConvergenceSummary c;
    c.sweeps_to_converge = trace.sweeps_to_converge;
    c.sweeps_executed = trace.sweeps_executed();
    c.converged = trace.converged;
    c.cycle_detected = trace.cycle_detected;
    c.cycle_states = state_list(trace.cycle_states);
    c.max_sweeps_exceeded = trace.max_sweeps_exceeded;
    return c;
}

DecompositionSummary summarize(const ErrorDecomposition& e, const std::string& mode, std::size_t m) {
    DecompositionSummary s;
    s.mode = mode;
    s.m = m;
    s.counts = {{"NE1", e.ne1}, {"NE2", e.ne2}, {"E1", e.e1}, {"E2", e.e2},
                {"E3", e.e3},   {"E4", e.e4},   {"E5", e.e5}, {"E6", e.e6}};
    s.total = e.total();
    s.partition_holds = s.total == m;
    return s;
}

void attach_sample_info(RunReport& report, const IndicatorSampleMatrix& samples) {
    report.m = samples.dimension();
    report.sample_count = samples.sample_count();
    report.hypothesis_names = samples.names();
}

}  // namespace

RunReport run_decide(const DecideOptions& options) {
    const auto started = Clock::now();
    if (options.lambda && options.alpha) throw UsageError("--lambda and --alpha are mutually exclusive");
    if (!options.lambda && !options.alpha) throw UsageError("one of --lambda or --alpha is required");
    if (options.alpha && !(*options.alpha > 0.0 && *options.alpha < 1.0))
        throw UsageError("--alpha must lie in (0, 1)");
    if (options.max_sweeps == 0) throw UsageError("--max-sweeps must be positive");

    const CriterionKind kind = [&] {
        try {
            return parse_criterion_kind(options.criterion);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    const Procedure procedure = [&] {
        if (!options.procedure) return kind == CriterionKind::ordered ? Procedure::step_down : Procedure::relaxation;
        try {
            return parse_procedure(*options.procedure);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    if (procedure != Procedure::relaxation && kind != CriterionKind::ordered)
        throw UsageError("--procedure " + to_string(procedure) + " requires --criterion ordered");
    if (options.lambda) check_lambda(kind, *options.lambda);

    const auto samples = parse_samples(options.samples);
    const std::size_t m = samples.dimension();
    const auto odds = load_odds(options.prior_odds, m);

    CriterionSpec spec;
    spec.kind = kind;
    spec.lambda = options.lambda.value_or(1.0);
    auto order = resolve_order(options.order, samples, odds);
    if (kind == CriterionKind::ordered) spec.order = std::move(order);
    spec.sweep = resolve_sweep(options.sweep_order, m);
    resolve_init(options.init, m, spec);

    RunReport report;
    report.command = "decide";
    attach_sample_info(report, samples);
    report.inputs = {{"samples", options.samples},
                     {"criterion", options.criterion},
                     {"order", options.order},
                     {"init", options.init},
                     {"sweep-order", options.sweep_order},
                     {"prior-odds", options.prior_odds.empty() ? "1" : options.prior_odds},
                     {"procedure", to_string(procedure)},
                     {"seed", std::to_string(options.seed)},
                     {"max-sweeps", std::to_string(options.max_sweeps)}};
    if (options.lambda) report.inputs["lambda"] = format_double(*options.lambda);
    if (options.alpha) report.inputs["alpha"] = format_double(*options.alpha);
    if (options.truth) report.inputs["truth"] = *options.truth;

    const RelaxationOptions relax{options.max_sweeps};

    if (options.alpha) {
        const auto grid = resolve_grid(options.grid, kind);
        const auto calibration = kind == CriterionKind::marginal
                                     ? calibrate_lambda_marginal(marginal_posteriors(samples), *options.alpha, grid)
                                     : calibrate_lambda_nonmarginal(samples, *options.alpha, spec, grid, procedure,
                                                                    relax, options.threads);
        CalibrationSummary summary;
        summary.alpha = *options.alpha;
        summary.feasible = calibration.feasible;
        summary.lambda_star = calibration.lambda_star;
        summary.achieved = calibration.achieved;
        for (const auto& step : calibration.path) summary.path.push_back({step.lambda, step.achieved, step.feasible});
        report.calibration = summary;
        spec.lambda = calibration.lambda_star;
    }

    std::optional<bool> shortcut_fixed;
    RelaxationResult run;
    if (procedure == Procedure::relaxation) {
        run = block_relaxation(samples, spec, relax);
    } else {
        auto ordered = procedure == Procedure::step_down ? step_down_ordered(samples, spec.lambda, spec.order, relax)
                                                         : step_up_ordered(samples, spec.lambda, spec.order, relax);
        shortcut_fixed = ordered.shortcut_is_fixed_point;
        run = RelaxationResult{ordered.decisions, ordered.value, ordered.trace};
    }

    const Objective objective(samples, spec);
    CriterionEcho echo;
    echo.kind = to_string(kind);
    echo.lambda = spec.lambda;
    echo.procedure = to_string(procedure);
    echo.order = one_based(spec.working_order(m));
    echo.sweep = one_based(run.trace.sweep_order);
    echo.init = procedure == Procedure::step_down ? "ones" : procedure == Procedure::step_up ? "zeros" : options.init;
    report.criterion = echo;
    report.decisions = to_ints(run.decisions);
    report.objective = run.value;
    report.expected_error = objective.expected_error(run.decisions);
    report.convergence = summarize(run.trace);
    report.convergence->shortcut_is_fixed_point = shortcut_fixed;

    if (options.truth) {
        const auto truth = read_binary_vector(*options.truth);
        if (truth.size() != m) throw DataError("truth vector length does not match m");
        const auto mode = kind == CriterionKind::ordered ? "ordered" : "general";
        report.decomposition = summarize(decompose(run.decisions, truth, spec.conditioning()), mode, m);
    }

    if (!run.trace.converged) {
        report.exit_code = kExitNonconvergence;
        report.error = run.trace.cycle_detected ? "sweep map entered a cycle without converging"
                                                : "maximum number of sweeps exceeded";
    }
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return report;
}

RunReport run_chain(const ChainCliOptions& options) {
    const auto started = Clock::now();
    const CriterionKind kind = [&] {
        try {
            return parse_criterion_kind(options.criterion);
        } catch (const std::invalid_argument& e) {
            throw UsageError(e.what());
        }
    }();
    check_lambda(kind, options.lambda);

    const auto samples = parse_samples(options.samples);
    const std::size_t m = samples.dimension();
    if (m > options.max_m_states)
        throw UsageError("m = " + std::to_string(m) + " exceeds --max-m-states " +
                         std::to_string(options.max_m_states) + " (the chain has 2^m states)");
    const auto odds = load_odds(options.prior_odds, m);

    CriterionSpec spec;
    spec.kind = kind;
    spec.lambda = options.lambda;
    auto order = resolve_order(options.order, samples, odds);
    if (kind == CriterionKind::ordered) spec.order = std::move(order);
    spec.sweep = resolve_sweep(options.sweep_order, m);

    RunReport report;
    report.command = "chain";
    attach_sample_info(report, samples);
    report.inputs = {{"samples", options.samples},
                     {"criterion", options.criterion},
                     {"lambda", format_double(options.lambda)},
                     {"order", options.order},
                     {"sweep-order", options.sweep_order},
                     {"max-m-states", std::to_string(options.max_m_states)}};
    CriterionEcho echo;
    echo.kind = to_string(kind);
    echo.lambda = spec.lambda;
    echo.procedure = "relaxation";
    echo.order = one_based(spec.working_order(m));
    echo.sweep = one_based(spec.sweep_order(m));
    echo.init = "all states";
    report.criterion = echo;

    const auto kernel = build_sweep_kernel(samples, spec, KernelOptions{options.max_m_states, options.threads});
    ChainSummary chain;
    chain.m = m;
    chain.state_count = kernel.state_count();
    auto bits_state = [&](std::uint64_t s) { return to_ints(DecisionVector::from_bits(s, m)); };
    try {
        const auto analysis = analyze_chain(kernel, ChainOptions{options.dense_limit});
        for (auto a : analysis.form.absorbing) chain.fixed_points.push_back(bits_state(a));
        for (std::size_t k = 0; k < analysis.form.transient.size(); ++k) {
            const auto s = analysis.form.transient[k];
            chain.transient.push_back({bits_state(s), analysis.t(static_cast<Eigen::Index>(k)), analysis.simulated[k],
                                       bits_state(analysis.absorbed_into[s])});
        }
        chain.fundamental_materialized = analysis.fundamental_materialized;
        chain.identity_residual = analysis.identity_residual;
        chain.verification = analysis.times_match_simulation ? "exact" : "mismatch";
        if (!analysis.times_match_simulation) {
            report.exit_code = kExitNonconvergence;
            report.error = "absorption times disagree with direct simulation";
        }
    } catch (const ChainStructureError& e) {
        for (std::size_t k = 0; k < kernel.state_count(); ++k) {
            if (kernel.is_fixed(k)) chain.fixed_points.push_back(bits_state(k));
        }
        chain.verification = "non-absorbing";
        for (auto s : e.cycle()) chain.offending_cycle.push_back(bits_state(s));
        report.exit_code = kExitNonconvergence;
        report.error = e.what();
    }
    report.chain = chain;
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return report;
}

RunReport run_simulate(const SimulateOptions& options) {
    const auto started = Clock::now();
    if (options.out_samples.empty()) throw UsageError("--out-samples is required");
    GaussianScenario scenario;
    try {
        scenario = load_scenario(options.config);
    } catch (const std::invalid_argument& e) {
        throw DataError(e.what());
    }

    std::optional<std::pair<std::size_t, std::size_t>> probe_sizes;
    if (options.probe) {
        const auto comma = options.probe->find(',');
        try {
            if (comma == std::string::npos) throw std::invalid_argument("missing comma");
            std::size_t used = 0;
            const std::string a = options.probe->substr(0, comma), b = options.probe->substr(comma + 1);
            const auto small = std::stoul(a, &used);
            if (used != a.size()) throw std::invalid_argument("trailing characters");
            const auto large = std::stoul(b, &used);
            if (used != b.size()) throw std::invalid_argument("trailing characters");
            probe_sizes = {small, large};
        } catch (const std::exception&) {
            throw UsageError("--probe expects m_small,m_large");
        }
        if (probe_sizes->first == 0 || probe_sizes->first > probe_sizes->second || probe_sizes->second > scenario.m)
            throw UsageError("--probe sizes must satisfy 1 <= m_small <= m_large <= m");
    }

    const auto output = generate(scenario);
    const std::string truth_path = options.out_truth.value_or(options.out_samples + ".truth");
    {
        std::ofstream out(options.out_samples, std::ios::binary);
        if (!out) throw DataError("cannot write '" + options.out_samples + "'");
        write_samples(out, output.samples);
    }
    {
        std::ofstream out(truth_path, std::ios::binary);
        if (!out) throw DataError("cannot write '" + truth_path + "'");
        write_binary_vector(out, output.truth);
    }

    RunReport report;
    report.command = "simulate";
    attach_sample_info(report, output.samples);
    report.inputs = {{"config", options.config}, {"out-samples", options.out_samples}, {"out-truth", truth_path}};
    if (options.probe) report.inputs["probe"] = *options.probe;

    SimulationSummary sim;
    sim.m = scenario.m;
    sim.samples = scenario.samples;
    sim.seed = scenario.seed;
    sim.samples_path = options.out_samples;
    sim.truth_path = truth_path;
    sim.data = output.data;
    sim.truth = to_ints(output.truth);
    sim.analytic_marginals = output.analytic;
    report.simulation = sim;

    if (probe_sizes) {
        const auto probe = multiplicity_probe(scenario, probe_sizes->first, probe_sizes->second);
        report.probe = ProbeSummary{probe.m_small, probe.m_large, probe.v_small, probe.v_large, probe.difference};
    }
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return report;
}

RunReport run_decompose(const DecomposeOptions& options) {
    const auto started = Clock::now();
    if (options.mode != "general" && options.mode != "ordered") throw UsageError("--mode must be general or ordered");
    const auto d = read_binary_vector(options.decisions);
    const auto r = read_binary_vector(options.truth);
    if (d.size() != r.size())
        throw DataError("decision vector has " + std::to_string(d.size()) + " entries but truth has " +
                        std::to_string(r.size()));
    ConditioningSpec cond;
    if (options.mode == "ordered") {
        cond.mode = Conditioning::ordered;
        if (options.order) cond.order = read_ordering(*options.order, d.size());
    } else if (options.order) {
        throw UsageError("--order applies to --mode ordered only");
    }

    RunReport report;
    report.command = "decompose";
    report.m = d.size();
    report.inputs = {{"decisions", options.decisions}, {"truth", options.truth}, {"mode", options.mode}};
    if (options.order) report.inputs["order"] = *options.order;
    report.decisions = to_ints(d);
    report.decomposition = summarize(decompose(d, r, cond), options.mode, d.size());
    if (!report.decomposition->partition_holds) {
        report.exit_code = kExitNonconvergence;
        report.error = "decomposition counts do not sum to m";
    }
    report.wall_clock_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    return report;
}

namespace {

void emit(const RunReport& report, const std::string& out_path, std::ostream& out) {
    const auto text = serialize(report);
    if (out_path == "-") {
        out << text;
        return;
    }
    std::ofstream file(out_path, std::ios::binary);
    if (!file) throw DataError("cannot write report to '" + out_path + "'");
    file << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Non-marginal Bayesian multiple-testing decisions"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);
    std::string out_path = "-";

    DecideOptions decide;
    std::string lambda_text, alpha_text;
    auto* decide_cmd = app.add_subcommand("decide", "Compute optimal decisions for a sample file");
    decide_cmd->add_option("--samples", decide.samples, "CSV of posterior indicator draws")->required();
    decide_cmd->add_option("--criterion", decide.criterion, "marginal | general | ordered")
        ->check(CLI::IsMember({"marginal", "general", "ordered"}));
    auto* lambda_opt = decide_cmd->add_option("--lambda", decide.lambda, "Multiplier lambda");
    auto* alpha_opt = decide_cmd->add_option("--alpha", decide.alpha, "Calibrate lambda to this error level");
    lambda_opt->excludes(alpha_opt);
    decide_cmd->add_option("--order", decide.order, "bf | index | file:PATH");
    decide_cmd->add_option("--init", decide.init, "ones | zeros | file:PATH");
    decide_cmd->add_option("--sweep-order", decide.sweep_order, "index | reverse | file:PATH");
    decide_cmd->add_option("--prior-odds", decide.prior_odds, "file:PATH of Pr(H0)/Pr(H1) per hypothesis");
    decide_cmd->add_option("--procedure", decide.procedure, "relaxation | step-down | step-up");
    decide_cmd->add_option("--truth", decide.truth, "Truth vector file; adds an error decomposition");
    decide_cmd->add_option("--seed", decide.seed, "Recorded in the report");
    decide_cmd->add_option("--max-sweeps", decide.max_sweeps, "Sweep budget per relaxation");
    decide_cmd->add_option("--grid-min", decide.grid.min, "Smallest calibration lambda");
    decide_cmd->add_option("--grid-max", decide.grid.max, "Largest calibration lambda");
    decide_cmd->add_option("--grid-points", decide.grid.points, "Geometric calibration grid size");
    decide_cmd->add_option("--threads", decide.threads, "Worker threads")->default_val(default_thread_count());
    decide_cmd->add_option("--out", out_path, "Report path, - for stdout");

    ChainCliOptions chain;
    auto* chain_cmd = app.add_subcommand("chain", "Absorbing Markov chain analysis of the sweep map");
    chain_cmd->add_option("--samples", chain.samples, "CSV of posterior indicator draws")->required();
    chain_cmd->add_option("--criterion", chain.criterion, "marginal | general | ordered")
        ->check(CLI::IsMember({"marginal", "general", "ordered"}));
    chain_cmd->add_option("--lambda", chain.lambda, "Multiplier lambda")->required();
    chain_cmd->add_option("--max-m-states", chain.max_m_states, "Largest m to enumerate (2^m states)");
    chain_cmd->add_option("--order", chain.order, "bf | index | file:PATH");
    chain_cmd->add_option("--sweep-order", chain.sweep_order, "index | reverse | file:PATH");
    chain_cmd->add_option("--prior-odds", chain.prior_odds, "file:PATH");
    chain_cmd->add_option("--dense-limit", chain.dense_limit, "Largest transient count for a dense N");
    chain_cmd->add_option("--threads", chain.threads, "Worker threads")->default_val(default_thread_count());
    chain_cmd->add_option("--out", out_path, "Report path, - for stdout");

    SimulateOptions simulate;
    auto* sim_cmd = app.add_subcommand("simulate", "Generate samples from a Gaussian scenario");
    sim_cmd->add_option("--config", simulate.config, "Scenario key=value file")->required();
    sim_cmd->add_option("--out-samples", simulate.out_samples, "Sample CSV to write")->required();
    sim_cmd->add_option("--out-truth", simulate.out_truth, "Truth vector file (default <out-samples>.truth)");
    sim_cmd->add_option("--probe", simulate.probe, "m_small,m_large multiplicity probe");
    sim_cmd->add_option("--out", out_path, "Report path, - for stdout");

    DecomposeOptions decomp;
    auto* decomp_cmd = app.add_subcommand("decompose", "Eight-term error decomposition of decisions vs truth");
    decomp_cmd->add_option("--decisions", decomp.decisions, "Decision vector file")->required();
    decomp_cmd->add_option("--truth", decomp.truth, "Truth vector file")->required();
    decomp_cmd->add_option("--mode", decomp.mode, "general | ordered")
        ->check(CLI::IsMember({"general", "ordered"}));
    decomp_cmd->add_option("--order", decomp.order, "Working order file for ordered mode");
    decomp_cmd->add_option("--out", out_path, "Report path, - for stdout");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << (dynamic_cast<const CLI::CallForVersion*>(&e) ? std::string(kToolVersion) + "\n"
                                                                  : app.help());
            return kExitOk;
        }
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        RunReport report;
        if (*decide_cmd)
            report = run_decide(decide);
        else if (*chain_cmd)
            report = run_chain(chain);
        else if (*sim_cmd)
            report = run_simulate(simulate);
        else
            report = run_decompose(decomp);
        emit(report, out_path, out);
        if (report.error) err << "error: " << *report.error << '\n';
        return report.exit_code;
    } catch (const DataError& e) {
        err << "error: " << e.what() << '\n';
    } catch (const UsageError& e) {
        err << "error: " << e.what() << '\n';
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
    }
    return kExitUsage;
}

}  // namespace nmd::cli

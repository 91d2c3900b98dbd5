#include "cascount/cli.hpp"

#include <exception>
#include <ostream>

#include <CLI11.hpp>

#include "cascount/cascade.hpp"
#include "cascount/errors.hpp"
#include "cascount/evaluation.hpp"
#include "cascount/io.hpp"
#include "cascount/model.hpp"
#include "cascount/parallel.hpp"
#include "cascount/random.hpp"
#include "cascount/simulator.hpp"

namespace cascount {

ParseOutcome parse_args(const std::vector<std::string>& argv) {
    CLI::App app{"Simulate, fit and decompose networks of count sequences", "cascount"};
    app.require_subcommand(1, 1);

    std::optional<std::size_t> threads;
    app.add_option("--threads", threads, "Cap on worker threads (default: CASCOUNT_THREADS or all cores)")
        ->check(CLI::PositiveNumber);

    CliConfig config;

    auto* sim = app.add_subcommand("simulate", "Draw counts and their latent decomposition");
    sim->fallthrough();
    sim->add_option("--model", config.simulate.model, "Model JSON")->required();
    sim->add_option("--T", config.simulate.T, "Number of time bins")->required()->check(CLI::PositiveNumber);
    sim->add_option("--seed", config.simulate.seed, "Random seed")->required();
    sim->add_option("--out", config.simulate.out, "Counts CSV to write")->required();
    sim->add_option("--truth", config.simulate.truth, "Ground-truth decomposition CSV to write");
    sim->add_flag("--burn-in", config.simulate.burn_in, "Discard 5 t_max leading bins");

    auto* fit_cmd = app.add_subcommand("fit", "Maximum-likelihood fit of a counts CSV");
    fit_cmd->fallthrough();
    std::string init = "moment";
    bool poisson = false;
    double fix_phi = 0.0;
    double fix_tau = 0.0;
    fit_cmd->add_option("--counts", config.fit.counts, "Counts CSV")->required();
    fit_cmd->add_option("--out", config.fit.out, "Fit result JSON to write")->required();
    auto* tau_opt = fit_cmd->add_option("--fix-tau", fix_tau, "Hold tau at this value")
                        ->check(CLI::PositiveNumber);
    auto* phi_opt = fit_cmd->add_option("--fix-phi", fix_phi, "Hold phi at this value")
                        ->check(CLI::NonNegativeNumber);
    auto* poisson_opt = fit_cmd->add_flag("--poisson", poisson, "Fit the Poisson model (phi = 0)");
    phi_opt->excludes(poisson_opt);
    fit_cmd->add_option("--tol", config.fit.tol, "Relative projected-gradient tolerance")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--max-iter", config.fit.max_iter, "Iteration cap")
        ->check(CLI::PositiveNumber);
    fit_cmd->add_option("--init", init, "Starting point")
        ->check(CLI::IsMember({"moment", "fixed"}));

    auto* infer_cmd = app.add_subcommand("infer", "Decompose counts into background and cascades");
    infer_cmd->fallthrough();
    infer_cmd->add_option("--counts", config.infer.counts, "Counts CSV")->required();
    infer_cmd->add_option("--model", config.infer.model, "Model or fit JSON")->required();
    infer_cmd->add_option("--out", config.infer.out, "Decomposition CSV to write")->required();
    infer_cmd->add_option("--sizes", config.infer.sizes, "Cascade-size grid CSV to write");
    auto* sample_opt = infer_cmd->add_option("--sample", config.infer.sample,
                                             "Write this many sampled decompositions")
                           ->check(CLI::PositiveNumber);
    infer_cmd->add_option("--seed", config.infer.seed, "Random seed for --sample")->needs(sample_opt);

    auto* eval_cmd = app.add_subcommand("evaluate", "Run the simulation experiment");
    eval_cmd->fallthrough();
    eval_cmd->add_option("--config", config.evaluate.config, "Experiment config JSON")->required();
    eval_cmd->add_option("--out", config.evaluate.out, "Report directory")->required();

    auto* stab_cmd = app.add_subcommand("stability", "Spectral radius and steady-state rates");
    stab_cmd->fallthrough();
    stab_cmd->add_option("--model", config.stability.model, "Model JSON")->required();

    ParseOutcome outcome;
    std::vector<std::string> reversed(argv.rbegin(), argv.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        outcome.message = app.help();
        outcome.exit_status = 0;
        return outcome;
    } catch (const CLI::ParseError& e) {
        outcome.message = std::string(e.what()) + "\n" + app.help();
        outcome.exit_status = 2;
        return outcome;
    }

    if (sim->parsed()) {
        config.subcommand = Subcommand::simulate;
    } else if (fit_cmd->parsed()) {
        config.subcommand = Subcommand::fit;
        config.fit.init = init == "fixed" ? InitStrategy::fixed : InitStrategy::moment;
        if (*tau_opt) config.fit.fix_tau = fix_tau;
        if (*phi_opt) config.fit.fix_phi = fix_phi;
        if (poisson) config.fit.fix_phi = 0.0;
    } else if (infer_cmd->parsed()) {
        config.subcommand = Subcommand::infer;
    } else if (eval_cmd->parsed()) {
        config.subcommand = Subcommand::evaluate;
    } else {
        config.subcommand = Subcommand::stability;
    }
    config.threads = threads ? *threads : default_thread_count();
    outcome.config = config;
    return outcome;
}

std::string numbered_path(const std::string& path, std::size_t k) {
    const std::size_t slash = path.find_last_of('/');
    const std::size_t dot = path.find_last_of('.');
    const std::string suffix = "_" + std::to_string(k);
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash) ||
        dot == (slash == std::string::npos ? 0 : slash + 1)) {
        return path + suffix;
    }
    return path.substr(0, dot) + suffix + path.substr(dot);
}

namespace {

int run_simulate(const SimulateArgs& args, std::ostream&, std::ostream& err) {
    const ModelSpec model = read_model(args.model);
    SimulateOptions options;
    options.burn_in = args.burn_in;
    const SimulationResult result = simulate(model, args.T, args.seed, options);
    if (!result.warning.empty()) err << "warning: " << result.warning << '\n';
    write_counts_csv(args.out, result.counts);
    if (!args.truth.empty()) write_decomposition_csv(args.truth, result.truth);
    return 0;
}

int run_fit(const FitArgs& args, std::size_t threads, std::ostream& out, std::ostream& err) {
    const CountSeries counts = read_counts_csv(args.counts);
    FitConfig config;
    config.gradient_tolerance = args.tol;
    config.max_iterations = args.max_iter;
    config.init_strategy = args.init;
    config.threads = threads;
    if (args.fix_tau) {
        config.fit_tau = false;
        config.tau_value = *args.fix_tau;
    }
    if (args.fix_phi) {
        config.fit_phi = false;
        config.phi_value = *args.fix_phi;
    }
    const FitResult result = fit(counts, config);
    write_fit_result(args.out, result);
    if (!result.converged) err << "warning: fit did not converge: " << result.message << '\n';
    out << "log_likelihood " << format_double(result.log_likelihood) << '\n';
    return 0;
}

int run_infer(const InferArgs& args, std::ostream&, std::ostream&) {
    const CountSeries counts = read_counts_csv(args.counts);
    const ModelSpec model = read_model(args.model);
    if (args.sample == 0) {
        const CascadeDecomposition expected = conditional_expectation(model, counts);
        write_decomposition_csv(args.out, expected);
        if (!args.sizes.empty()) write_grid_csv(args.sizes, cascade_sizes(expected));
        return 0;
    }
    for (std::size_t k = 1; k <= args.sample; ++k) {
        const CascadeDecomposition draw =
            conditional_sample(model, counts, derive_seed(args.seed, k, 0));
        write_decomposition_csv(numbered_path(args.out, k), draw);
        if (!args.sizes.empty()) write_grid_csv(numbered_path(args.sizes, k), cascade_sizes(draw));
    }
    return 0;
}

int run_evaluate(const EvaluateArgs& args, std::size_t threads, std::ostream& out,
                 std::ostream&) {
    ExperimentConfig config = read_experiment_config(args.config);
    config.threads = threads;
    const ExperimentReport report = run_experiment(config);
    write_experiment_report(report, args.out);
    for (const auto& cell : report.cells) {
        out << "T=" << cell.T << " phi=" << format_double(cell.phi) << " included=" << cell.included
            << " excluded=" << cell.excluded << '\n';
    }
    return 0;
}

int run_stability(const StabilityArgs& args, std::ostream& out, std::ostream&) {
    const ModelSpec model = read_model(args.model);
    out << "spectral_radius " << format_double(spectral_radius(model.A)) << '\n';
    const Eigen::VectorXd rates = steady_state_rate(model);
    out << "steady_state";
    for (Eigen::Index i = 0; i < rates.size(); ++i) out << ' ' << format_double(rates(i));
    out << '\n';
    return 0;
}

} // namespace

int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err) {
    try {
        switch (config.subcommand) {
        case Subcommand::simulate:
            return run_simulate(config.simulate, out, err);
        case Subcommand::fit:
            return run_fit(config.fit, config.threads, out, err);
        case Subcommand::infer:
            return run_infer(config.infer, out, err);
        case Subcommand::evaluate:
            return run_evaluate(config.evaluate, config.threads, out, err);
        case Subcommand::stability:
            return run_stability(config.stability, out, err);
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err) {
    const ParseOutcome parsed = parse_args(argv);
    if (!parsed.config) {
        (parsed.exit_status == 0 ? out : err) << parsed.message;
        return parsed.exit_status;
    }
    return dispatch(*parsed.config, out, err);
}

} // namespace cascount

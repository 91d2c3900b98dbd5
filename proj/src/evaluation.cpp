#include "cascount/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cascount/cascade.hpp"
#include "cascount/errors.hpp"
#include "cascount/estimation.hpp"
#include "cascount/io.hpp"
#include "cascount/parallel.hpp"
#include "cascount/random.hpp"
#include "cascount/simulator.hpp"

namespace cascount {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Eigen::VectorXd flatten(const Eigen::MatrixXd& m) {
    // Row-major flattening; the Frobenius norm is order independent.
    Eigen::VectorXd out(m.size());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) out[k++] = m(i, j);
    }
    return out;
}

MseComponents decompose_errors(const std::vector<Eigen::VectorXd>& errors) {
    if (errors.size() < 2) {
        throw std::domain_error("MSE decomposition needs at least two estimates");
    }
    const Eigen::Index dim = errors.front().size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
    for (const auto& e : errors) {
        if (e.size() != dim) throw StructuralError("estimates differ in dimension");
        mean += e;
    }
    const auto m = static_cast<double>(errors.size());
    mean /= m;
    MseComponents out;
    for (const auto& e : errors) {
        out.mse += e.squaredNorm();
        out.variance += (e - mean).squaredNorm();
    }
    out.mse /= m;
    out.variance /= m;
    out.bias_sq = mean.squaredNorm();
    return out;
}

template <typename Extract>
std::vector<Eigen::VectorXd> collect(const std::vector<ParameterRecord>& records, Extract&& f) {
    std::vector<Eigen::VectorXd> out;
    out.reserve(records.size());
    for (const auto& r : records) out.push_back(f(r));
    return out;
}

MseReport report_from(const std::vector<ParameterRecord>& truths,
                      const std::vector<ParameterRecord>& estimates) {
    auto scalar = [](double v) { return Eigen::VectorXd::Constant(1, v); };
    MseReport report;
    report.phi = mse_decomposition(collect(truths, [&](const auto& r) { return scalar(r.phi); }),
                                   collect(estimates, [&](const auto& r) { return scalar(r.phi); }));
    report.tau = mse_decomposition(collect(truths, [&](const auto& r) { return scalar(r.tau); }),
                                   collect(estimates, [&](const auto& r) { return scalar(r.tau); }));
    report.mu = mse_decomposition(collect(truths, [](const auto& r) { return r.mu; }),
                                  collect(estimates, [](const auto& r) { return r.mu; }));
    report.A = mse_decomposition(collect(truths, [](const auto& r) { return flatten(r.A); }),
                                 collect(estimates, [](const auto& r) { return flatten(r.A); }));
    return report;
}

std::vector<double> sorted_copy(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v;
}

double empirical_quantile(const std::vector<double>& sorted, double p) {
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::size_t>(std::ceil(p * n));
    idx = std::clamp<std::size_t>(idx, 1, sorted.size());
    return sorted[idx - 1];
}

struct TaskOutput {
    SeedOutcome outcome;
    std::vector<double> sizes_true;
    std::vector<double> sizes_estimated;
};

std::vector<double> grid_values(const Grid<double>& grid) {
    return {grid.data().begin(), grid.data().end()};
}

} // namespace

ParameterRecord ParameterRecord::from_model(const ModelSpec& model) {
    return {model.phi, model.kernel.tau, model.mu, model.A};
}

MseComponents mse_decomposition(const Eigen::VectorXd& truth,
                                const std::vector<Eigen::VectorXd>& estimates) {
    std::vector<Eigen::VectorXd> truths(estimates.size(), truth);
    return mse_decomposition(truths, estimates);
}

MseComponents mse_decomposition(const std::vector<Eigen::VectorXd>& truths,
                                const std::vector<Eigen::VectorXd>& estimates) {
    if (truths.size() != estimates.size()) {
        throw StructuralError("one true value is needed per estimate");
    }
    std::vector<Eigen::VectorXd> errors;
    errors.reserve(estimates.size());
    for (std::size_t k = 0; k < estimates.size(); ++k) {
        if (truths[k].size() != estimates[k].size()) {
            throw StructuralError("estimate and true value differ in dimension");
        }
        errors.push_back(estimates[k] - truths[k]);
    }
    return decompose_errors(errors);
}

MseReport mse_decomposition(const ParameterRecord& truth,
                            const std::vector<ParameterRecord>& estimates) {
    return report_from(std::vector<ParameterRecord>(estimates.size(), truth), estimates);
}

MseReport mse_decomposition(const std::vector<ParameterRecord>& truths,
                            const std::vector<ParameterRecord>& estimates) {
    if (truths.size() != estimates.size()) {
        throw StructuralError("one true value is needed per estimate");
    }
    return report_from(truths, estimates);
}

std::vector<std::pair<double, double>> ecdf(std::vector<double> values) {
    if (values.empty()) throw std::domain_error("ecdf of an empty sample");
    std::sort(values.begin(), values.end());
    const auto n = static_cast<double>(values.size());
    std::vector<std::pair<double, double>> steps;
    for (std::size_t k = 0; k < values.size(); ++k) {
        if (k + 1 < values.size() && values[k + 1] == values[k]) continue;
        steps.emplace_back(values[k], static_cast<double>(k + 1) / n);
    }
    return steps;
}

std::vector<std::pair<double, double>> qq_points(std::vector<double> sample_a,
                                                 std::vector<double> sample_b,
                                                 std::size_t n_quantiles) {
    if (sample_a.empty() || sample_b.empty()) throw std::domain_error("qq_points of an empty sample");
    if (n_quantiles == 0) throw std::domain_error("qq_points needs at least one quantile");
    sample_a = sorted_copy(std::move(sample_a));
    sample_b = sorted_copy(std::move(sample_b));
    std::vector<std::pair<double, double>> out;
    out.reserve(n_quantiles);
    for (std::size_t k = 1; k <= n_quantiles; ++k) {
        const double p = (static_cast<double>(k) - 0.5) / static_cast<double>(n_quantiles);
        out.emplace_back(empirical_quantile(sample_a, p), empirical_quantile(sample_b, p));
    }
    return out;
}

double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b) {
    if (sample_a.empty() || sample_b.empty()) throw std::domain_error("ks_distance of an empty sample");
    std::sort(sample_a.begin(), sample_a.end());
    std::sort(sample_b.begin(), sample_b.end());
    const auto na = static_cast<double>(sample_a.size());
    const auto nb = static_cast<double>(sample_b.size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    double worst = 0.0;
    while (ia < sample_a.size() || ib < sample_b.size()) {
        double x;
        if (ib >= sample_b.size() || (ia < sample_a.size() && sample_a[ia] <= sample_b[ib])) {
            x = sample_a[ia];
        } else {
            x = sample_b[ib];
        }
        while (ia < sample_a.size() && sample_a[ia] <= x) ++ia;
        while (ib < sample_b.size() && sample_b[ib] <= x) ++ib;
        worst = std::max(worst, std::abs(static_cast<double>(ia) / na - static_cast<double>(ib) / nb));
    }
    return worst;
}

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw std::domain_error("correlation needs two equal-length samples of size >= 2");
    }
    const auto n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        mx += x[k];
        my += y[k];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
        sxy += (x[k] - mx) * (y[k] - my);
        sxx += (x[k] - mx) * (x[k] - mx);
        syy += (y[k] - my) * (y[k] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

void ExperimentConfig::validate() const {
    if (K == 0) throw std::domain_error("experiment needs K >= 1");
    if (T_grid.empty() || phi_grid.empty()) throw std::domain_error("experiment grids must be non-empty");
    if (repetitions < 2) throw std::domain_error("experiment needs at least two repetitions");
    for (auto T : T_grid) {
        if (T == 0) throw std::domain_error("T values must be positive");
    }
    for (double phi : phi_grid) {
        if (!(phi >= 0.0)) throw std::domain_error("phi values must be non-negative");
    }
    if (!(mu > 0.0) || !(gamma_mean > 0.0) || !(gamma_shape > 0.0) || !(tau > 0.0)) {
        throw std::domain_error("mu, gamma mean, gamma shape and tau must be positive");
    }
    if (n_quantiles == 0) throw std::domain_error("n_quantiles must be positive");
}

const CellReport* ExperimentReport::find(std::size_t T, double phi) const {
    for (const auto& c : cells) {
        if (c.T == T && c.phi == phi) return &c;
    }
    return nullptr;
}

std::uint64_t experiment_seed(std::uint64_t base_seed, std::size_t cell, std::size_t rep) {
    return base_seed ^ derive_seed(0x243F6A8885A308D3ULL, cell, rep);
}

std::pair<Eigen::MatrixXd, std::uint64_t> experiment_matrix(const ExperimentConfig& config) {
    for (std::uint64_t attempt = 0; attempt < 1000; ++attempt) {
        const std::uint64_t seed = derive_seed(config.base_seed ^ 0x13198A2E03707344ULL, attempt, 0);
        Eigen::MatrixXd A =
            sample_influence_matrix(config.K, config.gamma_mean, config.gamma_shape, seed);
        if (spectral_radius(A) < 1.0) return {std::move(A), seed};
    }
    throw std::runtime_error("could not draw a stable influence matrix in 1000 attempts");
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
    config.validate();
    struct CellKey {
        std::size_t T;
        double phi;
    };
    std::vector<CellKey> keys;
    for (double phi : config.phi_grid) {
        for (std::size_t T : config.T_grid) keys.push_back({T, phi});
    }
    const std::size_t reps = config.repetitions;
    std::vector<TaskOutput> tasks(keys.size() * reps);
    const auto [A, matrix_seed] = experiment_matrix(config);

    parallel_for(tasks.size(), config.threads, [&](std::size_t task) {
        const std::size_t cell = task / reps;
        const std::size_t rep = task % reps;
        TaskOutput& out = tasks[task];

        ModelSpec truth;
        const auto k = static_cast<Eigen::Index>(config.K);
        truth.mu = Eigen::VectorXd::Constant(k, config.mu);
        truth.A = A;
        truth.kernel = Kernel::exponential(config.tau);
        truth.phi = keys[cell].phi;

        out.outcome.repetition = rep;
        out.outcome.seed = experiment_seed(config.base_seed, cell, rep);
        out.outcome.matrix_seed = matrix_seed;
        out.outcome.truth = ParameterRecord::from_model(truth);

        const SimulationResult sim =
            simulate(truth, keys[cell].T, out.outcome.seed, SimulateOptions{config.burn_in});
        out.outcome.true_triggered = total_triggered(sim.truth);
        out.sizes_true = grid_values(cascade_sizes(sim.truth));

        FitConfig fit_config;
        fit_config.gradient_tolerance = config.gradient_tolerance;
        fit_config.max_iterations = config.max_iterations;
        FitResult fitted;
        try {
            fitted = fit(sim.counts, fit_config);
        } catch (const std::domain_error&) {
            // Degenerate data (an empty component): counts as a failed fit.
            out.outcome.converged = false;
            return;
        }
        out.outcome.converged = fitted.converged;
        out.outcome.iterations = fitted.iterations;
        out.outcome.log_likelihood = fitted.log_likelihood;
        out.outcome.estimate = ParameterRecord::from_model(fitted.model);
        const CascadeSummary summary = expected_cascade_summary(fitted.model, sim.counts);
        out.outcome.estimated_triggered = summary.total_triggered;
        out.sizes_estimated = grid_values(summary.sizes);
    });

    ExperimentReport report;
    report.config = config;
    for (std::size_t cell = 0; cell < keys.size(); ++cell) {
        CellReport c;
        c.T = keys[cell].T;
        c.phi = keys[cell].phi;
        std::vector<ParameterRecord> truths;
        std::vector<ParameterRecord> estimates;
        for (std::size_t rep = 0; rep < reps; ++rep) {
            TaskOutput& t = tasks[cell * reps + rep];
            c.seeds.push_back(t.outcome);
            if (!t.outcome.converged) {
                ++c.excluded;
                continue;
            }
            ++c.included;
            truths.push_back(t.outcome.truth);
            estimates.push_back(t.outcome.estimate);
            c.sizes_true.insert(c.sizes_true.end(), t.sizes_true.begin(), t.sizes_true.end());
            c.sizes_estimated.insert(c.sizes_estimated.end(), t.sizes_estimated.begin(),
                                     t.sizes_estimated.end());
        }
        if (c.included >= 2) {
            c.mse = mse_decomposition(truths, estimates);
        } else {
            const MseComponents nan{kNaN, kNaN, kNaN};
            c.mse = MseReport{nan, nan, nan, nan};
        }
        report.cells.push_back(std::move(c));
    }
    return report;
}

void write_experiment_report(const ExperimentReport& report, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    const fs::path dir(directory);

    std::ostringstream mse;
    mse << "cell,T,phi,parameter,mse,bias_sq,variance,included,excluded\n";
    std::ostringstream scatter;
    scatter << "cell,T,phi,repetition,seed,true_yc,est_yc,converged\n";
    std::ostringstream sizes_true;
    sizes_true << "cell,T,phi,size\n";
    std::ostringstream sizes_est;
    sizes_est << "cell,T,phi,size\n";
    std::ostringstream qq;
    qq << "cell,T,phi,k,true_quantile,est_quantile\n";

    for (std::size_t cell = 0; cell < report.cells.size(); ++cell) {
        const CellReport& c = report.cells[cell];
        const std::string prefix =
            std::to_string(cell + 1) + "," + std::to_string(c.T) + "," + format_double(c.phi) + ",";
        const std::pair<const char*, const MseComponents*> rows[] = {
            {"phi", &c.mse.phi}, {"tau", &c.mse.tau}, {"mu", &c.mse.mu}, {"A", &c.mse.A}};
        for (const auto& [name, m] : rows) {
            mse << prefix << name << ',' << format_double(m->mse) << ','
                << format_double(m->bias_sq) << ',' << format_double(m->variance) << ','
                << c.included << ',' << c.excluded << '\n';
        }
        for (const auto& s : c.seeds) {
            scatter << prefix << s.repetition + 1 << ',' << s.seed << ','
                    << format_double(s.true_triggered) << ','
                    << format_double(s.estimated_triggered) << ',' << (s.converged ? 1 : 0) << '\n';
        }
        for (double v : c.sizes_true) sizes_true << prefix << format_double(v) << '\n';
        for (double v : c.sizes_estimated) sizes_est << prefix << format_double(v) << '\n';
        if (!c.sizes_true.empty() && !c.sizes_estimated.empty()) {
            const auto points = qq_points(c.sizes_true, c.sizes_estimated, report.config.n_quantiles);
            for (std::size_t k = 0; k < points.size(); ++k) {
                qq << prefix << k + 1 << ',' << format_double(points[k].first) << ','
                   << format_double(points[k].second) << '\n';
            }
        }
    }

    write_text_file((dir / "mse.csv").string(), mse.str());
    write_text_file((dir / "scatter.csv").string(), scatter.str());
    write_text_file((dir / "sizes_true.csv").string(), sizes_true.str());
    write_text_file((dir / "sizes_est.csv").string(), sizes_est.str());
    write_text_file((dir / "qq.csv").string(), qq.str());

    write_text_file((dir / "plot_mse.gp").string(),
                    "# Bias and variance against T, one curve per phi and parameter.\n"
                    "set datafile separator ','\n"
                    "set logscale xy\n"
                    "set key outside\n"
                    "set terminal pngcairo size 1200,500\n"
                    "set output 'mse.png'\n"
                    "set multiplot layout 1,2\n"
                    "set title 'bias^2'\n"
                    "plot for [p in 'phi tau mu A'] 'mse.csv' using 2:(strcol(4) eq p ? $6 : 1/0) "
                    "with linespoints title p\n"
                    "set title 'variance'\n"
                    "plot for [p in 'phi tau mu A'] 'mse.csv' using 2:(strcol(4) eq p ? $7 : 1/0) "
                    "with linespoints title p\n"
                    "unset multiplot\n");
    write_text_file((dir / "plot_scatter.gp").string(),
                    "# Estimated against true total triggered events.\n"
                    "set datafile separator ','\n"
                    "set terminal pngcairo size 600,600\n"
                    "set output 'scatter.png'\n"
                    "set xlabel 'true y^c'\n"
                    "set ylabel 'estimated y^c'\n"
                    "plot 'scatter.csv' using 6:7 every ::1 with points pt 7 title '', x title 'diagonal'\n");
    write_text_file((dir / "plot_qq.gp").string(),
                    "# Q-Q plot of estimated against true cascade sizes.\n"
                    "set datafile separator ','\n"
                    "set terminal pngcairo size 600,600\n"
                    "set output 'qq.png'\n"
                    "set xlabel 'true size quantile'\n"
                    "set ylabel 'estimated size quantile'\n"
                    "plot 'qq.csv' using 5:6 every ::1 with points pt 7 title '', x title 'diagonal'\n");
}

} // namespace cascount

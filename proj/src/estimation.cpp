#include "cascount/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>

#include "cascount/distributions.hpp"
#include "cascount/errors.hpp"
#include "cascount/optimizer.hpp"
#include "cascount/parallel.hpp"

namespace cascount {

namespace {

constexpr double kPoissonSnap = 1e-8;

struct ComponentTerms {
    double log_likelihood = 0.0;
    double d_mu = 0.0;
    Eigen::VectorXd d_A_row;
    double d_tau = 0.0;
    double d_phi = 0.0;
};

void check_dimensions(const ModelSpec& model, const CountSeries& counts) {
    model.validate();
    counts.validate();
    if (model.K() != counts.K()) {
        throw StructuralError("counts have " + std::to_string(counts.K()) +
                              " components but the model has " + std::to_string(model.K()));
    }
}

// Likelihood and gradient given precomputed kernel excitations. d_excitation
// may be null when no gradient is requested.
LikelihoodValue evaluate(const ModelSpec& model, const CountSeries& counts,
                         const Grid<double>& excitation, const Grid<double>* d_excitation,
                         std::size_t threads) {
    const std::size_t K = counts.K();
    const std::size_t T = counts.T();
    const bool want_gradient = d_excitation != nullptr;
    std::vector<ComponentTerms> terms(K);

    parallel_for(K, threads, [&](std::size_t i) {
        ComponentTerms& out = terms[i];
        const auto ii = static_cast<Eigen::Index>(i);
        const double mu = model.mu[ii];
        if (want_gradient) out.d_A_row = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(K));
        for (std::size_t t = 0; t < T; ++t) {
            double lambda = mu;
            for (std::size_t j = 0; j < K; ++j) {
                lambda += model.A(ii, static_cast<Eigen::Index>(j)) * excitation(j, t);
            }
            if (!(lambda > 0.0) || !std::isfinite(lambda)) {
                throw std::logic_error("non-positive rate at component " + std::to_string(i) +
                                       ", bin " + std::to_string(t + 1));
            }
            const std::int64_t n = counts(i, t);
            if (!want_gradient) {
                out.log_likelihood += count_log_pmf(n, lambda, model.phi);
                continue;
            }
            const CountScore score = count_log_pmf_score(n, lambda, model.phi);
            out.log_likelihood += score.log_pmf;
            out.d_mu += score.d_lambda;
            double d_lambda_d_tau = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                out.d_A_row[jj] += score.d_lambda * excitation(j, t);
                d_lambda_d_tau += model.A(ii, jj) * (*d_excitation)(j, t);
            }
            out.d_tau += score.d_lambda * d_lambda_d_tau;
            out.d_phi += score.d_phi;
        }
    });

    LikelihoodValue value;
    if (want_gradient) {
        const auto k = static_cast<Eigen::Index>(K);
        value.gradient.d_mu = Eigen::VectorXd::Zero(k);
        value.gradient.d_A = Eigen::MatrixXd::Zero(k, k);
    }
    // Fixed summation order over components.
    for (std::size_t i = 0; i < K; ++i) {
        value.log_likelihood += terms[i].log_likelihood;
        if (!want_gradient) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        value.gradient.d_mu[ii] = terms[i].d_mu;
        value.gradient.d_A.row(ii) = terms[i].d_A_row.transpose();
        value.gradient.d_tau += terms[i].d_tau;
        value.gradient.d_phi += terms[i].d_phi;
    }
    return value;
}

double sample_mean(std::span<const std::int64_t> row) {
    double acc = 0.0;
    for (auto v : row) acc += static_cast<double>(v);
    return acc / static_cast<double>(row.size());
}

double sample_variance(std::span<const std::int64_t> row, double mean) {
    if (row.size() < 2) return 0.0;
    double acc = 0.0;
    for (auto v : row) {
        const double d = static_cast<double>(v) - mean;
        acc += d * d;
    }
    return acc / static_cast<double>(row.size() - 1);
}

// Parameter vector layout: log mu (K), A row-major (K^2), [log tau], [phi].
struct Layout {
    std::size_t K = 0;
    bool fit_tau = true;
    bool fit_phi = true;

    [[nodiscard]] Eigen::Index size() const {
        return static_cast<Eigen::Index>(K + K * K + (fit_tau ? 1 : 0) + (fit_phi ? 1 : 0));
    }
    [[nodiscard]] Eigen::Index a_index(std::size_t i, std::size_t j) const {
        return static_cast<Eigen::Index>(K + i * K + j);
    }
    [[nodiscard]] Eigen::Index tau_index() const { return static_cast<Eigen::Index>(K + K * K); }
    [[nodiscard]] Eigen::Index phi_index() const { return tau_index() + (fit_tau ? 1 : 0); }

    [[nodiscard]] Eigen::VectorXd pack(const ModelSpec& m) const {
        Eigen::VectorXd x(size());
        for (std::size_t i = 0; i < K; ++i) {
            x[static_cast<Eigen::Index>(i)] = std::log(m.mu[static_cast<Eigen::Index>(i)]);
            for (std::size_t j = 0; j < K; ++j) {
                x[a_index(i, j)] = m.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            }
        }
        if (fit_tau) x[tau_index()] = std::log(m.kernel.tau);
        if (fit_phi) x[phi_index()] = m.phi;
        return x;
    }

    // Overwrites the fitted coordinates of `m` from x.
    void unpack(const Eigen::VectorXd& x, ModelSpec& m) const {
        for (std::size_t i = 0; i < K; ++i) {
            m.mu[static_cast<Eigen::Index>(i)] = std::exp(x[static_cast<Eigen::Index>(i)]);
            for (std::size_t j = 0; j < K; ++j) {
                m.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[a_index(i, j)];
            }
        }
        if (fit_tau) m.kernel = Kernel::exponential(std::exp(x[tau_index()]));
        if (fit_phi) m.phi = x[phi_index()];
    }
};

void reject_empty_components(const CountSeries& counts) {
    for (std::size_t i = 0; i < counts.K(); ++i) {
        const auto row = counts.n.row(i);
        if (std::all_of(row.begin(), row.end(), [](std::int64_t v) { return v == 0; })) {
            throw std::domain_error("component " + std::to_string(i + 1) +
                                    " has no events; its background rate is not estimable");
        }
    }
}

} // namespace

std::size_t default_thread_count() {
    if (const char* env = std::getenv("CASCOUNT_THREADS")) {
        try {
            const long v = std::stol(env);
            if (v > 0) return static_cast<std::size_t>(v);
        } catch (const std::exception&) {
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

double log_likelihood(const ModelSpec& model, const CountSeries& counts, std::size_t threads) {
    check_dimensions(model, counts);
    const Grid<double> excitation = kernel_excitation(counts.n, model.kernel.values());
    return evaluate(model, counts, excitation, nullptr, threads).log_likelihood;
}

LikelihoodValue log_likelihood_with_gradient(const ModelSpec& model, const CountSeries& counts,
                                             std::size_t threads) {
    check_dimensions(model, counts);
    const Grid<double> excitation = kernel_excitation(counts.n, model.kernel.values());
    const Grid<double> d_excitation = kernel_excitation(counts.n, model.kernel.tau_derivatives());
    return evaluate(model, counts, excitation, &d_excitation, threads);
}

LikelihoodGradient log_likelihood_gradient(const ModelSpec& model, const CountSeries& counts,
                                           std::size_t threads) {
    return log_likelihood_with_gradient(model, counts, threads).gradient;
}

ModelSpec initial_model(const CountSeries& counts, InitStrategy strategy) {
    counts.validate();
    const std::size_t K = counts.K();
    const auto k = static_cast<Eigen::Index>(K);
    ModelSpec m;
    m.mu = Eigen::VectorXd::Ones(k);
    m.A = Eigen::MatrixXd::Constant(k, k, 0.01);
    m.kernel = Kernel::exponential(1.0);
    m.phi = 1.0;
    if (strategy == InitStrategy::fixed) return m;
    if (strategy != InitStrategy::moment) {
        throw std::invalid_argument("initial_model: user strategy needs an explicit model");
    }
    double phi_acc = 0.0;
    for (std::size_t i = 0; i < K; ++i) {
        const auto row = counts.n.row(i);
        const double mean = sample_mean(row);
        const double var = sample_variance(row, mean);
        m.mu[static_cast<Eigen::Index>(i)] = std::max(0.5 * mean, 1e-6);
        if (mean > 0.0) phi_acc += std::max(0.0, var / mean - 1.0);
    }
    m.phi = phi_acc / static_cast<double>(K);
    return m;
}

FitResult fit(const CountSeries& counts, const FitConfig& config) {
    counts.validate();
    reject_empty_components(counts);
    if (!(config.gradient_tolerance > 0.0)) throw std::domain_error("gradient_tolerance must be > 0");
    if (!(config.parameter_floor >= 0.0)) throw std::domain_error("parameter_floor must be >= 0");
    if (config.max_iterations < 1) throw std::domain_error("max_iterations must be positive");

    const std::size_t K = counts.K();
    const std::size_t T = counts.T();

    ModelSpec start;
    if (config.init_strategy == InitStrategy::user) {
        if (!config.initial_model) {
            throw std::invalid_argument("user initialization requires an initial model");
        }
        start = *config.initial_model;
        start.validate();
        if (start.K() != K) throw StructuralError("initial model does not match the counts");
    } else {
        start = initial_model(counts, config.init_strategy);
    }
    if (config.tau_value) start.kernel = Kernel::exponential(*config.tau_value);
    if (config.phi_value) start.phi = *config.phi_value;
    const double floor = config.parameter_floor;
    for (Eigen::Index i = 0; i < start.mu.size(); ++i) start.mu[i] = std::max(start.mu[i], std::max(floor, 1e-12));
    start.A = start.A.cwiseMax(floor);
    start.validate();

    Layout layout{K, config.fit_tau, config.fit_phi};
    bool poisson = !config.fit_phi && start.phi == 0.0;

    // Boundary rule: starting at phi = 0 with a non-positive one-sided
    // derivative fixes the Poisson model.
    if (layout.fit_phi && start.phi == 0.0) {
        const LikelihoodValue at_zero = log_likelihood_with_gradient(start, counts, config.threads);
        if (at_zero.gradient.d_phi <= 0.0) {
            layout.fit_phi = false;
            poisson = true;
        }
    }

    const Eigen::Index dim = layout.size();
    Eigen::VectorXd lower = Eigen::VectorXd::Constant(dim, 0.0);
    Eigen::VectorXd upper = Eigen::VectorXd::Constant(dim, std::numeric_limits<double>::infinity());
    const double log_mu_floor = floor > 0.0 ? std::log(floor) : std::log(1e-10);
    for (std::size_t i = 0; i < K; ++i) {
        lower[static_cast<Eigen::Index>(i)] = log_mu_floor;
        upper[static_cast<Eigen::Index>(i)] = std::log(1e12);
        for (std::size_t j = 0; j < K; ++j) lower[layout.a_index(i, j)] = floor;
    }
    if (layout.fit_tau) {
        lower[layout.tau_index()] = std::log(1e-2);
        upper[layout.tau_index()] = std::log(std::max(10.0, static_cast<double>(T) / 4.0));
    }
    if (layout.fit_phi) lower[layout.phi_index()] = 0.0;

    ModelSpec work = start;
    // Kernel excitations depend only on tau; cache them across evaluations.
    double cached_tau = std::numeric_limits<double>::quiet_NaN();
    Grid<double> excitation;
    Grid<double> d_excitation;

    const Objective objective = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) -> double {
        layout.unpack(x, work);
        if (work.kernel.tau != cached_tau) {
            excitation = kernel_excitation(counts.n, work.kernel.values());
            d_excitation = kernel_excitation(counts.n, work.kernel.tau_derivatives());
            cached_tau = work.kernel.tau;
        }
        LikelihoodValue v;
        try {
            v = evaluate(work, counts, excitation, &d_excitation, config.threads);
        } catch (const std::logic_error&) {
            return std::numeric_limits<double>::infinity();
        }
        grad.resize(x.size());
        for (std::size_t i = 0; i < K; ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            grad[ii] = -v.gradient.d_mu[ii] * work.mu[ii];
            for (std::size_t j = 0; j < K; ++j) {
                grad[layout.a_index(i, j)] = -v.gradient.d_A(ii, static_cast<Eigen::Index>(j));
            }
        }
        if (layout.fit_tau) grad[layout.tau_index()] = -v.gradient.d_tau * work.kernel.tau;
        if (layout.fit_phi) grad[layout.phi_index()] = -v.gradient.d_phi;
        return -v.log_likelihood;
    };

    BoxLbfgsOptions options;
    options.max_iterations = config.max_iterations;
    options.gradient_tolerance = config.gradient_tolerance;
    const BoxLbfgsResult opt = minimize_box(objective, layout.pack(start), lower, upper, options);

    FitResult result;
    result.model = start;
    layout.unpack(opt.x, result.model);
    if (layout.fit_phi && result.model.phi < kPoissonSnap) {
        result.model.phi = 0.0;
        poisson = true;
    }
    result.poisson = poisson || result.model.phi == 0.0;
    result.log_likelihood = log_likelihood(result.model, counts, config.threads);
    result.iterations = opt.iterations;
    result.evaluations = opt.evaluations;
    result.converged = opt.converged;
    result.gradient_norm = opt.projected_gradient_norm;
    result.initial_gradient_norm = opt.initial_projected_gradient_norm;
    result.message = opt.message;
    result.trajectory.reserve(opt.history.size());
    for (double f : opt.history) result.trajectory.push_back(-f);
    return result;
}

} // namespace cascount

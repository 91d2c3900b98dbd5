#include "cascount/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

#include "cascount/errors.hpp"

namespace cascount {

namespace {

void require_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) {
        throw std::domain_error("kernel time constant must be positive, got " + std::to_string(tau));
    }
}

double power_iteration_radius(const Eigen::MatrixXd& A, int max_iterations, bool& converged) {
    // Nonnegative matrices: the Perron root is the spectral radius, and the
    // ratio of successive norms converges to it.
    Eigen::VectorXd v = Eigen::VectorXd::Ones(A.rows()) / std::sqrt(static_cast<double>(A.rows()));
    double estimate = 0.0;
    converged = false;
    for (int it = 0; it < max_iterations; ++it) {
        Eigen::VectorXd w = A * v;
        const double norm = w.norm();
        if (norm == 0.0) {
            converged = true;
            return 0.0;
        }
        const double next = norm;
        v = w / norm;
        if (std::abs(next - estimate) <= 1e-13 * std::max(1.0, next)) {
            converged = true;
            return next;
        }
        estimate = next;
    }
    return estimate;
}

} // namespace

int kernel_horizon(double tau, double tail_mass) {
    require_tau(tau);
    if (!(tail_mass > 0.0 && tail_mass < 1.0)) {
        throw std::domain_error("kernel tail mass must lie in (0, 1)");
    }
    // Tail mass beyond t is e^{-t/tau}.
    const double guess = std::ceil(tau * std::log(1.0 / tail_mass));
    auto t = static_cast<long long>(std::max(1.0, guess));
    while (t > 1 && std::exp(-static_cast<double>(t - 1) / tau) <= tail_mass) --t;
    while (std::exp(-static_cast<double>(t) / tau) > tail_mass) ++t;
    if (t > 100'000'000) throw std::domain_error("kernel horizon too long; tau is too large");
    return static_cast<int>(t);
}

Kernel Kernel::exponential(double tau) { return exponential(tau, kernel_horizon(tau)); }

Kernel Kernel::exponential(double tau, int t_max) {
    require_tau(tau);
    if (t_max < 1) throw std::domain_error("kernel horizon must be at least one bin");
    return Kernel{KernelKind::exponential, tau, t_max};
}

std::vector<double> Kernel::values() const {
    std::vector<double> h(static_cast<std::size_t>(t_max));
    const double q = std::exp(-1.0 / tau);
    double qpow = -std::expm1(-1.0 / tau);
    for (auto& v : h) {
        v = qpow;
        qpow *= q;
    }
    return h;
}

std::vector<double> Kernel::tau_derivatives() const {
    std::vector<double> dh(static_cast<std::size_t>(t_max));
    const double q = std::exp(-1.0 / tau);
    const double one_minus_q = -std::expm1(-1.0 / tau);
    const double inv_tau2 = 1.0 / (tau * tau);
    double q_lag = 1.0; // q^{t-1}
    for (std::size_t k = 0; k < dh.size(); ++k) {
        const auto lag_minus_one = static_cast<double>(k);
        dh[k] = q_lag * inv_tau2 * (one_minus_q * lag_minus_one - q);
        q_lag *= q;
    }
    return dh;
}

double kernel_eval(int t_lag, const Kernel& kernel) {
    if (t_lag < 1) throw std::domain_error("kernel lag must be at least 1");
    require_tau(kernel.tau);
    if (t_lag > kernel.t_max) return 0.0;
    return -std::expm1(-1.0 / kernel.tau) * std::exp(-static_cast<double>(t_lag - 1) / kernel.tau);
}

double kernel_tau_derivative(int t_lag, const Kernel& kernel) {
    if (t_lag < 1) throw std::domain_error("kernel lag must be at least 1");
    require_tau(kernel.tau);
    if (t_lag > kernel.t_max) return 0.0;
    const double tau = kernel.tau;
    const double q = std::exp(-1.0 / tau);
    const double q_lag = std::exp(-static_cast<double>(t_lag - 1) / tau);
    return q_lag / (tau * tau) * (-std::expm1(-1.0 / tau) * static_cast<double>(t_lag - 1) - q);
}

void ModelSpec::validate() const {
    const auto k = mu.size();
    if (k == 0) throw StructuralError("model has no components");
    if (A.rows() != k || A.cols() != k) {
        throw StructuralError("influence matrix is " + std::to_string(A.rows()) + "x" +
                              std::to_string(A.cols()) + " but K = " + std::to_string(k));
    }
    for (Eigen::Index i = 0; i < k; ++i) {
        if (!(mu[i] > 0.0) || !std::isfinite(mu[i])) {
            throw std::domain_error("background rate mu[" + std::to_string(i) + "] must be positive");
        }
    }
    if (!A.allFinite() || (A.array() < 0.0).any()) {
        throw std::domain_error("influence matrix entries must be finite and non-negative");
    }
    require_tau(kernel.tau);
    if (kernel.t_max < 1) throw std::domain_error("kernel horizon must be at least one bin");
    if (!(phi >= 0.0) || !std::isfinite(phi)) throw std::domain_error("dispersion must be >= 0");
}

void CountSeries::validate() const {
    if (K() == 0 || T() == 0) throw StructuralError("count series is empty");
    for (auto v : n.data()) {
        if (v < 0) throw std::domain_error("counts must be non-negative");
    }
}

Grid<double> kernel_excitation(const Grid<std::int64_t>& n, const std::vector<double>& h) {
    const std::size_t K = n.rows();
    const std::size_t T = n.cols();
    Grid<double> out(K, T, 0.0);
    for (std::size_t j = 0; j < K; ++j) {
        const auto src = n.row(j);
        auto dst = out.row(j);
        // Scatter each source forward; skips the many zero counts.
        for (std::size_t s = 0; s < T; ++s) {
            if (src[s] == 0) continue;
            const auto count = static_cast<double>(src[s]);
            const std::size_t last = std::min(T, s + 1 + h.size());
            for (std::size_t t = s + 1; t < last; ++t) dst[t] += count * h[t - s - 1];
        }
    }
    return out;
}

RateField::RateField(const ModelSpec& model, const CountSeries& counts)
    : n_(counts.n), A_(model.A), h_(model.kernel.values()) {
    const std::size_t K = counts.K();
    const std::size_t T = counts.T();
    excitation_ = kernel_excitation(counts.n, h_);
    lambda_ = Grid<double>(K, T);
    mu_part_ = Grid<double>(K, T);
    for (std::size_t i = 0; i < K; ++i) {
        const double mu = model.mu[static_cast<Eigen::Index>(i)];
        for (std::size_t t = 0; t < T; ++t) {
            double triggered = 0.0;
            for (std::size_t j = 0; j < K; ++j) {
                triggered += A_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                             excitation_(j, t);
            }
            mu_part_(i, t) = mu;
            lambda_(i, t) = mu + triggered;
        }
    }
}

std::vector<PsiEntry> RateField::psi(std::size_t i, std::size_t t) const {
    std::vector<PsiEntry> out;
    for_each_psi(i, t, [&](std::size_t j, std::size_t s, double v) { out.push_back({j, s, v}); });
    return out;
}

RateField compute_rates(const ModelSpec& model, const CountSeries& counts) {
    model.validate();
    counts.validate();
    if (counts.K() != model.K()) {
        throw StructuralError("counts have " + std::to_string(counts.K()) +
                              " components but the model has " + std::to_string(model.K()));
    }
    return RateField(model, counts);
}

double spectral_radius(const Eigen::MatrixXd& A) {
    if (A.rows() != A.cols()) throw StructuralError("spectral radius needs a square matrix");
    if (A.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> solver(A, false);
    if (solver.info() == Eigen::Success) return solver.eigenvalues().cwiseAbs().maxCoeff();
    bool converged = false;
    const double estimate = power_iteration_radius(A.cwiseAbs(), 100000, converged);
    if (!converged) {
        throw ConvergenceError("spectral radius did not converge", estimate);
    }
    return estimate;
}

Eigen::VectorXd steady_state_rate(const ModelSpec& model) {
    model.validate();
    const double radius = spectral_radius(model.A);
    if (radius >= 1.0) {
        throw InstabilityError("spectral radius " + std::to_string(radius) +
                                   " >= 1: no steady state exists",
                               radius);
    }
    const auto K = static_cast<Eigen::Index>(model.K());
    const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(K, K) - model.A;
    return system.partialPivLu().solve(model.mu);
}

} // namespace cascount

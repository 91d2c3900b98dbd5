#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "cascount/grid.hpp"

namespace cascount {

enum class KernelKind { exponential };

/// Causal lag kernel h(t), t >= 1, normalized so that sum_{t>=1} h(t) = 1.
///
/// The exponential kernel is h(t) = (e^{1/tau} - 1) e^{-t/tau}, truncated at
/// t_max bins. The default horizon is the smallest t_max whose cumulative
/// mass reaches 1 - 1e-10 (47 bins for tau = 2).
struct Kernel {
    KernelKind kind = KernelKind::exponential;
    double tau = 1.0;
    int t_max = 1;

    static Kernel exponential(double tau);
    static Kernel exponential(double tau, int t_max);

    /// h(1..t_max), index 0 holds lag 1.
    [[nodiscard]] std::vector<double> values() const;
    /// dh/dtau at lags 1..t_max.
    [[nodiscard]] std::vector<double> tau_derivatives() const;
};

inline constexpr double kKernelMassTolerance = 1e-10;

[[nodiscard]] int kernel_horizon(double tau, double tail_mass = kKernelMassTolerance);

/// h(t_lag); zero beyond the truncation horizon. Throws for t_lag < 1.
[[nodiscard]] double kernel_eval(int t_lag, const Kernel& kernel);

/// d h(t_lag) / d tau, including the normalizer's dependence on tau.
[[nodiscard]] double kernel_tau_derivative(int t_lag, const Kernel& kernel);

/// Full parameter set. A(i, j) is the influence of component j on i.
struct ModelSpec {
    Eigen::VectorXd mu;
    Eigen::MatrixXd A;
    Kernel kernel;
    double phi = 0.0;

    [[nodiscard]] std::size_t K() const noexcept { return static_cast<std::size_t>(mu.size()); }
    /// Throws StructuralError on shape problems, std::domain_error on
    /// out-of-range values.
    void validate() const;
};

/// K x T grid of event counts. Column c holds time bin t0 + c; t0 is 1 in
/// every public file format.
struct CountSeries {
    Grid<std::int64_t> n;
    int t0 = 1;

    CountSeries() = default;
    CountSeries(std::size_t K, std::size_t T) : n(K, T, 0) {}
    explicit CountSeries(Grid<std::int64_t> counts, int t0_ = 1) : n(std::move(counts)), t0(t0_) {}

    [[nodiscard]] std::size_t K() const noexcept { return n.rows(); }
    [[nodiscard]] std::size_t T() const noexcept { return n.cols(); }
    std::int64_t& operator()(std::size_t i, std::size_t t) noexcept { return n(i, t); }
    std::int64_t operator()(std::size_t i, std::size_t t) const noexcept { return n(i, t); }

    void validate() const;
};

/// Triggered rate psi_{itjs} = a_ij n_js h(t - s) attributed to source (j, s).
struct PsiEntry {
    std::size_t j;
    std::size_t s;
    double value;
};

/// Per-cell rates lambda = mu_part + sum psi.
///
/// excitation(j, t) = sum_{lag} n_{j,t-lag} h(lag), so that
/// lambda(i, t) = mu_i + sum_j A(i, j) excitation(j, t). The psi entries are
/// not materialized (there are K^2 T t_max of them); for_each_psi
/// enumerates the nonzero ones on demand.
class RateField {
public:
    RateField() = default;
    RateField(const ModelSpec& model, const CountSeries& counts);

    [[nodiscard]] std::size_t K() const noexcept { return lambda_.rows(); }
    [[nodiscard]] std::size_t T() const noexcept { return lambda_.cols(); }

    [[nodiscard]] const Grid<double>& lambda() const noexcept { return lambda_; }
    [[nodiscard]] const Grid<double>& mu_part() const noexcept { return mu_part_; }
    [[nodiscard]] const Grid<double>& excitation() const noexcept { return excitation_; }
    [[nodiscard]] double lambda(std::size_t i, std::size_t t) const noexcept { return lambda_(i, t); }
    [[nodiscard]] double mu_part(std::size_t i, std::size_t t) const noexcept {
        return mu_part_(i, t);
    }

    /// Visits (j, s, psi) for every positive psi_{itjs}, ordered by j then s.
    template <typename Visitor>
    void for_each_psi(std::size_t i, std::size_t t, Visitor&& visit) const {
        const auto horizon = static_cast<std::size_t>(h_.size());
        const std::size_t first = t > horizon ? t - horizon : 0;
        for (std::size_t j = 0; j < K(); ++j) {
            const double a = A_(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            if (a <= 0.0) continue;
            for (std::size_t s = first; s < t; ++s) {
                const std::int64_t source = n_(j, s);
                if (source == 0) continue;
                const double psi = a * static_cast<double>(source) * h_[t - s - 1];
                if (psi > 0.0) visit(j, s, psi);
            }
        }
    }

    [[nodiscard]] std::vector<PsiEntry> psi(std::size_t i, std::size_t t) const;

private:
    Grid<double> lambda_;
    Grid<double> mu_part_;
    Grid<double> excitation_;
    Grid<std::int64_t> n_;
    Eigen::MatrixXd A_;
    std::vector<double> h_;
};

/// excitation(j, t) = sum_{lag=1}^{h.size()} n(j, t - lag) h[lag - 1].
[[nodiscard]] Grid<double> kernel_excitation(const Grid<std::int64_t>& n,
                                             const std::vector<double>& h);

/// Rates for `counts` under `model`. Throws StructuralError when K differs.
[[nodiscard]] RateField compute_rates(const ModelSpec& model, const CountSeries& counts);

/// Largest absolute eigenvalue of a square matrix.
[[nodiscard]] double spectral_radius(const Eigen::MatrixXd& A);

/// Stationary mean rate (I - A)^{-1} mu. Throws InstabilityError when the
/// spectral radius of A is not below one.
[[nodiscard]] Eigen::VectorXd steady_state_rate(const ModelSpec& model);

} // namespace cascount

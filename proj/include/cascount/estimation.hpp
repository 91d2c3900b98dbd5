#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "cascount/model.hpp"

namespace cascount {

enum class InitStrategy { moment, fixed, user };

struct FitConfig {
    int max_iterations = 2000;
    /// Relative to the projected-gradient norm at the starting point.
    double gradient_tolerance = 1e-6;
    /// Lower bound on mu and on every a_ij.
    double parameter_floor = 0.0;
    InitStrategy init_strategy = InitStrategy::moment;
    bool fit_tau = true;
    bool fit_phi = true;
    /// Held value of tau when fit_tau is false (otherwise the initial value
    /// from the strategy is used).
    std::optional<double> tau_value;
    /// Held value of phi when fit_phi is false; 0 selects the Poisson model.
    std::optional<double> phi_value;
    /// Starting point for InitStrategy::user.
    std::optional<ModelSpec> initial_model;
    std::size_t threads = 1;
};

struct FitResult {
    ModelSpec model;
    double log_likelihood = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    /// Projected-gradient norm in optimizer coordinates at the final iterate.
    double gradient_norm = 0.0;
    double initial_gradient_norm = 0.0;
    /// phi was fixed at or snapped to zero: the Poisson family.
    bool poisson = false;
    /// Log-likelihood at the start and after every accepted step.
    std::vector<double> trajectory;
    std::string message;
};

/// d l / d theta for every model parameter.
struct LikelihoodGradient {
    Eigen::VectorXd d_mu;
    Eigen::MatrixXd d_A;
    double d_tau = 0.0;
    /// One-sided derivative from above when phi == 0.
    double d_phi = 0.0;
};

struct LikelihoodValue {
    double log_likelihood = 0.0;
    LikelihoodGradient gradient;
};

/// sum_{i,t} log f(n_it; lambda_it, phi): NB for phi > 0, Poisson at 0.
[[nodiscard]] double log_likelihood(const ModelSpec& model, const CountSeries& counts,
                                    std::size_t threads = 1);

[[nodiscard]] LikelihoodGradient log_likelihood_gradient(const ModelSpec& model,
                                                         const CountSeries& counts,
                                                         std::size_t threads = 1);

[[nodiscard]] LikelihoodValue log_likelihood_with_gradient(const ModelSpec& model,
                                                           const CountSeries& counts,
                                                           std::size_t threads = 1);

/// Starting model for `strategy` (moment or fixed).
[[nodiscard]] ModelSpec initial_model(const CountSeries& counts, InitStrategy strategy);

/// Maximum-likelihood fit of mu, A, tau and phi under box constraints.
///
/// mu and tau are optimized on the log scale, A and phi with bounds at zero.
/// Throws std::domain_error naming the component when a component has no
/// events. A non-converged fit is returned with converged == false.
[[nodiscard]] FitResult fit(const CountSeries& counts, const FitConfig& config = {});

} // namespace cascount

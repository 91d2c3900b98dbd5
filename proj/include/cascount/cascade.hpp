#pragma once

#include <cstdint>
#include <vector>

#include "cascount/model.hpp"
#include "cascount/simulator.hpp"

namespace cascount {

/// Normalized attribution weights of one cell: mu_tilde = mu / lambda and
/// psi_tilde = psi / lambda, summing to one.
struct ConditionalWeights {
    double mu_tilde = 1.0;
    std::vector<PsiEntry> psi_tilde;
};

[[nodiscard]] ConditionalWeights conditional_weights(const RateField& rates, std::size_t i,
                                                     std::size_t t);

/// Variance inflation (lambda + phi n) / (lambda + phi) of the
/// Dirichlet-multinomial split relative to the multinomial one.
[[nodiscard]] double kappa(double lambda, double phi, std::int64_t n);

/// E(Y | N): background n mu_tilde and triggered n psi_tilde per cell.
/// The mean does not depend on phi.
[[nodiscard]] CascadeDecomposition conditional_expectation(const ModelSpec& model,
                                                           const CountSeries& counts);

struct ConditionalVariance {
    Grid<double> background;
    /// Same keys as the expected decomposition's triggered entries.
    std::vector<TriggeredEntry> triggered;
};

/// Var(Y | N) = kappa n p (1 - p) per part, with kappa = 1 when phi = 0.
[[nodiscard]] ConditionalVariance conditional_variance(const ModelSpec& model,
                                                       const CountSeries& counts);

/// Sum of all triggered entries (the total number of triggered events).
[[nodiscard]] double total_triggered(const CascadeDecomposition& decomposition);

/// K x T grid whose (j, s) entry sums the triggered entries with source
/// (j, s): the events directly triggered by (j, s). Only the first
/// generation is counted; descendants of descendants are not.
[[nodiscard]] Grid<double> cascade_sizes(const CascadeDecomposition& decomposition);

/// total_triggered and cascade_sizes of the expected decomposition,
/// computed without materializing it.
struct CascadeSummary {
    double total_triggered = 0.0;
    Grid<double> sizes;
};

[[nodiscard]] CascadeSummary expected_cascade_summary(const ModelSpec& model,
                                                      const CountSeries& counts);

/// One draw from P(Y | N): every cell's count is split across background and
/// its active sources with weights (mu, psi) and dispersion phi. Component i
/// uses random stream Rng(seed, i).
[[nodiscard]] CascadeDecomposition conditional_sample(const ModelSpec& model,
                                                      const CountSeries& counts,
                                                      std::uint64_t seed);

} // namespace cascount

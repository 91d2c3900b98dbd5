#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cascount/random.hpp"

namespace cascount {

// Count families used as additive building blocks. Throughout, phi is the
// over-dispersion of the negative binomial with mean lambda and variance
// (1 + phi) * lambda; phi == 0 selects the Poisson family exactly.

struct NbParams {
    double lambda;
    double phi;
};

/// Textbook NB(r, p): number of successes before r failures.
struct NbClassicParams {
    double r;
    double p;
};

/// log of lambda^y e^{-lambda} / y!.
[[nodiscard]] double poisson_log_pmf(std::int64_t y, double lambda);

/// log NB(y; lambda, phi) with mean lambda and variance (1 + phi) lambda.
/// Requires phi > 0; callers route phi == 0 to poisson_log_pmf.
[[nodiscard]] double nb_log_pmf(std::int64_t y, double lambda, double phi);

/// Dispatches to poisson_log_pmf for phi == 0 and nb_log_pmf otherwise.
[[nodiscard]] double count_log_pmf(std::int64_t y, double lambda, double phi);

/// Log-pmf together with its partial derivatives in lambda and phi.
/// At phi == 0 the phi-derivative is the one-sided limit from above.
struct CountScore {
    double log_pmf;
    double d_lambda;
    double d_phi;
};

[[nodiscard]] CountScore count_log_pmf_score(std::int64_t y, double lambda, double phi);

/// Cumulant generating function of NB(lambda, phi); defined for
/// 1 - (e^s - 1) phi > 0.
[[nodiscard]] double nb_cgf(double s, double lambda, double phi);

[[nodiscard]] double poisson_cgf(double s, double lambda);

[[nodiscard]] NbParams nb_params_from_classic(const NbClassicParams& params);
[[nodiscard]] NbClassicParams nb_params_to_classic(const NbParams& params);

/// sum_{k=0}^{n-1} log(w + k * step). Equals log Gamma(n + w/step) -
/// log Gamma(w/step) + n log step for step > 0.
[[nodiscard]] double log_rising(double w, double step, std::int64_t n);

/// log-probability of splitting sum(parts) into `parts` with cell
/// probabilities weights / sum(weights). Zero weights are structural zeros.
[[nodiscard]] double multinomial_conditional_log_pmf(std::span<const std::int64_t> parts,
                                                     std::span<const double> weights);

/// Dirichlet-multinomial analogue with concentrations weights / phi.
[[nodiscard]] double dm_conditional_log_pmf(std::span<const std::int64_t> parts,
                                            std::span<const double> weights, double phi);

// Samplers. Each takes an exclusively owned generator.

[[nodiscard]] std::int64_t poisson_sample(double lambda, Rng& rng);

/// Gamma(shape, scale) draw (Marsaglia-Tsang, with the shape < 1 boost).
[[nodiscard]] double gamma_sample(double shape, double scale, Rng& rng);

/// log of a Gamma(shape, 1) draw; finite even when the draw underflows.
[[nodiscard]] double log_gamma_sample(double shape, Rng& rng);

/// NB(lambda, phi) as a gamma-mixed Poisson; phi == 0 draws a Poisson.
[[nodiscard]] std::int64_t nb_sample(double lambda, double phi, Rng& rng);

/// Splits `total` across cells with the multinomial (phi == 0) or
/// Dirichlet-multinomial (phi > 0) conditional law.
[[nodiscard]] std::vector<std::int64_t> conditional_split_sample(std::int64_t total,
                                                                 std::span<const double> weights,
                                                                 double phi, Rng& rng);

} // namespace cascount

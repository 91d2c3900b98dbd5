#include "cascount/distributions.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace cascount {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Rising products longer than this switch to the log-gamma form.
constexpr std::int64_t kRisingLoopLimit = 4096;

constexpr std::size_t kLogFactorialTable = 1024;

const std::array<double, kLogFactorialTable>& log_factorial_table() {
    static const auto table = [] {
        std::array<double, kLogFactorialTable> t{};
        t[0] = 0.0;
        for (std::size_t k = 1; k < t.size(); ++k) {
            t[k] = t[k - 1] + std::log(static_cast<double>(k));
        }
        return t;
    }();
    return table;
}

double log_factorial(std::int64_t n) {
    if (n < static_cast<std::int64_t>(kLogFactorialTable)) {
        return log_factorial_table()[static_cast<std::size_t>(n)];
    }
    return boost::math::lgamma(static_cast<double>(n) + 1.0);
}

void require_count(std::int64_t y) {
    if (y < 0) throw std::domain_error("count must be non-negative, got " + std::to_string(y));
}

void require_rate(double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda)) {
        throw std::domain_error("rate must be positive and finite, got " + std::to_string(lambda));
    }
}

void require_phi(double phi, bool allow_zero) {
    if (!std::isfinite(phi) || phi < 0.0 || (!allow_zero && phi == 0.0)) {
        throw std::domain_error("dispersion out of range: " + std::to_string(phi));
    }
}

// log1p(phi) / phi and its derivative, with series near zero.
double log1p_over(double phi) {
    if (phi < 1e-4) return 1.0 - phi / 2.0 + phi * phi / 3.0 - phi * phi * phi / 4.0;
    return std::log1p(phi) / phi;
}

double d_log1p_over(double phi) {
    if (phi < 1e-3) {
        const double p2 = phi * phi;
        return -0.5 + 2.0 * phi / 3.0 - 0.75 * p2 + 0.8 * p2 * phi - 5.0 / 6.0 * p2 * p2;
    }
    return (phi / (1.0 + phi) - std::log1p(phi)) / (phi * phi);
}

// sum_{k<n} 1/(w + k step)
double rising_inverse_sum(double w, double step, std::int64_t n) {
    if (step == 0.0) return static_cast<double>(n) / w;
    if (n <= kRisingLoopLimit) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < n; ++k) acc += 1.0 / (w + static_cast<double>(k) * step);
        return acc;
    }
    const double r = w / step;
    return (boost::math::digamma(static_cast<double>(n) + r) - boost::math::digamma(r)) / step;
}

void validate_split(std::span<const std::int64_t> parts, std::span<const double> weights) {
    if (parts.size() != weights.size()) {
        throw std::domain_error("parts and weights differ in length");
    }
    for (auto y : parts) require_count(y);
}

double validated_weight_sum(std::span<const double> weights) {
    if (weights.empty()) throw std::domain_error("weights must be non-empty");
    double total = 0.0;
    for (double w : weights) {
        if (!std::isfinite(w) || w < 0.0) {
            throw std::domain_error("weights must be finite and non-negative");
        }
        total += w;
    }
    if (!(total > 0.0)) throw std::domain_error("weights must have a positive sum");
    return total;
}

double standard_normal(Rng& rng) {
    // Box-Muller without caching the second variate.
    const double u1 = rng.uniform_open();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double gamma_shape_ge_one(double shape, Rng& rng) {
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        double x = 0.0;
        double v = 0.0;
        do {
            x = standard_normal(rng);
            v = 1.0 + c * x;
        } while (v <= 0.0);
        v = v * v * v;
        const double u = rng.uniform_open();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

// Categorical draws from unnormalized probabilities; adds into out.
void multinomial_from_masses(std::int64_t total, std::span<const double> mass,
                             std::span<std::int64_t> out, Rng& rng) {
    std::vector<double> cumulative(mass.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < mass.size(); ++k) {
        acc += mass[k];
        cumulative[k] = acc;
    }
    if (total <= 1000) {
        for (std::int64_t draw = 0; draw < total; ++draw) {
            const double u = rng.uniform() * acc;
            auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
            auto idx = static_cast<std::size_t>(it - cumulative.begin());
            if (idx >= mass.size()) idx = mass.size() - 1;
            ++out[idx];
        }
        return;
    }
    // Sequential binomials against suffix masses.
    std::vector<double> suffix(mass.size() + 1, 0.0);
    for (std::size_t k = mass.size(); k-- > 0;) suffix[k] = suffix[k + 1] + mass[k];
    std::int64_t remaining = total;
    for (std::size_t k = 0; k < mass.size() && remaining > 0; ++k) {
        if (mass[k] == 0.0) continue;
        const double p = std::clamp(mass[k] / suffix[k], 0.0, 1.0);
        if (p >= 1.0) {
            out[k] += remaining;
            remaining = 0;
            break;
        }
        std::binomial_distribution<std::int64_t> binom(remaining, p);
        const std::int64_t y = binom(rng);
        out[k] += y;
        remaining -= y;
    }
    if (remaining > 0) {
        for (std::size_t k = mass.size(); k-- > 0;) {
            if (mass[k] > 0.0) {
                out[k] += remaining;
                break;
            }
        }
    }
}

} // namespace

double poisson_log_pmf(std::int64_t y, double lambda) {
    require_count(y);
    require_rate(lambda);
    if (y == 0) return -lambda;
    return static_cast<double>(y) * std::log(lambda) - lambda - log_factorial(y);
}

double log_rising(double w, double step, std::int64_t n) {
    if (n <= 0) return 0.0;
    if (step == 0.0) return static_cast<double>(n) * std::log(w);
    if (n <= kRisingLoopLimit || w == 0.0) {
        double acc = 0.0;
        for (std::int64_t k = 0; k < n; ++k) acc += std::log(w + static_cast<double>(k) * step);
        return acc;
    }
    const double r = w / step;
    return static_cast<double>(n) * std::log(step) +
           boost::math::lgamma(static_cast<double>(n) + r) - boost::math::lgamma(r);
}

double nb_log_pmf(std::int64_t y, double lambda, double phi) {
    require_count(y);
    require_rate(lambda);
    require_phi(phi, false);
    const double l1p = std::log1p(phi);
    return log_rising(lambda, phi, y) - log_factorial(y) - static_cast<double>(y) * l1p -
           lambda * log1p_over(phi);
}

double count_log_pmf(std::int64_t y, double lambda, double phi) {
    require_phi(phi, true);
    return phi == 0.0 ? poisson_log_pmf(y, lambda) : nb_log_pmf(y, lambda, phi);
}

CountScore count_log_pmf_score(std::int64_t y, double lambda, double phi) {
    require_count(y);
    require_rate(lambda);
    require_phi(phi, true);
    const auto n = static_cast<double>(y);
    if (phi == 0.0) {
        return {poisson_log_pmf(y, lambda), n / lambda - 1.0,
                n * (n - 1.0) / (2.0 * lambda) - n + lambda / 2.0};
    }
    const double inv_sum = rising_inverse_sum(lambda, phi, y);
    // sum_k k/(lambda + k phi) = (n - lambda * inv_sum) / phi, but the
    // direct form avoids cancellation for small phi.
    double k_sum = 0.0;
    if (y <= kRisingLoopLimit) {
        for (std::int64_t k = 1; k < y; ++k) {
            const auto kd = static_cast<double>(k);
            k_sum += kd / (lambda + kd * phi);
        }
    } else {
        k_sum = (n - lambda * inv_sum) / phi;
    }
    CountScore score{};
    score.log_pmf = nb_log_pmf(y, lambda, phi);
    score.d_lambda = inv_sum - log1p_over(phi);
    score.d_phi = k_sum - n / (1.0 + phi) - lambda * d_log1p_over(phi);
    return score;
}

double nb_cgf(double s, double lambda, double phi) {
    require_rate(lambda);
    require_phi(phi, false);
    const double arg = -std::expm1(s) * phi;
    if (!(1.0 + arg > 0.0)) {
        throw std::domain_error("nb_cgf: s outside the convergence region");
    }
    return -(lambda / phi) * std::log1p(arg);
}

double poisson_cgf(double s, double lambda) {
    require_rate(lambda);
    return lambda * std::expm1(s);
}

NbParams nb_params_from_classic(const NbClassicParams& params) {
    if (!(params.r > 0.0) || !(params.p > 0.0 && params.p < 1.0)) {
        throw std::domain_error("NB classic parameters require r > 0 and 0 < p < 1");
    }
    const double odds = params.p / (1.0 - params.p);
    return {params.r * odds, odds};
}

NbClassicParams nb_params_to_classic(const NbParams& params) {
    require_rate(params.lambda);
    require_phi(params.phi, false);
    return {params.lambda / params.phi, params.phi / (1.0 + params.phi)};
}

double multinomial_conditional_log_pmf(std::span<const std::int64_t> parts,
                                       std::span<const double> weights) {
    validate_split(parts, weights);
    const double total_weight = validated_weight_sum(weights);
    std::int64_t total = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k] == 0) continue;
        if (weights[k] == 0.0) return kNegInf;
        total += parts[k];
        acc += static_cast<double>(parts[k]) * std::log(weights[k] / total_weight) -
               log_factorial(parts[k]);
    }
    return acc + log_factorial(total);
}

double dm_conditional_log_pmf(std::span<const std::int64_t> parts,
                              std::span<const double> weights, double phi) {
    require_phi(phi, false);
    validate_split(parts, weights);
    const double total_weight = validated_weight_sum(weights);
    std::int64_t total = 0;
    double acc = 0.0;
    for (std::size_t k = 0; k < parts.size(); ++k) {
        if (parts[k] == 0) continue;
        if (weights[k] == 0.0) return kNegInf;
        total += parts[k];
        acc += log_rising(weights[k], phi, parts[k]) - log_factorial(parts[k]);
    }
    return acc + log_factorial(total) - log_rising(total_weight, phi, total);
}

std::int64_t poisson_sample(double lambda, Rng& rng) {
    if (!(lambda > 0.0)) return 0;
    if (lambda < 30.0) {
        double p = std::exp(-lambda);
        double cdf = p;
        const double u = rng.uniform();
        std::int64_t k = 0;
        while (u > cdf && k < 1000) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    std::poisson_distribution<std::int64_t> dist(lambda);
    return dist(rng);
}

double gamma_sample(double shape, double scale, Rng& rng) {
    if (!(shape > 0.0) || !(scale > 0.0)) {
        throw std::domain_error("gamma_sample requires positive shape and scale");
    }
    if (shape >= 1.0) return scale * gamma_shape_ge_one(shape, rng);
    const double g = gamma_shape_ge_one(shape + 1.0, rng);
    return scale * g * std::pow(rng.uniform_open(), 1.0 / shape);
}

double log_gamma_sample(double shape, Rng& rng) {
    if (!(shape > 0.0)) throw std::domain_error("log_gamma_sample requires positive shape");
    if (shape >= 1.0) return std::log(gamma_shape_ge_one(shape, rng));
    const double g = gamma_shape_ge_one(shape + 1.0, rng);
    return std::log(g) + std::log(rng.uniform_open()) / shape;
}

std::int64_t nb_sample(double lambda, double phi, Rng& rng) {
    require_rate(lambda);
    require_phi(phi, true);
    if (phi == 0.0) return poisson_sample(lambda, rng);
    return poisson_sample(gamma_sample(lambda / phi, phi, rng), rng);
}

std::vector<std::int64_t> conditional_split_sample(std::int64_t total,
                                                   std::span<const double> weights, double phi,
                                                   Rng& rng) {
    require_count(total);
    require_phi(phi, true);
    validated_weight_sum(weights);
    std::vector<std::int64_t> out(weights.size(), 0);
    if (total == 0) return out;
    if (phi == 0.0) {
        multinomial_from_masses(total, weights, out, rng);
        return out;
    }
    // Dirichlet weights with concentrations w/phi, drawn in log space so
    // that tiny concentrations do not underflow to an all-zero vector.
    std::vector<double> log_g(weights.size(), kNegInf);
    double max_log = kNegInf;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        log_g[k] = log_gamma_sample(weights[k] / phi, rng);
        max_log = std::max(max_log, log_g[k]);
    }
    std::vector<double> mass(weights.size(), 0.0);
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] != 0.0) mass[k] = std::exp(log_g[k] - max_log);
    }
    multinomial_from_masses(total, mass, out, rng);
    return out;
}

} // namespace cascount

#include "cascount/cascade.hpp"

#include <stdexcept>

#include "cascount/distributions.hpp"
#include "cascount/random.hpp"

namespace cascount {

namespace {

// Calls on_cell(i, t, n, mu_tilde) and on_source(i, t, j, s, n, psi_tilde)
// for every cell with n > 0, in (i, t, j, s) order.
template <typename CellFn, typename SourceFn>
void for_each_attribution(const RateField& rates, const CountSeries& counts, CellFn&& on_cell,
                          SourceFn&& on_source) {
    for (std::size_t i = 0; i < counts.K(); ++i) {
        for (std::size_t t = 0; t < counts.T(); ++t) {
            const std::int64_t n = counts(i, t);
            if (n == 0) continue;
            const double lambda = rates.lambda(i, t);
            const double mu = rates.mu_part(i, t);
            if (lambda == mu) {
                on_cell(i, t, n, 1.0);
                continue;
            }
            on_cell(i, t, n, mu / lambda);
            rates.for_each_psi(i, t, [&](std::size_t j, std::size_t s, double psi) {
                on_source(i, t, j, s, n, psi / lambda);
            });
        }
    }
}

} // namespace

ConditionalWeights conditional_weights(const RateField& rates, std::size_t i, std::size_t t) {
    ConditionalWeights w;
    const double lambda = rates.lambda(i, t);
    w.mu_tilde = rates.mu_part(i, t) / lambda;
    rates.for_each_psi(i, t, [&](std::size_t j, std::size_t s, double psi) {
        w.psi_tilde.push_back({j, s, psi / lambda});
    });
    return w;
}

double kappa(double lambda, double phi, std::int64_t n) {
    if (phi == 0.0) return 1.0;
    return (lambda + phi * static_cast<double>(n)) / (lambda + phi);
}

CascadeDecomposition conditional_expectation(const ModelSpec& model, const CountSeries& counts) {
    const RateField rates = compute_rates(model, counts);
    CascadeDecomposition out;
    out.mode = DecompositionMode::expected;
    out.background = Grid<double>(counts.K(), counts.T(), 0.0);
    for_each_attribution(
        rates, counts,
        [&](std::size_t i, std::size_t t, std::int64_t n, double mu_tilde) {
            out.background(i, t) = static_cast<double>(n) * mu_tilde;
        },
        [&](std::size_t i, std::size_t t, std::size_t j, std::size_t s, std::int64_t n,
            double psi_tilde) {
            out.triggered.push_back({i, t, j, s, static_cast<double>(n) * psi_tilde});
        });
    return out;
}

ConditionalVariance conditional_variance(const ModelSpec& model, const CountSeries& counts) {
    const RateField rates = compute_rates(model, counts);
    ConditionalVariance out;
    out.background = Grid<double>(counts.K(), counts.T(), 0.0);
    for_each_attribution(
        rates, counts,
        [&](std::size_t i, std::size_t t, std::int64_t n, double p) {
            const double k = kappa(rates.lambda(i, t), model.phi, n);
            out.background(i, t) = k * static_cast<double>(n) * p * (1.0 - p);
        },
        [&](std::size_t i, std::size_t t, std::size_t j, std::size_t s, std::int64_t n, double p) {
            const double k = kappa(rates.lambda(i, t), model.phi, n);
            out.triggered.push_back({i, t, j, s, k * static_cast<double>(n) * p * (1.0 - p)});
        });
    return out;
}

double total_triggered(const CascadeDecomposition& decomposition) {
    double total = 0.0;
    for (const auto& e : decomposition.triggered) total += e.value;
    return total;
}

Grid<double> cascade_sizes(const CascadeDecomposition& decomposition) {
    Grid<double> sizes(decomposition.K(), decomposition.T(), 0.0);
    for (const auto& e : decomposition.triggered) sizes(e.j, e.s) += e.value;
    return sizes;
}

CascadeSummary expected_cascade_summary(const ModelSpec& model, const CountSeries& counts) {
    const RateField rates = compute_rates(model, counts);
    CascadeSummary summary;
    summary.sizes = Grid<double>(counts.K(), counts.T(), 0.0);
    for_each_attribution(
        rates, counts, [](std::size_t, std::size_t, std::int64_t, double) {},
        [&](std::size_t, std::size_t, std::size_t j, std::size_t s, std::int64_t n, double p) {
            const double value = static_cast<double>(n) * p;
            summary.total_triggered += value;
            summary.sizes(j, s) += value;
        });
    return summary;
}

CascadeDecomposition conditional_sample(const ModelSpec& model, const CountSeries& counts,
                                        std::uint64_t seed) {
    const RateField rates = compute_rates(model, counts);
    CascadeDecomposition out;
    out.mode = DecompositionMode::sampled;
    out.background = Grid<double>(counts.K(), counts.T(), 0.0);

    Rng rng(seed);
    std::vector<double> weights;
    std::vector<PsiEntry> sources;
    for (std::size_t i = 0; i < counts.K(); ++i) {
        if (i > 0) rng.jump();
        for (std::size_t t = 0; t < counts.T(); ++t) {
            const std::int64_t n = counts(i, t);
            if (n == 0) continue;
            if (rates.lambda(i, t) == rates.mu_part(i, t)) {
                out.background(i, t) = static_cast<double>(n);
                continue;
            }
            sources.clear();
            weights.clear();
            weights.push_back(rates.mu_part(i, t));
            rates.for_each_psi(i, t, [&](std::size_t j, std::size_t s, double psi) {
                sources.push_back({j, s, psi});
                weights.push_back(psi);
            });
            const auto split = conditional_split_sample(n, weights, model.phi, rng);
            out.background(i, t) = static_cast<double>(split[0]);
            for (std::size_t k = 0; k < sources.size(); ++k) {
                if (split[k + 1] == 0) continue;
                out.triggered.push_back(
                    {i, t, sources[k].j, sources[k].s, static_cast<double>(split[k + 1])});
            }
        }
    }
    return out;
}

} // namespace cascount

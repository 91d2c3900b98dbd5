#include "cascount/simulator.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "cascount/distributions.hpp"
#include "cascount/errors.hpp"
#include "cascount/random.hpp"

namespace cascount {

Grid<double> CascadeDecomposition::totals() const {
    Grid<double> out = background;
    for (const auto& e : triggered) out(e.i, e.t) += e.value;
    return out;
}

SimulationResult simulate(const ModelSpec& model, std::size_t T, std::uint64_t seed,
                          const SimulateOptions& options) {
    model.validate();
    if (T == 0) throw std::domain_error("simulation length must be at least one bin");

    SimulationResult result;
    result.spectral_radius = spectral_radius(model.A);
    if (result.spectral_radius >= 1.0) {
        std::ostringstream msg;
        msg << "model is unstable (spectral radius " << result.spectral_radius
            << " >= 1); counts may grow without bound";
        result.warning = msg.str();
    }

    const std::size_t K = model.K();
    const std::size_t burn = options.burn_in ? 5 * static_cast<std::size_t>(model.kernel.t_max) : 0;
    const std::size_t total_bins = T + burn;
    const std::vector<double> h = model.kernel.values();
    const std::size_t horizon = h.size();

    std::vector<Rng> streams;
    streams.reserve(K);
    streams.emplace_back(seed);
    for (std::size_t i = 1; i < K; ++i) {
        streams.push_back(streams.back());
        streams.back().jump();
    }

    Grid<std::int64_t> n(K, total_bins, 0);
    Grid<double> background(K, T, 0.0);
    std::vector<TriggeredEntry> triggered;

    for (std::size_t t = 0; t < total_bins; ++t) {
        const std::size_t first = t > horizon ? t - horizon : 0;
        const bool kept = t >= burn;
        for (std::size_t i = 0; i < K; ++i) {
            Rng& rng = streams[i];
            std::int64_t yb = nb_sample(model.mu[static_cast<Eigen::Index>(i)], model.phi, rng);
            std::int64_t total = yb;
            for (std::size_t j = 0; j < K; ++j) {
                const double a = model.A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                if (a <= 0.0) continue;
                for (std::size_t s = first; s < t; ++s) {
                    const std::int64_t source = n(j, s);
                    if (source == 0) continue;
                    const double psi = a * static_cast<double>(source) * h[t - s - 1];
                    if (!(psi > 0.0)) continue;
                    const std::int64_t y = nb_sample(psi, model.phi, rng);
                    if (y == 0) continue;
                    total += y;
                    if (!kept) continue;
                    if (s >= burn) {
                        triggered.push_back({i, t - burn, j, s - burn, static_cast<double>(y)});
                    } else {
                        yb += y;
                    }
                }
            }
            n(i, t) = total;
            if (kept) background(i, t - burn) = static_cast<double>(yb);
        }
    }

    std::sort(triggered.begin(), triggered.end(), [](const auto& a, const auto& b) {
        return std::tie(a.i, a.t, a.j, a.s) < std::tie(b.i, b.t, b.j, b.s);
    });

    Grid<std::int64_t> kept_counts(K, T, 0);
    for (std::size_t i = 0; i < K; ++i) {
        for (std::size_t t = 0; t < T; ++t) kept_counts(i, t) = n(i, t + burn);
    }
    result.counts = CountSeries(std::move(kept_counts));
    result.truth.mode = DecompositionMode::sampled;
    result.truth.background = std::move(background);
    result.truth.triggered = std::move(triggered);
    return result;
}

Eigen::MatrixXd sample_influence_matrix(std::size_t K, double mean, double shape,
                                        std::uint64_t seed) {
    if (K == 0) throw StructuralError("influence matrix needs at least one component");
    if (!(mean > 0.0) || !(shape > 0.0)) {
        throw std::domain_error("gamma mean and shape must be positive");
    }
    Rng rng(seed);
    const double scale = mean / shape;
    const auto k = static_cast<Eigen::Index>(K);
    Eigen::MatrixXd A(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j < k; ++j) A(i, j) = gamma_sample(shape, scale, rng);
    }
    return A;
}

} // namespace cascount

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cascount/grid.hpp"
#include "cascount/model.hpp"

namespace cascount {

enum class DecompositionMode { sampled, expected };

/// y^c_{itjs}: events at (i, t) attributed to the events at (j, s), s < t.
struct TriggeredEntry {
    std::size_t i;
    std::size_t t;
    std::size_t j;
    std::size_t s;
    double value;

    bool operator==(const TriggeredEntry&) const = default;
};

/// Latent split of every count into background and triggered parts.
///
/// Sampled decompositions hold integer values and list only nonzero
/// triggered entries; expected decompositions hold conditional means and
/// list every entry with a positive mean. Entries are sorted by (i, t, j, s).
struct CascadeDecomposition {
    DecompositionMode mode = DecompositionMode::sampled;
    Grid<double> background;
    std::vector<TriggeredEntry> triggered;

    [[nodiscard]] std::size_t K() const noexcept { return background.rows(); }
    [[nodiscard]] std::size_t T() const noexcept { return background.cols(); }

    /// background + triggered summed per (i, t).
    [[nodiscard]] Grid<double> totals() const;
};

struct SimulateOptions {
    /// Simulate 5 * t_max extra leading bins and discard them.
    bool burn_in = false;
};

struct SimulationResult {
    CascadeDecomposition truth;
    CountSeries counts;
    double spectral_radius = 0.0;
    /// Non-empty when the model is unstable; the draws are still valid.
    std::string warning;
};

/// Draws the complete data Y and counts N from the generative model.
///
/// Component i uses random stream Rng(seed, i), so results do not depend on
/// evaluation order across components. With burn-in, events in the kept
/// window that were triggered by discarded bins are reported as background.
[[nodiscard]] SimulationResult simulate(const ModelSpec& model, std::size_t T, std::uint64_t seed,
                                        const SimulateOptions& options = {});

/// K x K matrix of i.i.d. gamma entries with the given mean and shape.
[[nodiscard]] Eigen::MatrixXd sample_influence_matrix(std::size_t K, double mean, double shape,
                                                      std::uint64_t seed);

} // namespace cascount

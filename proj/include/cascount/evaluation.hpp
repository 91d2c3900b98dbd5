#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cascount/model.hpp"

namespace cascount {

/// Mean-squared error split into squared bias and variance; squared
/// parameter units. mse == bias_sq + variance up to rounding.
struct MseComponents {
    double mse = 0.0;
    double bias_sq = 0.0;
    double variance = 0.0;
};

/// Estimated (or true) values of the four parameter groups.
struct ParameterRecord {
    double phi = 0.0;
    double tau = 0.0;
    Eigen::VectorXd mu;
    Eigen::MatrixXd A;

    static ParameterRecord from_model(const ModelSpec& model);
};

struct MseReport {
    MseComponents phi;
    MseComponents tau;
    MseComponents mu;
    MseComponents A;
};

/// Euclidean-norm decomposition for flattened parameters against one truth.
[[nodiscard]] MseComponents mse_decomposition(const Eigen::VectorXd& truth,
                                              const std::vector<Eigen::VectorXd>& estimates);

/// Same decomposition applied to the errors estimate_k - truth_k, for
/// experiments where each repetition has its own true value. Reduces to the
/// single-truth form when all truths agree.
[[nodiscard]] MseComponents mse_decomposition(const std::vector<Eigen::VectorXd>& truths,
                                              const std::vector<Eigen::VectorXd>& estimates);

[[nodiscard]] MseReport mse_decomposition(const ParameterRecord& truth,
                                          const std::vector<ParameterRecord>& estimates);
[[nodiscard]] MseReport mse_decomposition(const std::vector<ParameterRecord>& truths,
                                          const std::vector<ParameterRecord>& estimates);

/// Right-continuous step points (value, fraction of sample <= value), one
/// per distinct value, ascending.
[[nodiscard]] std::vector<std::pair<double, double>> ecdf(std::vector<double> values);

/// Pairs of (k - 0.5) / n_quantiles empirical quantiles, k = 1..n_quantiles.
/// The empirical quantile at p is the smallest sample value whose ECDF is
/// at least p.
[[nodiscard]] std::vector<std::pair<double, double>> qq_points(std::vector<double> sample_a,
                                                               std::vector<double> sample_b,
                                                               std::size_t n_quantiles);

/// sup_x |F_a(x) - F_b(x)| between two empirical distributions.
[[nodiscard]] double ks_distance(std::vector<double> sample_a, std::vector<double> sample_b);

/// Sample Pearson correlation.
[[nodiscard]] double pearson_correlation(const std::vector<double>& x,
                                         const std::vector<double>& y);

struct ExperimentConfig {
    std::size_t K = 10;
    std::vector<std::size_t> T_grid = {250, 1000, 4000};
    std::vector<double> phi_grid = {1.0, 2.0, 3.0};
    std::size_t repetitions = 20;
    double mu = 5.0;
    double gamma_mean = 0.05;
    double gamma_shape = 0.4;
    double tau = 2.0;
    std::uint64_t base_seed = 1;
    bool burn_in = false;
    double gradient_tolerance = 1e-6;
    int max_iterations = 2000;
    std::size_t n_quantiles = 100;
    /// Parallelism across repetitions; results do not depend on it.
    std::size_t threads = 1;

    void validate() const;
};

struct SeedOutcome {
    std::size_t repetition = 0;
    std::uint64_t seed = 0;
    std::uint64_t matrix_seed = 0;
    bool converged = false;
    int iterations = 0;
    double log_likelihood = 0.0;
    double true_triggered = 0.0;
    double estimated_triggered = 0.0;
    ParameterRecord truth;
    ParameterRecord estimate;
};

struct CellReport {
    std::size_t T = 0;
    double phi = 0.0;
    std::vector<SeedOutcome> seeds;
    std::size_t included = 0;
    std::size_t excluded = 0;
    /// Over included seeds; NaN when fewer than two seeds are included.
    MseReport mse;
    /// Cascade sizes pooled over included seeds, in repetition order.
    std::vector<double> sizes_true;
    std::vector<double> sizes_estimated;
};

struct ExperimentReport {
    ExperimentConfig config;
    std::vector<CellReport> cells;

    [[nodiscard]] const CellReport* find(std::size_t T, double phi) const;
};

/// Seed of repetition `rep` in cell `cell`.
[[nodiscard]] std::uint64_t experiment_seed(std::uint64_t base_seed, std::size_t cell,
                                            std::size_t rep);

/// The gamma-sampled influence matrix used by every cell and repetition.
/// Draws with spectral radius >= 1 are redrawn.
[[nodiscard]] std::pair<Eigen::MatrixXd, std::uint64_t> experiment_matrix(
    const ExperimentConfig& config);

/// Simulates, fits and infers every (T, phi) cell for every repetition.
/// Cells are ordered phi-major, then by T.
[[nodiscard]] ExperimentReport run_experiment(const ExperimentConfig& config);

/// Writes mse.csv, scatter.csv, sizes_true.csv, sizes_est.csv, qq.csv and
/// gnuplot scripts into `directory` (created if missing).
void write_experiment_report(const ExperimentReport& report, const std::string& directory);

} // namespace cascount

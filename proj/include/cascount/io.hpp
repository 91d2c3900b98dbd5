#pragma once

#include <string>

#include <json.hpp>

#include "cascount/estimation.hpp"
#include "cascount/evaluation.hpp"
#include "cascount/model.hpp"
#include "cascount/simulator.hpp"

namespace cascount {

// File formats. Every reader reports malformed input as ParseError with
// the file name, line and column. Doubles are written with 17 significant
// digits so that every file re-reads to the identical value.

[[nodiscard]] std::string format_double(double value);

/// {"K", "mu", "A" (row-major rows), "phi", "kernel": {"kind", "tau"}}.
/// "t_max" is added to the kernel object only when it differs from the
/// default truncation rule.
[[nodiscard]] nlohmann::ordered_json model_to_json(const ModelSpec& model);
[[nodiscard]] ModelSpec model_from_json(const nlohmann::json& doc, const std::string& source);

[[nodiscard]] ModelSpec read_model(const std::string& path);
void write_model(const std::string& path, const ModelSpec& model);

/// Model document plus log_likelihood, iterations, converged,
/// gradient_norm and poisson.
[[nodiscard]] nlohmann::ordered_json fit_result_to_json(const FitResult& fit);
void write_fit_result(const std::string& path, const FitResult& fit);

/// Header "t,c1,...,cK"; one row per bin, t = 1, 2, ... contiguous.
[[nodiscard]] CountSeries parse_counts_csv(const std::string& text, const std::string& source);
[[nodiscard]] CountSeries read_counts_csv(const std::string& path);
[[nodiscard]] std::string format_counts_csv(const CountSeries& counts);
void write_counts_csv(const std::string& path, const CountSeries& counts);

/// Long format "i,t,j,s,count" (sampled) or "i,t,j,s,expected"; indices are
/// 1-based and background rows use j = 0, s = 0. Every (i, t) has a
/// background row, so K and T are recoverable from the file.
[[nodiscard]] std::string format_decomposition_csv(const CascadeDecomposition& decomposition);
[[nodiscard]] CascadeDecomposition parse_decomposition_csv(const std::string& text,
                                                           const std::string& source);
void write_decomposition_csv(const std::string& path, const CascadeDecomposition& decomposition);
[[nodiscard]] CascadeDecomposition read_decomposition_csv(const std::string& path);

/// K x T real grid, laid out like the counts file with header "s,c1,...".
void write_grid_csv(const std::string& path, const Grid<double>& grid);

[[nodiscard]] ExperimentConfig experiment_config_from_json(const nlohmann::json& doc,
                                                           const std::string& source);
[[nodiscard]] ExperimentConfig read_experiment_config(const std::string& path);

[[nodiscard]] std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

} // namespace cascount

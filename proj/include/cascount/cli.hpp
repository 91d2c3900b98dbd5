#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cascount/estimation.hpp"

namespace cascount {

enum class Subcommand { simulate, fit, infer, evaluate, stability };

struct SimulateArgs {
    std::string model;
    std::size_t T = 0;
    std::uint64_t seed = 0;
    std::string out;
    /// Optional ground-truth decomposition CSV.
    std::string truth;
    bool burn_in = false;
};

struct FitArgs {
    std::string counts;
    std::string out;
    std::optional<double> fix_tau;
    /// --poisson sets this to 0.
    std::optional<double> fix_phi;
    double tol = 1e-6;
    int max_iter = 2000;
    InitStrategy init = InitStrategy::moment;
};

struct InferArgs {
    std::string counts;
    std::string model;
    std::string out;
    /// Optional cascade-size grid CSV.
    std::string sizes;
    /// 0 writes the expected decomposition; N > 0 writes N sampled ones.
    std::size_t sample = 0;
    std::uint64_t seed = 0;
};

struct EvaluateArgs {
    std::string config;
    std::string out;
};

struct StabilityArgs {
    std::string model;
};

struct CliConfig {
    Subcommand subcommand = Subcommand::stability;
    std::size_t threads = 1;
    SimulateArgs simulate;
    FitArgs fit;
    InferArgs infer;
    EvaluateArgs evaluate;
    StabilityArgs stability;
};

/// Either a config, or a message with the exit status to return (2 for
/// usage errors, 0 for --help).
struct ParseOutcome {
    std::optional<CliConfig> config;
    std::string message;
    int exit_status = 0;
};

/// argv without the program name.
[[nodiscard]] ParseOutcome parse_args(const std::vector<std::string>& argv);

/// Runs the subcommand. Returns 0 on success and 1 on runtime failure, with
/// the diagnostic written to `err`.
[[nodiscard]] int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err);

/// parse_args followed by dispatch.
[[nodiscard]] int run_cli(const std::vector<std::string>& argv, std::ostream& out,
                          std::ostream& err);

/// Path of the k-th (1-based) sampled file: "dir/name.csv" -> "dir/name_k.csv".
[[nodiscard]] std::string numbered_path(const std::string& path, std::size_t k);

} // namespace cascount

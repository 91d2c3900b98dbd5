#pragma once

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cascount {

/// Returns f(x) and writes the gradient into grad. Non-finite values mark
/// x as infeasible; the line search then backtracks.
using Objective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& grad)>;

struct BoxLbfgsOptions {
    int max_iterations = 2000;
    /// Stop when ||projected gradient|| <= tolerance * ||projected gradient at x0||.
    double gradient_tolerance = 1e-6;
    int memory = 10;
    int max_line_search_steps = 60;
    double armijo = 1e-4;
};

struct BoxLbfgsResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
    bool converged = false;
    double projected_gradient_norm = 0.0;
    double initial_projected_gradient_norm = 0.0;
    /// Objective at x0 and after every accepted step.
    std::vector<double> history;
    std::string message;
};

/// Minimizes f over the box lower <= x <= upper (entries may be infinite).
///
/// Projected limited-memory BFGS: variables at a bound whose gradient
/// points outward are held fixed for the step, the quasi-Newton direction
/// is formed on the remaining ones, and an Armijo backtracking search runs
/// along the projected path. Accepted iterates never increase f.
[[nodiscard]] BoxLbfgsResult minimize_box(const Objective& f, Eigen::VectorXd x0,
                                          const Eigen::VectorXd& lower,
                                          const Eigen::VectorXd& upper,
                                          const BoxLbfgsOptions& options = {});

/// ||x - P(x - g)|| restricted to the box.
[[nodiscard]] double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                                             const Eigen::VectorXd& lower,
                                             const Eigen::VectorXd& upper);

} // namespace cascount

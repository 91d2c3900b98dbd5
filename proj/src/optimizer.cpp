#include "cascount/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>

namespace cascount {

namespace {

struct CorrectionPair {
    Eigen::VectorXd s;
    Eigen::VectorXd y;
};

Eigen::VectorXd project(Eigen::VectorXd x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
    return x.cwiseMax(lower).cwiseMin(upper);
}

// Two-loop recursion on the coordinates where free(k) is true.
Eigen::VectorXd lbfgs_direction(const Eigen::VectorXd& g, const std::deque<CorrectionPair>& pairs,
                                const Eigen::Array<bool, Eigen::Dynamic, 1>& free) {
    const Eigen::VectorXd mask = free.cast<double>().matrix();
    Eigen::VectorXd q = g.cwiseProduct(mask);
    std::vector<double> alpha(pairs.size(), 0.0);
    std::vector<double> rho(pairs.size(), 0.0);
    std::vector<bool> usable(pairs.size(), false);
    double gamma = 1.0;
    bool have_gamma = false;
    for (std::size_t k = pairs.size(); k-- > 0;) {
        const Eigen::VectorXd s = pairs[k].s.cwiseProduct(mask);
        const Eigen::VectorXd y = pairs[k].y.cwiseProduct(mask);
        const double sy = s.dot(y);
        if (!(sy > 1e-12 * s.norm() * y.norm()) || sy <= 0.0) continue;
        usable[k] = true;
        rho[k] = 1.0 / sy;
        alpha[k] = rho[k] * s.dot(q);
        q -= alpha[k] * y;
        if (!have_gamma) {
            gamma = sy / y.squaredNorm();
            have_gamma = true;
        }
    }
    Eigen::VectorXd r = gamma * q;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
        if (!usable[k]) continue;
        const Eigen::VectorXd s = pairs[k].s.cwiseProduct(mask);
        const Eigen::VectorXd y = pairs[k].y.cwiseProduct(mask);
        const double beta = rho[k] * y.dot(r);
        r += s * (alpha[k] - beta);
    }
    return -r;
}

} // namespace

double projected_gradient_norm(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
    return (x - project(x - g, lower, upper)).norm();
}

BoxLbfgsResult minimize_box(const Objective& f, Eigen::VectorXd x0, const Eigen::VectorXd& lower,
                            const Eigen::VectorXd& upper, const BoxLbfgsOptions& options) {
    const Eigen::Index n = x0.size();
    if (lower.size() != n || upper.size() != n) {
        throw std::invalid_argument("bound vectors must match the parameter dimension");
    }
    if ((lower.array() > upper.array()).any()) {
        throw std::invalid_argument("lower bound exceeds upper bound");
    }

    BoxLbfgsResult result;
    Eigen::VectorXd x = project(std::move(x0), lower, upper);
    Eigen::VectorXd g(n);
    double fx = f(x, g);
    result.evaluations = 1;
    if (!std::isfinite(fx) || !g.allFinite()) {
        result.x = x;
        result.value = fx;
        result.message = "objective is not finite at the starting point";
        return result;
    }
    result.history.push_back(fx);

    double pg_norm = projected_gradient_norm(x, g, lower, upper);
    result.initial_projected_gradient_norm = pg_norm;
    const double target = options.gradient_tolerance * pg_norm;

    std::deque<CorrectionPair> pairs;
    Eigen::VectorXd g_new(n);
    int iteration = 0;
    for (; iteration < options.max_iterations; ++iteration) {
        if (pg_norm <= target || pg_norm == 0.0) {
            result.converged = true;
            result.message = "projected gradient below tolerance";
            break;
        }

        // Variables within eps of a bound with the gradient pushing outward.
        const double eps = std::min(1e-8, pg_norm);
        Eigen::Array<bool, Eigen::Dynamic, 1> free(n);
        for (Eigen::Index k = 0; k < n; ++k) {
            const bool at_lower = x[k] <= lower[k] + eps && g[k] > 0.0;
            const bool at_upper = x[k] >= upper[k] - eps && g[k] < 0.0;
            free[k] = !(at_lower || at_upper);
        }

        bool accepted = false;
        for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
            Eigen::VectorXd d = lbfgs_direction(g, pairs, free);
            for (Eigen::Index k = 0; k < n; ++k) {
                if (!free[k]) d[k] = -g[k];
            }
            if (!(g.dot(d) < 0.0) || !d.allFinite()) {
                pairs.clear();
                d = -g;
            }
            double step = 1.0;
            if (pairs.empty()) step = std::min(1.0, 1.0 / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));

            for (int ls = 0; ls < options.max_line_search_steps; ++ls) {
                Eigen::VectorXd x_trial = project(x + step * d, lower, upper);
                const Eigen::VectorXd dx = x_trial - x;
                const double decrease = g.dot(dx);
                if (dx.lpNorm<Eigen::Infinity>() == 0.0) break;
                const double f_trial = f(x_trial, g_new);
                ++result.evaluations;
                if (std::isfinite(f_trial) && g_new.allFinite() &&
                    f_trial <= fx + options.armijo * decrease && f_trial <= fx) {
                    CorrectionPair pair{dx, g_new - g};
                    if (pair.s.dot(pair.y) > 1e-12 * pair.s.norm() * pair.y.norm()) {
                        pairs.push_back(std::move(pair));
                        if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
                    }
                    x = std::move(x_trial);
                    g = g_new;
                    fx = f_trial;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted) {
                if (pairs.empty()) break;
                pairs.clear();
            }
        }
        if (!accepted) {
            result.message = "line search failed to decrease the objective";
            break;
        }
        result.history.push_back(fx);
        pg_norm = projected_gradient_norm(x, g, lower, upper);
    }
    if (iteration >= options.max_iterations && !result.converged) {
        if (pg_norm <= target) {
            result.converged = true;
            result.message = "projected gradient below tolerance";
        } else {
            result.message = "iteration limit reached";
        }
    }

    result.x = std::move(x);
    result.value = fx;
    result.iterations = iteration;
    result.projected_gradient_norm = pg_norm;
    return result;
}

} // namespace cascount

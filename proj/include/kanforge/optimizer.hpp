#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kanforge/common.hpp"

namespace kf::lbfgs {

struct Options {
    int max_iters = 200;
    int history = 10;
    double grad_tol = 1e-7;   // two-norm of the gradient
    double c1 = 1e-4;         // Armijo sufficient decrease
    double c2 = 0.9;          // strong Wolfe curvature
    int max_line_search = 20; // evaluations per line search
};

// records for one accepted step, used to verify the Wolfe conditions
struct StepRecord {
    int iteration = 0;
    double alpha = 0.0;
    double f_before = 0.0;
    double f_after = 0.0;
    double dg_before = 0.0;  // directional derivative at alpha = 0
    double dg_after = 0.0;   // directional derivative at the accepted point
};

struct Result {
    std::vector<double> x;
    double f = 0.0;
    double grad_norm = 0.0;
    int iterations = 0;
    std::string stop_reason;  // converged | max_iters | line_search_failed
    std::vector<StepRecord> steps;
};

// objective(x, grad_out) -> f; grad_out has the same length as x
using Objective = std::function<double(std::span<const double>, std::span<double>)>;

// called after each accepted iteration
using IterCallback = std::function<void(int iter, std::span<const double> x, double f,
                                        double grad_norm)>;

// Two-loop recursion LBFGS with a strong Wolfe bracket-and-zoom line search.
// Non-finite trial values shrink the step instead of aborting; a failed
// search terminates with the best point found so far. Throws std::runtime_error
// if the objective is non-finite at the starting point.
Result minimize(const Objective& objective, std::vector<double> x0, const Options& opts,
                const IterCallback& callback = nullptr);

}  // namespace kf::lbfgs

#pragma once

#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace kpo {

// Returns f(x) and writes the gradient into g.
using GradientObjective = std::function<double(const Eigen::VectorXd& x, Eigen::VectorXd& g)>;

struct CgOptions {
    int max_iterations = 250;
    double target = -std::numeric_limits<double>::infinity();   // stop once f <= target
    double gradient_tol = 0.0;    // stop once ||g||_inf <= gradient_tol
    double armijo = 1e-4;
};

struct CgResult {
    Eigen::VectorXd x;
    double value = 0.0;
    int iterations = 0;
    int evaluations = 0;
};

// Polak-Ribiere nonlinear conjugate gradient (PR+ with periodic restart).
// Each line search tries the minimizer of a quadratic fit first and falls
// back to Armijo backtracking, so on quadratic objectives the method
// reduces to linear CG.
CgResult minimize_cg(const GradientObjective& f, Eigen::VectorXd x0, const CgOptions& opts = {});

} // namespace kpo

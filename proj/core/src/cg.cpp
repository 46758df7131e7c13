#include "kpo/cg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace kpo {

CgResult minimize_cg(const GradientObjective& f, Eigen::VectorXd x0, const CgOptions& opts) {
    CgResult out;
    out.x = std::move(x0);
    const auto n = out.x.size();
    Eigen::VectorXd g(n);
    double fx = f(out.x, g);
    out.evaluations = 1;
    out.value = fx;
    if (n == 0) return out;

    Eigen::VectorXd d = -g;
    Eigen::VectorXd x1(n), g1(n), xq(n), gq(n);
    int since_restart = 0;

    for (int it = 0; it < opts.max_iterations; ++it) {
        if (fx <= opts.target || g.cwiseAbs().maxCoeff() <= opts.gradient_tol) break;
        double gd = g.dot(d);
        if (!(gd < 0.0)) {
            d = -g;
            gd = -g.squaredNorm();
            since_restart = 0;
        }
        if (gd == 0.0) break;

        // For a least-squares objective with a zero floor the step 2f/|g.d|
        // is the exact minimizer along d; it is only a starting guess here.
        double a0 = fx > 0.0 ? 2.0 * fx / -gd : 1.0 / d.cwiseAbs().maxCoeff();
        a0 = std::min(a0, 1e3 / std::max(d.cwiseAbs().maxCoeff(), 1e-300));

        x1 = out.x + a0 * d;
        double f1 = f(x1, g1);
        ++out.evaluations;
        double best_a = a0, best_f = f1;
        bool best_is_q = false;

        const double curv = (f1 - fx - gd * a0) / (a0 * a0);
        if (curv > 0.0 && std::isfinite(curv)) {
            const double aq = -gd / (2.0 * curv);
            if (aq > 0.0 && aq <= 1e3 * a0 && std::abs(aq - a0) > 1e-12 * a0) {
                xq = out.x + aq * d;
                double fq = f(xq, gq);
                ++out.evaluations;
                if (fq < best_f) {
                    best_a = aq;
                    best_f = fq;
                    best_is_q = true;
                }
            }
        }

        bool accepted = std::isfinite(best_f) && best_f <= fx + opts.armijo * best_a * gd;
        if (accepted) {
            if (best_is_q) {
                x1.swap(xq);
                g1.swap(gq);
            }
            f1 = best_f;
        } else {
            double a = std::min(best_a, a0);
            for (int bt = 0; bt < 60 && !accepted; ++bt) {
                a *= 0.5;
                x1 = out.x + a * d;
                f1 = f(x1, g1);
                ++out.evaluations;
                accepted = std::isfinite(f1) && f1 <= fx + opts.armijo * a * gd;
            }
            if (!accepted) break;
        }

        const double decrease = fx - f1;
        // Polak-Ribiere with the non-negativity clamp, restart every n steps
        const double beta = std::max(0.0, g1.dot(g1 - g) / g.squaredNorm());
        out.x.swap(x1);
        g.swap(g1);
        fx = f1;
        out.value = fx;
        out.iterations = it + 1;
        if (++since_restart >= n) {
            d = -g;
            since_restart = 0;
        } else {
            d = -g + beta * d;
        }
        if (decrease <= 1e-16 * std::abs(fx)) break;
    }
    return out;
}

} // namespace kpo

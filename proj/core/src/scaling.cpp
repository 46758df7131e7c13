#include "kpo/scaling.hpp"

#include <cmath>

#include "kpo/errors.hpp"

namespace kpo {

void HardwareLimits::validate() const {
    if (!(g_max > 0.0) || !(delta_max > 0.0) || !std::isfinite(g_max) || !std::isfinite(delta_max))
        throw InvalidInput("hardware limits must be positive");
}

const char* to_string(LimitingConstraint c) {
    return c == LimitingConstraint::CouplingLimited ? "coupling" : "bandwidth";
}

double typical_frame_detuning(int n, ProblemClass cls, double lambda_c_tilde) {
    switch (cls) {
    case ProblemClass::DenseMaxCut: return lambda_c_tilde * (n - 1) * 0.5;
    case ProblemClass::CubicMaxCut: return lambda_c_tilde * 3.0;
    default: return lambda_c_tilde * (n - 1) * 4.0 / 7.0;
    }
}

ClassScalingParams class_scaling_params(int n, ProblemClass cls, const Tolerances& tol) {
    const double lc = lambda_c_tilde(n, cls);
    ClassScalingParams p;
    const double eta = eta_prescription(n, cls);
    p.lambda_j_tilde = lc / eta;
    Eigen::VectorXd delta = Eigen::VectorXd::Constant(1, typical_frame_detuning(n, cls, lc));
    p.lambda_big_tilde = floquet_frequency(tol.a_factor, delta, 5.0, p.lambda_j_tilde);
    const double dw = delta_omega_bound(n, cls, eta, p.lambda_big_tilde);
    p.d = filling_ratio(n, tol, p.lambda_big_tilde, p.lambda_j_tilde, dw);
    return p;
}

double chi_coupling_branch(int n, const ClassScalingParams& p, double g_max) {
    return g_max * std::sqrt(2.0 * p.d / (p.lambda_big_tilde * p.lambda_j_tilde * (n - 1.0)));
}

double chi_bandwidth_branch(int n, const ClassScalingParams& p, double delta_max) {
    return delta_max * p.d / ((n - 1.0) * p.lambda_big_tilde);
}

namespace {

ScalingPoint evaluate(int n, const ClassScalingParams& params, const HardwareLimits& limits, double kappa_ratio) {
    limits.validate();
    if (!(kappa_ratio > 0.0)) throw InvalidInput("kappa ratio must be positive");
    ScalingPoint pt;
    pt.n = n;
    pt.g_max = limits.g_max;
    pt.delta_max = limits.delta_max;
    pt.params = params;
    pt.chi_coupling = chi_coupling_branch(n, pt.params, limits.g_max);
    pt.chi_bandwidth = chi_bandwidth_branch(n, pt.params, limits.delta_max);
    if (pt.chi_coupling <= pt.chi_bandwidth) {
        pt.chi_max = pt.chi_coupling;
        pt.limiting = LimitingConstraint::CouplingLimited;
    } else {
        pt.chi_max = pt.chi_bandwidth;
        pt.limiting = LimitingConstraint::BandwidthLimited;
    }
    pt.t_cav_min = 1.0 / (2.0 * kappa_ratio * pt.chi_max);
    return pt;
}

} // namespace

ScalingPoint chi_max(int n, ProblemClass cls, const HardwareLimits& limits, const Tolerances& tol,
                     double kappa_ratio) {
    limits.validate();
    if (n < 2) throw InvalidInput("need at least two oscillators");
    return evaluate(n, class_scaling_params(n, cls, tol), limits, kappa_ratio);
}

ScalingPoint chi_max(const AnnealerParams& p, const HardwareLimits& limits, double kappa_ratio) {
    return evaluate(p.n(), ClassScalingParams{p.lambda_j_tilde, p.lambda_big_tilde, p.d}, limits, kappa_ratio);
}

double asymptotic_chi(int n, ProblemClass cls, LimitingConstraint regime) {
    const double base = regime == LimitingConstraint::CouplingLimited ? 1.0 / std::sqrt(double(n)) : 1.0 / n;
    if (cls == ProblemClass::DenseMaxCut || cls == ProblemClass::CubicMaxCut)
        return base / (1.0 + std::log(double(n)));
    return base;
}

std::vector<ScalingPoint> sweep(const std::vector<int>& n_grid, const std::vector<double>& axis_grid,
                                SweepAxis axis, double fixed_other, ProblemClass cls, const Tolerances& tol,
                                double kappa_ratio) {
    std::vector<ScalingPoint> out;
    out.reserve(n_grid.size() * axis_grid.size());
    for (double v : axis_grid) {
        HardwareLimits lim = axis == SweepAxis::GMax ? HardwareLimits{v, fixed_other} : HardwareLimits{fixed_other, v};
        for (int n : n_grid) out.push_back(chi_max(n, cls, lim, tol, kappa_ratio));
    }
    return out;
}

} // namespace kpo

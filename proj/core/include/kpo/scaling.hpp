#pragma once

#include <vector>

#include "kpo/ising.hpp"
#include "kpo/prescription.hpp"

namespace kpo {

// Angular frequencies in rad/s.
struct HardwareLimits {
    double g_max = 0.0;
    double delta_max = 0.0;
    void validate() const;
};

enum class LimitingConstraint { CouplingLimited, BandwidthLimited };
const char* to_string(LimitingConstraint c);

// Class-level dimensionless quantities chi_max depends on.
struct ClassScalingParams {
    double lambda_j_tilde = 0.0;
    double lambda_big_tilde = 0.0;
    double d = 0.0;
};

struct ScalingPoint {
    int n = 0;
    double g_max = 0.0;
    double delta_max = 0.0;
    double chi_coupling = 0.0;     // g_max branch
    double chi_bandwidth = 0.0;    // delta_max branch
    double chi_max = 0.0;
    double t_cav_min = 0.0;        // seconds
    LimitingConstraint limiting = LimitingConstraint::CouplingLimited;
    ClassScalingParams params;
};

// Typical frame detuning for the class, lambda_c * (N-1) * E|C_ij|.
double typical_frame_detuning(int n, ProblemClass cls, double lambda_c_tilde);
ClassScalingParams class_scaling_params(int n, ProblemClass cls, const Tolerances& tol = {});

double chi_coupling_branch(int n, const ClassScalingParams& p, double g_max);
double chi_bandwidth_branch(int n, const ClassScalingParams& p, double delta_max);

// kappa_ratio = kappa / chi; the cavity lifetime is 1/(2 kappa).
ScalingPoint chi_max(int n, ProblemClass cls, const HardwareLimits& limits, const Tolerances& tol = {},
                     double kappa_ratio = 0.1);

// Same constraints evaluated on a concrete parameter bundle.
ScalingPoint chi_max(const AnnealerParams& p, const HardwareLimits& limits, double kappa_ratio = 0.1);

// Large-N shape of chi_max up to a constant.
double asymptotic_chi(int n, ProblemClass cls, LimitingConstraint regime);

enum class SweepAxis { GMax, DeltaMax };

// Row-major over (axis value, n).
std::vector<ScalingPoint> sweep(const std::vector<int>& n_grid, const std::vector<double>& axis_grid,
                                SweepAxis axis, double fixed_other, ProblemClass cls,
                                const Tolerances& tol = {}, double kappa_ratio = 0.1);

} // namespace kpo

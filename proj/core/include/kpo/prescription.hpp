#pragma once

#include <optional>

#include <Eigen/Dense>

#include "kpo/floquet.hpp"
#include "kpo/ising.hpp"

namespace kpo {

// Everything below is dimensionless, in units of the Kerr rate chi.

struct Tolerances {
    double eps_sw = 0.1;
    double eps_ti = 0.1;
    double eps_uni = 0.1;
    double a_factor = 100.0;    // Floquet multiplier A

    static Tolerances quantum() { return {}; }
    static Tolerances classical() { return {0.1, 0.1, 0.1, 200.0}; }
    void validate() const;
};

// FillingRatio places the first detuning at (1-d)/d (N-1) Lambda so that
// d = (Delta_N - Delta_1) / Delta_N holds. Printed uses d/(1-d) instead; the
// two agree only at d = 1/2.
enum class DetuningForm { FillingRatio, Printed };

// Loss-tuned replacements for the prescribed static parameters.
struct PrescriptionOverrides {
    std::optional<double> lambda_c_tilde;
    std::optional<double> r_max_tilde;
    std::optional<double> t_ramp_tilde;
    std::optional<double> eta;
    double kappa_tilde = 0.0;
    DetuningForm detuning_form = DetuningForm::FillingRatio;
};

// Hand-tuned static annealer settings for small quantum runs.
struct StaticPreset {
    int n;
    double kappa_tilde;
    double lambda_c_tilde;
    double t_ramp_tilde;
    double r_max_tilde;
};
const std::vector<StaticPreset>& static_presets();
std::optional<PrescriptionOverrides> preset_overrides(int n, double kappa_tilde);

enum class BandwidthEstimate { ClosedForm, InstanceExact };

struct AnnealerParams {
    ProblemClass problem_class = ProblemClass::Custom;
    double lambda_c_tilde = 0.0;
    double r_max_tilde = 5.0;
    double eta = 0.0;
    double lambda_j_tilde = 0.0;
    double lambda_big_tilde = 0.0;          // Floquet frequency
    double d = 0.0;                         // filling ratio
    Eigen::VectorXd delta_tilde;            // frame detunings
    double delta_omega_bound_tilde = 0.0;
    Eigen::VectorXd delta_nom_tilde;
    Eigen::VectorXd g_tilde;
    Eigen::MatrixXd j_tilde;
    double kappa_tilde = 0.0;
    double t_ramp_tilde = 100.0;
    double a_factor = 100.0;
    DetuningForm detuning_form = DetuningForm::FillingRatio;

    int n() const { return static_cast<int>(delta_tilde.size()); }
    // Throws InvalidInput if any structural invariant is broken.
    void validate() const;
};

double lambda_c_tilde(int n, ProblemClass cls);
Eigen::VectorXd frame_detunings(const CouplingMatrix& c, double lambda_c_tilde);
double floquet_frequency(double a_factor, const Eigen::VectorXd& delta_tilde, double r_max_tilde,
                         double lambda_j_tilde);

double delta_omega_bound(int n, ProblemClass cls, double eta, double lambda_big_tilde);
// Lambda * sum_k k |f_1^(k)| for an actual modulation matrix (oscillator 1).
double delta_omega_bound_exact(const ModulationMatrix& f, double lambda_big_tilde);

double uniformity_limit(double eps_uni);
double filling_ratio(int n, const Tolerances& tol, double lambda_big_tilde, double lambda_j_tilde,
                     double delta_omega_bound_tilde);
Eigen::VectorXd nominal_detunings(int n, double d, double lambda_big_tilde,
                                  DetuningForm form = DetuningForm::FillingRatio);
Eigen::VectorXd bus_couplings(const Eigen::VectorXd& delta_nom, double lambda_j_tilde);
Eigen::MatrixXd native_couplings(const Eigen::VectorXd& delta_nom, double lambda_j_tilde);

// (2-d)/(2 sqrt(1-d)) - 1
double non_uniformity(double d);
// max_{i != j} J_ij / lambda_J - 1
double native_non_uniformity(const Eigen::MatrixXd& j, double lambda_j_tilde);

double t_ramp(double kappa_tilde);

AnnealerParams prescribe(const CouplingMatrix& c, ProblemClass cls, const Tolerances& tol = {},
                         const PrescriptionOverrides& over = {},
                         BandwidthEstimate bw = BandwidthEstimate::ClosedForm);
inline AnnealerParams prescribe(const CouplingMatrix& c, const Tolerances& tol = {})
{
    return prescribe(c, c.problem_class(), tol);
}

// The design problem solved in the last step: lambda_c over the nominal J.
DesignProblem design_problem(const CouplingMatrix& c, const AnnealerParams& p);

} // namespace kpo

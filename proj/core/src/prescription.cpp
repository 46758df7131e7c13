#include "kpo/prescription.hpp"

#include <algorithm>
#include <cmath>

#include "kpo/errors.hpp"

namespace kpo {

namespace {

bool close(double a, double b, double rel = 1e-9) {
    return std::abs(a - b) <= rel * std::max({1.0, std::abs(a), std::abs(b)});
}

void require_positive(double x, const char* what) {
    if (!(x > 0.0) || !std::isfinite(x)) throw InvalidInput(std::string(what) + " must be positive and finite");
}

} // namespace

void Tolerances::validate() const {
    require_positive(eps_sw, "eps_sw");
    require_positive(eps_ti, "eps_ti");
    require_positive(eps_uni, "eps_uni");
    require_positive(a_factor, "A");
}

const std::vector<StaticPreset>& static_presets() {
    // tuned on the static annealer; rows copied as published
    static const std::vector<StaticPreset> rows = {
        {2, 0.0, 2.0, 100.0, 5.0},
        {4, 0.0, 1.0, 100.0, 5.0},
        {4, 0.1, 1.0, 25.0, 4.5},
        {4, 0.01, 1.0, 5.0, 4.0},
    };
    return rows;
}

std::optional<PrescriptionOverrides> preset_overrides(int n, double kappa_tilde) {
    for (const auto& r : static_presets()) {
        if (r.n == n && std::abs(r.kappa_tilde - kappa_tilde) < 1e-12) {
            PrescriptionOverrides o;
            o.lambda_c_tilde = r.lambda_c_tilde;
            o.t_ramp_tilde = r.t_ramp_tilde;
            o.r_max_tilde = r.r_max_tilde;
            o.kappa_tilde = r.kappa_tilde;
            return o;
        }
    }
    return std::nullopt;
}

double lambda_c_tilde(int n, ProblemClass cls) {
    if (n < 2) throw InvalidInput("need at least two spins");
    switch (cls) {
    case ProblemClass::DenseMaxCut: return 8.0 / n;
    case ProblemClass::CubicMaxCut: return 2.0;
    default: return 4.0 / n;
    }
}

Eigen::VectorXd frame_detunings(const CouplingMatrix& c, double lambda_c_tilde) {
    return lambda_c_tilde * c.entries().cwiseAbs().rowwise().sum();
}

double floquet_frequency(double a_factor, const Eigen::VectorXd& delta_tilde, double r_max_tilde,
                         double lambda_j_tilde) {
    double m = std::max({1.0, r_max_tilde, lambda_j_tilde});
    if (delta_tilde.size() > 0) m = std::max(m, delta_tilde.maxCoeff());
    return a_factor * m;
}

double delta_omega_bound(int n, ProblemClass cls, double eta, double lambda_big_tilde) {
    if (n < 2) throw InvalidInput("need at least two spins");
    const double m = n - 1.0;
    switch (cls) {
    case ProblemClass::DenseMaxCut: return 0.5 * eta * lambda_big_tilde * m * m;
    case ProblemClass::CubicMaxCut: return 3.0 * eta * lambda_big_tilde * m * m / n;
    default: return eta * lambda_big_tilde * std::pow(m, 1.5);
    }
}

double delta_omega_bound_exact(const ModulationMatrix& f, double lambda_big_tilde) {
    double s = 0.0;
    for (int k = 1; k <= f.cols(); ++k) s += k * std::abs(f(0, k - 1));
    return lambda_big_tilde * s;
}

double uniformity_limit(double eps_uni) {
    const double a = 1.0 + std::sqrt((1.0 + eps_uni) * (1.0 + eps_uni) - 1.0) + eps_uni;
    return 1.0 - 1.0 / (a * a);
}

double filling_ratio(int n, const Tolerances& tol, double lambda_big_tilde, double lambda_j_tilde,
                     double delta_omega_bound_tilde) {
    tol.validate();
    const double m = n - 1.0;
    const double d_sw = 2.0 * tol.eps_sw * tol.eps_sw * m * lambda_big_tilde / lambda_j_tilde;
    double d = std::min(d_sw / (1.0 + d_sw), uniformity_limit(tol.eps_uni));
    if (delta_omega_bound_tilde > 0.0) {
        const double d_ti = tol.eps_ti * m * lambda_big_tilde / delta_omega_bound_tilde;
        d = std::min(d, d_ti / (1.0 + d_ti));
    }
    return d;
}

Eigen::VectorXd nominal_detunings(int n, double d, double lambda_big_tilde, DetuningForm form) {
    if (!(d > 0.0 && d < 1.0)) throw InvalidInput("filling ratio must lie in (0, 1)");
    Eigen::VectorXd out(n);
    const double ratio = form == DetuningForm::Printed ? d / (1.0 - d) : (1.0 - d) / d;
    const double base = ratio * (n - 1.0);
    for (int i = 0; i < n; ++i) out(i) = lambda_big_tilde * (base + i);
    return out;
}

Eigen::VectorXd bus_couplings(const Eigen::VectorXd& delta_nom, double lambda_j_tilde) {
    return (delta_nom * lambda_j_tilde).cwiseSqrt();
}

Eigen::MatrixXd native_couplings(const Eigen::VectorXd& delta_nom, double lambda_j_tilde) {
    const Eigen::Index n = delta_nom.size();
    Eigen::MatrixXd j(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            j(a, b) = 0.5 * lambda_j_tilde * (delta_nom(a) + delta_nom(b)) / std::sqrt(delta_nom(a) * delta_nom(b));
    return j;
}

double non_uniformity(double d) {
    return (2.0 - d) / (2.0 * std::sqrt(1.0 - d)) - 1.0;
}

double native_non_uniformity(const Eigen::MatrixXd& j, double lambda_j_tilde) {
    double worst = 0.0;
    for (Eigen::Index a = 0; a < j.rows(); ++a)
        for (Eigen::Index b = 0; b < j.cols(); ++b)
            if (a != b) worst = std::max(worst, j(a, b) / lambda_j_tilde - 1.0);
    return worst;
}

double t_ramp(double kappa_tilde) {
    if (!(kappa_tilde >= 0.0)) throw InvalidInput("kappa must be non-negative");
    if (kappa_tilde == 0.0) return 100.0;
    return std::min(1.0 / kappa_tilde, 100.0);
}

void AnnealerParams::validate() const {
    const int m = n();
    if (m < 2) throw InvalidInput("parameter bundle needs at least two oscillators");
    if (delta_nom_tilde.size() != m || g_tilde.size() != m || j_tilde.rows() != m || j_tilde.cols() != m)
        throw InvalidInput("parameter vectors disagree in length");
    if (!(d > 0.0 && d < 1.0)) throw InvalidInput("filling ratio outside (0, 1)");
    require_positive(lambda_c_tilde, "lambda_c");
    require_positive(eta, "eta");
    require_positive(lambda_big_tilde, "Lambda");
    require_positive(r_max_tilde, "r_max");
    require_positive(t_ramp_tilde, "T_ramp");
    require_positive(a_factor, "A");
    if (!(kappa_tilde >= 0.0 && std::isfinite(kappa_tilde))) throw InvalidInput("kappa must be non-negative");
    if (!delta_tilde.allFinite()) throw InvalidInput("frame detunings must be finite");
    if (!close(lambda_j_tilde, lambda_c_tilde / eta)) throw InvalidInput("lambda_J != lambda_C / eta");
    if (!(delta_nom_tilde(0) > 0.0)) throw InvalidInput("nominal detunings must be positive");
    for (int i = 1; i < m; ++i)
        if (!close(delta_nom_tilde(i) - delta_nom_tilde(i - 1), lambda_big_tilde))
            throw InvalidInput("nominal detunings must be spaced by Lambda");
    for (int i = 0; i < m; ++i)
        if (!close(g_tilde(i), std::sqrt(delta_nom_tilde(i) * lambda_j_tilde)))
            throw InvalidInput("bus coupling inconsistent with nominal detuning");
    if (!j_tilde.isApprox(native_couplings(delta_nom_tilde, lambda_j_tilde), 1e-9))
        throw InvalidInput("native couplings inconsistent with nominal detunings");
}

AnnealerParams prescribe(const CouplingMatrix& c, ProblemClass cls, const Tolerances& tol,
                         const PrescriptionOverrides& over, BandwidthEstimate bw) {
    tol.validate();
    const int n = c.n();
    AnnealerParams p;
    p.problem_class = cls;
    p.a_factor = tol.a_factor;
    p.kappa_tilde = over.kappa_tilde;
    p.lambda_c_tilde = over.lambda_c_tilde.value_or(lambda_c_tilde(n, cls));
    p.r_max_tilde = over.r_max_tilde.value_or(5.0);
    require_positive(p.lambda_c_tilde, "lambda_c");
    require_positive(p.r_max_tilde, "r_max");
    p.delta_tilde = frame_detunings(c, p.lambda_c_tilde);
    p.eta = over.eta.value_or(eta_prescription(n, cls));
    require_positive(p.eta, "eta");
    p.lambda_j_tilde = p.lambda_c_tilde / p.eta;
    p.lambda_big_tilde = floquet_frequency(tol.a_factor, p.delta_tilde, p.r_max_tilde, p.lambda_j_tilde);
    if (bw == BandwidthEstimate::InstanceExact) {
        DesignProblem uniform(c, p.lambda_c_tilde, uniform_native(n, p.lambda_j_tilde));
        p.delta_omega_bound_tilde = delta_omega_bound_exact(first_order_solution(uniform), p.lambda_big_tilde);
    } else {
        p.delta_omega_bound_tilde = delta_omega_bound(n, cls, p.eta, p.lambda_big_tilde);
    }
    p.d = filling_ratio(n, tol, p.lambda_big_tilde, p.lambda_j_tilde, p.delta_omega_bound_tilde);
    p.detuning_form = over.detuning_form;
    p.delta_nom_tilde = nominal_detunings(n, p.d, p.lambda_big_tilde, p.detuning_form);
    p.g_tilde = bus_couplings(p.delta_nom_tilde, p.lambda_j_tilde);
    p.j_tilde = native_couplings(p.delta_nom_tilde, p.lambda_j_tilde);
    p.t_ramp_tilde = over.t_ramp_tilde.value_or(t_ramp(over.kappa_tilde));
    require_positive(p.t_ramp_tilde, "T_ramp");
    return p;
}

DesignProblem design_problem(const CouplingMatrix& c, const AnnealerParams& p) {
    if (c.n() != p.n()) throw InvalidInput("instance and parameters disagree in size");
    return DesignProblem(c, p.lambda_c_tilde, p.j_tilde);
}

} // namespace kpo

#include "kpo/floquet.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "kpo/errors.hpp"

namespace kpo {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_index(int n, int i, const char* what) {
    if (i < 0 || i >= n) throw InvalidInput(std::string(what) + " index out of range");
}

} // namespace

DesignProblem::DesignProblem(Eigen::MatrixXd c_, double lambda_c_, Eigen::MatrixXd j_)
    : c(std::move(c_)), lambda_c(lambda_c_), j(std::move(j_)) {
    const auto n = c.rows();
    if (n < 2 || c.cols() != n) throw InvalidInput("design problem needs a square coupling matrix with n >= 2");
    if (j.rows() != n || j.cols() != n) throw InvalidInput("native coupling matrix shape mismatch");
    if (!(lambda_c > 0.0) || !std::isfinite(lambda_c)) throw InvalidInput("lambda_c must be positive");
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b) {
            if (a == b) continue;
            if (!(j(a, b) > 0.0) || !std::isfinite(j(a, b)))
                throw InvalidInput("native couplings must be positive off the diagonal");
            if (j(a, b) != j(b, a) || c(a, b) != c(b, a)) throw InvalidInput("design matrices must be symmetric");
        }
}

double DesignProblem::eta() const {
    const int m = n();
    const double mean_j = (j.sum() - j.trace()) / (static_cast<double>(m) * (m - 1));
    return lambda_c / mean_j;
}

Eigen::MatrixXd uniform_native(int n, double lambda_j) {
    Eigen::MatrixXd j = Eigen::MatrixXd::Constant(n, n, lambda_j);
    j.diagonal().setZero();
    return j;
}

std::string to_string(DesignMethod m) {
    switch (m) {
    case DesignMethod::FirstOrder: return "first_order";
    case DesignMethod::SecondOrder: return "second_order";
    case DesignMethod::FullOrder: return "full_order";
    }
    return "first_order";
}

DesignMode parse_design_mode(const std::string& s) {
    if (s == "auto") return DesignMode::Auto;
    if (s == "full" || s == "full_order") return DesignMode::FullOrder;
    if (s == "second" || s == "second_order") return DesignMode::SecondOrder;
    throw InvalidInput("unknown design mode '" + s + "'");
}

DesignMethod parse_design_method(const std::string& s) {
    if (s == "first_order") return DesignMethod::FirstOrder;
    if (s == "second_order") return DesignMethod::SecondOrder;
    if (s == "full_order") return DesignMethod::FullOrder;
    throw InvalidInput("unknown design method '" + s + "'");
}

int default_samples(int n) { return std::max(256, 16 * n); }

double floquet_integral(const Eigen::MatrixXd& j, const ModulationMatrix& f, int i, int jx, int samples) {
    const int n = static_cast<int>(f.rows());
    require_index(n, i, "oscillator");
    require_index(n, jx, "oscillator");
    if (i == jx) throw InvalidInput("floquet integral needs two distinct oscillators");
    if (samples < 8 * n) throw InvalidInput("floquet integral needs at least 8n samples");

    Eigen::VectorXd diff = (f.row(i) - f.row(jx)).transpose();
    Eigen::VectorXd table(samples);
    for (int s = 0; s < samples; ++s) table(s) = std::sin(kTwoPi * s / samples);

    // uniform trapezoid on a periodic integrand: plain mean over the grid
    double acc = 0.0;
    const long d = i - jx;
    for (int s = 0; s < samples; ++s) {
        double phase = kTwoPi * static_cast<double>(((d * s) % samples + samples) % samples) / samples;
        for (int k = 1; k < n; ++k) phase += diff(k - 1) * table((static_cast<long>(k) * s) % samples);
        acc += std::cos(phase);
    }
    return j(i, jx) * acc / samples;
}

Eigen::MatrixXd effective_couplings(const DesignProblem& prob, const ModulationMatrix& f, int samples) {
    const int n = prob.n();
    if (f.rows() != n || f.cols() != n - 1) throw InvalidInput("modulation matrix shape mismatch");
    if (samples <= 0) samples = default_samples(n);
    if (samples < 8 * n) throw InvalidInput("effective couplings need at least 8n samples");

    // avg cos(P_i - P_j) = avg(cos P_i cos P_j + sin P_i sin P_j) with
    // P_i(t) = i t + sum_k F_i^k sin(kt); accumulate X X^T blockwise.
    Eigen::VectorXd table(samples);
    for (int s = 0; s < samples; ++s) table(s) = std::sin(kTwoPi * s / samples);

    const int block = std::min(samples, 512);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd sines(n - 1, block), phase(n, block), x(n, 2 * block);
    for (int s0 = 0; s0 < samples; s0 += block) {
        const int b = std::min(block, samples - s0);
        for (int c = 0; c < b; ++c) {
            const long s = s0 + c;
            for (int k = 1; k < n; ++k) sines(k - 1, c) = table((k * s) % samples);
        }
        phase.leftCols(b).noalias() = f * sines.leftCols(b);
        for (int c = 0; c < b; ++c) {
            const long s = s0 + c;
            for (int i = 0; i < n; ++i) phase(i, c) += kTwoPi * static_cast<double>((i * s) % samples) / samples;
        }
        x.leftCols(b) = phase.leftCols(b).array().cos();
        x.middleCols(b, b) = phase.leftCols(b).array().sin();
        gram.selfadjointView<Eigen::Lower>().rankUpdate(x.leftCols(2 * b));
    }
    Eigen::MatrixXd out(n, n);
    for (int a = 0; a < n; ++a) {
        out(a, a) = 0.0;
        for (int b = 0; b < a; ++b) {
            const double v = prob.j(a, b) * gram(a, b) / samples / prob.lambda_c;
            out(a, b) = out(b, a) = v;
        }
    }
    return out;
}

double coupling_error(const Eigen::MatrixXd& c_eff, const Eigen::MatrixXd& c) {
    if (c_eff.rows() != c.rows() || c_eff.cols() != c.cols()) throw InvalidInput("coupling error shape mismatch");
    double worst = 0.0;
    for (Eigen::Index a = 0; a < c.rows(); ++a)
        for (Eigen::Index b = 0; b < c.cols(); ++b)
            if (a != b) worst = std::max(worst, std::abs(c_eff(a, b) - c(a, b)));
    return worst;
}

Eigen::VectorXd column_free_variables(const ModulationMatrix& f, int k) {
    const int n = static_cast<int>(f.rows());
    if (k < 1 || k >= n) throw InvalidInput("harmonic index out of range");
    return f.col(k - 1).head(n - k);
}

void set_column(ModulationMatrix& f, int k, const Eigen::VectorXd& free) {
    const int n = static_cast<int>(f.rows());
    if (k < 1 || k >= n) throw InvalidInput("harmonic index out of range");
    if (free.size() != n - k) throw InvalidInput("column parameter count must be n - k");
    auto col = f.col(k - 1);
    col.head(n - k) = free;
    for (int p = n - k; p < n; ++p) col(p) = p >= k ? -free(p % k) : 0.0;
}

ModulationMatrix first_order_solution(const DesignProblem& prob) {
    const int n = prob.n();
    ModulationMatrix f = ModulationMatrix::Zero(n, n - 1);
    Eigen::VectorXd x, c;
    for (int k = 1; k < n; ++k) {
        const int m = n - k;
        c.resize(m);
        for (int j = 0; j < m; ++j) c(j) = prob.lambda_c * prob.c(j + k, j) / prob.j(j + k, j);
        x.setZero(m);
        // chain heads carry half the chain sum so that the mirrored tail closes the chain
        for (int r = 0; r < std::min(k, m); ++r)
            for (int p = r; p < m; p += k) x(r) += c(p);
        for (int p = k; p < m; ++p) x(p) = x(p - k) - 2.0 * c(p - k);
        set_column(f, k, x);
    }
    return f;
}

double first_order_residual(const DesignProblem& prob, const ModulationMatrix& f, int i, int j) {
    if (i <= j) throw InvalidInput("first-order residual defined for i > j");
    const int k = i - j;
    return prob.lambda_c * prob.c(i, j) + 0.5 * prob.j(i, j) * (f(i, k - 1) - f(j, k - 1));
}

double second_order_residual(const DesignProblem& prob, const ModulationMatrix& f, int i, int j) {
    const int n = prob.n();
    require_index(n, i, "oscillator");
    require_index(n, j, "oscillator");
    if (i <= j) throw InvalidInput("second-order residual defined for i > j");
    const int d = i - j;
    auto delta = [&](int l) { return f(i, l - 1) - f(j, l - 1); };
    double rhs = -0.5 * delta(d);
    for (int l = 1; l + d <= n - 1; ++l) rhs -= 0.25 * delta(l) * delta(l + d);
    for (int l = 1; l <= d - 1; ++l) rhs += 0.125 * delta(l) * delta(d - l);
    return prob.lambda_c * prob.c(i, j) / prob.j(i, j) - rhs;
}

DesignSolution evaluate_design(const DesignProblem& prob, const ModulationMatrix& f, DesignMethod method,
                               int samples) {
    DesignSolution out;
    out.f = f;
    out.c_eff = effective_couplings(prob, f, samples);
    out.error = coupling_error(out.c_eff, prob.c);
    out.modulation_depth = modulation_depth(f);
    out.method = method;
    return out;
}

double modulation_depth(const ModulationMatrix& f) {
    if (f.rows() == 0 || f.cols() == 0) return 0.0;
    return 2.0 * f.row(0).cwiseAbs().sum();
}

namespace {

void require_n(int n) {
    if (n < 2) throw InvalidInput("problem size must be at least 2");
}

} // namespace

// Custom instances fall back to the SK7 forms.
double eta_prescription(int n, ProblemClass cls) {
    require_n(n);
    const double log_factor = 1.0 + std::log(static_cast<double>(n));
    switch (cls) {
    case ProblemClass::DenseMaxCut: return 1.2 / (n * log_factor);
    case ProblemClass::CubicMaxCut: return 0.12 / log_factor;
    default: return 0.8 / n;
    }
}

double eta_bound(int n, ProblemClass cls, double zeta_max) {
    require_n(n);
    if (!(zeta_max > 0.0)) throw InvalidInput("zeta_max must be positive");
    const double log_factor = 1.0 + std::log(static_cast<double>(n));
    switch (cls) {
    case ProblemClass::DenseMaxCut: return zeta_max / (n * log_factor);
    case ProblemClass::CubicMaxCut: return zeta_max / (6.0 * log_factor);
    default: return zeta_max / (2.0 * n);
    }
}

double mean_f1k_magnitude(int n, int k, ProblemClass cls, double eta) {
    require_n(n);
    if (k < 1 || k > n - 1) throw InvalidInput("harmonic index must lie in 1..n-1");
    switch (cls) {
    case ProblemClass::DenseMaxCut: return 0.5 * eta * (n - 1.0) / k;
    case ProblemClass::CubicMaxCut: return 3.0 * eta * (n - 1.0) / (static_cast<double>(n) * k);
    default: return 0.5 * eta * std::sqrt(n - 1.0) / std::sqrt(static_cast<double>(k));
    }
}

} // namespace kpo

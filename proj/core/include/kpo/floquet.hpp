#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "kpo/ising.hpp"

namespace kpo {

// n x (n-1); entry (i, k-1) is the modulation index of harmonic k on
// oscillator i (oscillators 0-based, harmonics 1-based).
using ModulationMatrix = Eigen::MatrixXd;

struct DesignProblem {
    Eigen::MatrixXd c;      // target couplings
    double lambda_c = 1.0;
    Eigen::MatrixXd j;      // native couplings, symmetric, positive off-diagonal

    DesignProblem(Eigen::MatrixXd c, double lambda_c, Eigen::MatrixXd j);
    DesignProblem(const CouplingMatrix& c, double lambda_c, Eigen::MatrixXd j)
        : DesignProblem(c.entries(), lambda_c, std::move(j)) {}

    int n() const { return static_cast<int>(c.rows()); }
    // lambda_c over the mean off-diagonal native coupling
    double eta() const;
};

Eigen::MatrixXd uniform_native(int n, double lambda_j);

enum class DesignMethod { FirstOrder, SecondOrder, FullOrder };
enum class DesignMode { Auto, FullOrder, SecondOrder };

std::string to_string(DesignMethod m);
DesignMode parse_design_mode(const std::string& s);
DesignMethod parse_design_method(const std::string& s);

struct DesignOptions {
    int max_cg_iterations = 250;
    int max_passes = 25;
    double tolerance_scale = 1e-3;     // column tolerance (scale * eta)^2 (n - k)
    double stagnation = 0.01;          // relative improvement below this counts as a stall
    int stall_passes = 2;
    double eta = 0.0;                  // 0: use DesignProblem::eta()
    int samples = 0;                   // 0: default_samples(n)
    int full_order_max_n = 100;        // Auto switches to SecondOrder above this size
};

struct DesignSolution {
    ModulationMatrix f;
    Eigen::MatrixXd c_eff;
    double error = 0.0;
    double modulation_depth = 0.0;
    DesignMethod method = DesignMethod::FirstOrder;
    double first_order_error = 0.0;
    int passes = 0;
    std::vector<double> column_objective;   // final value per harmonic k = 1..n-1
};

int default_samples(int n);

// Period average of J_ij cos[(i-j)t + sum_k (F_i^k - F_j^k) sin(kt)].
double floquet_integral(const Eigen::MatrixXd& j, const ModulationMatrix& f, int i, int jx, int samples);

// Floquet integral / lambda_c for every pair, zero diagonal.
Eigen::MatrixXd effective_couplings(const DesignProblem& prob, const ModulationMatrix& f, int samples = 0);

double coupling_error(const Eigen::MatrixXd& c_eff, const Eigen::MatrixXd& c);

ModulationMatrix first_order_solution(const DesignProblem& prob);

// lambda_c C_ij + (1/2) J_ij (F_i^(i-j) - F_j^(i-j)), for i > j
double first_order_residual(const DesignProblem& prob, const ModulationMatrix& f, int i, int j);

// lambda_c C_ij / J_ij minus the quadratic expansion of the normalized
// Floquet integral, for i > j
double second_order_residual(const DesignProblem& prob, const ModulationMatrix& f, int i, int j);

struct ColumnValue {
    double value = 0.0;
    Eigen::VectorXd gradient;   // with respect to F_0^k ... F_{n-k-1}^k
};

double column_objective_full(const DesignProblem& prob, const ModulationMatrix& f, int k, int samples = 0);
ColumnValue column_objective_full_gradient(const DesignProblem& prob, const ModulationMatrix& f, int k,
                                           int samples = 0);
ColumnValue column_objective_taylor2(const DesignProblem& prob, const ModulationMatrix& f, int k);

// Column k is parametrized by its first n-k entries; the remaining ones are
// mirrored (F_p = -F_{p mod k} for p >= k) or zero.
Eigen::VectorXd column_free_variables(const ModulationMatrix& f, int k);
void set_column(ModulationMatrix& f, int k, const Eigen::VectorXd& free);

DesignSolution solve_design(const DesignProblem& prob, DesignMode mode = DesignMode::Auto,
                            const DesignOptions& opts = {});

// Build a DesignSolution around an existing F (error via the full integral).
DesignSolution evaluate_design(const DesignProblem& prob, const ModulationMatrix& f, DesignMethod method,
                               int samples = 0);

double modulation_depth(const ModulationMatrix& f);

double eta_prescription(int n, ProblemClass cls);
double eta_bound(int n, ProblemClass cls, double zeta_max);
double mean_f1k_magnitude(int n, int k, ProblemClass cls, double eta);

} // namespace kpo

#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "kpo/floquet.hpp"
#include "kpo/ising.hpp"
#include "kpo/prescription.hpp"

namespace kpo {

// Times in units of 1/chi.
struct ClassicalConfig {
    int n_traj = 100;
    double n0 = 1e-2;
    double t_ramp_tilde = 100.0;
    double t_final_tilde = 0.0;        // 0: end of the ramp
    double r_max_tilde = 5.0;
    double kappa_tilde = 0.0;
    double dt_static = 0.01;
    double dt_dynamical = 0.0;         // 0: 2 pi / (40 Lambda)
    std::uint64_t seed = 1;
    int samples = 101;                 // recorded time points, including both ends
    int threads = 1;
    bool keep_trace = false;           // amplitudes of trajectory 0 at every recorded time

    double t_final() const { return t_final_tilde > 0.0 ? t_final_tilde : t_ramp_tilde; }
    double dynamical_step(double lambda_big_tilde) const;
    void validate() const;
};

// Parameters and Ising-problem settings from a prescription bundle.
ClassicalConfig classical_config(const AnnealerParams& p, int n_traj, std::uint64_t seed);

// Right-hand side data for d alpha / d(chi t). Diagonal of `coupling` is ignored.
struct ClassicalSystem {
    Eigen::VectorXd delta;
    Eigen::MatrixXd coupling;          // lambda_C C (static) or J (dynamical)
    double kappa = 0.0;
    double r_max = 0.0;
    double t_ramp = 1.0;
    bool dynamical = false;
    double lambda_big = 0.0;
    ModulationMatrix f;

    int n() const { return static_cast<int>(delta.size()); }
    double pump(double t) const;
};

ClassicalSystem static_system(const CouplingMatrix& c, const AnnealerParams& p, const ClassicalConfig& cfg);
ClassicalSystem dynamical_system(const AnnealerParams& p, const ModulationMatrix& f, const ClassicalConfig& cfg);

// sqrt(n0/2) z e^{2 pi i u}, one stream per trajectory index.
Eigen::VectorXcd sample_initial(const ClassicalConfig& cfg, int n, std::uint64_t traj_index);

// Column-wise right-hand side for a batch of trajectories (n x batch).
void eom_rhs(const ClassicalSystem& sys, const Eigen::MatrixXcd& alpha, double t, Eigen::MatrixXcd& out);
Eigen::VectorXcd eom_rhs(const ClassicalSystem& sys, const Eigen::VectorXcd& alpha, double t);

// sgn(Re alpha_i) with sgn(0) = +1, encoded as in encode_spins.
std::uint64_t readout_code(const Eigen::VectorXcd& alpha);

struct ClassicalTrajectory {
    Eigen::VectorXd t;
    std::vector<Eigen::VectorXcd> amplitudes;
    std::vector<std::uint8_t> success;
};

// Fixed-step RK4 from 0 to t_final; the step is shrunk so that it divides the
// recording grid. Throws NumericalFailure on a non-finite state.
ClassicalTrajectory integrate(const ClassicalSystem& sys, const Eigen::VectorXcd& alpha0, double dt,
                              double t_final, int samples, const GroundStateSet* ground = nullptr);

struct SuccessSeries {
    Eigen::VectorXd t;
    Eigen::VectorXd p;
    Eigen::VectorXd sem;
    double final_p() const { return p(p.size() - 1); }
    double final_sem() const { return sem(sem.size() - 1); }
};

// indicators: one row per time point, one column per trajectory.
SuccessSeries success_probability(const Eigen::VectorXd& t, const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>& indicators);

struct EnsembleResult {
    SuccessSeries series;
    Eigen::MatrixXcd initial;          // n x n_traj
    Eigen::MatrixXcd final;            // n x n_traj
    ClassicalTrajectory trace;         // trajectory 0 when keep_trace
    double dt = 0.0;
};

EnsembleResult run_ensemble(const ClassicalSystem& sys, const ClassicalConfig& cfg, double dt,
                            const GroundStateSet& ground);

struct PairedResult {
    EnsembleResult static_run;
    EnsembleResult dynamical_run;
};

// Same initial amplitudes per trajectory index for both systems.
PairedResult paired_run(const CouplingMatrix& c, const AnnealerParams& p, const ModulationMatrix& f,
                        const ClassicalConfig& cfg, const GroundStateSet& ground);

double pearson_correlation(const std::vector<double>& x, const std::vector<double>& y);

} // namespace kpo

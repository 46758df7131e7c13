#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "kpo/floquet.hpp"
#include "kpo/ising.hpp"
#include "kpo/prescription.hpp"

namespace kpo {

using SparseOperator = Eigen::SparseMatrix<std::complex<double>, Eigen::RowMajor>;

// Product Fock basis, M levels per mode; mode i has stride M^i.
class FockSpace {
public:
    FockSpace(int modes, int levels);

    int modes() const { return modes_; }
    int levels() const { return levels_; }
    Eigen::Index dim() const { return dim_; }
    Eigen::Index stride(int mode) const { return strides_[mode]; }
    int occupation(Eigen::Index index, int mode) const {
        return static_cast<int>((index / strides_[mode]) % levels_);
    }

    Eigen::VectorXcd vacuum() const;
    // product of coherent states, each truncated and renormalized per mode
    Eigen::VectorXcd coherent(const Eigen::VectorXcd& alpha) const;

    SparseOperator annihilation(int mode) const;
    SparseOperator number(int mode) const;

private:
    int modes_, levels_;
    Eigen::Index dim_;
    std::vector<Eigen::Index> strides_;
};

// Dimension limits for the solvers; larger systems throw ResourceLimit unless
// allow_large is set.
inline constexpr int kMaxStaticQuantumModes = 4;
inline constexpr int kMaxDynamicalQuantumModes = 3;

// Time-dependent Hamiltonian in units of chi:
//   H = -sum_i (delta_i n_i + a_i^2' a_i^2 / 2) + (r(t)/2) sum_i (a_i^2 + a_i^2')
//       - sum_{i != j} K_ij(t) a_i' a_j
// with K = lambda_C C (static) or K_ij = J_ij e^{-i(phi_i - phi_j)},
// phi_p = p Lambda t + sum_k F_pk sin(k Lambda t) (dynamical).
class QuantumModel {
public:
    static QuantumModel static_model(const CouplingMatrix& c, const AnnealerParams& p, int levels = 12,
                                     bool allow_large = false);
    static QuantumModel dynamical_model(const AnnealerParams& p, const ModulationMatrix& f, int levels = 12,
                                        bool allow_large = false);

    const FockSpace& space() const { return space_; }
    bool dynamical() const { return dynamical_; }
    double lambda_big() const { return lambda_big_; }
    double r_max() const { return r_max_; }
    double t_ramp() const { return t_ramp_; }
    double pump(double t) const;
    void set_ramp(double r_max, double t_ramp);

    // coupling coefficient K_ij(t), i != j
    std::complex<double> coupling(int i, int j, double t) const;
    SparseOperator hamiltonian(double t) const;
    // out = H(t) psi
    void apply(double t, const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;
    // sum_i n_i psi, for the loss drift
    void apply_number(const Eigen::VectorXcd& psi, Eigen::VectorXcd& out) const;
    const SparseOperator& annihilation(int mode) const { return lowering_[mode]; }

private:
    explicit QuantumModel(FockSpace space);

    FockSpace space_;
    bool dynamical_ = false;
    double lambda_big_ = 0.0, r_max_ = 0.0, t_ramp_ = 1.0;
    Eigen::VectorXd diagonal_;           // detuning and Kerr terms
    Eigen::VectorXd total_number_;
    SparseOperator fixed_;               // diagonal plus static coupling
    SparseOperator pump_;                // (1/2) sum_i (a_i^2 + a_i^2')
    std::vector<SparseOperator> lowering_;
    std::vector<std::pair<int, int>> pairs_;   // i < j
    std::vector<SparseOperator> hop_;          // a_i' a_j per pair
    Eigen::MatrixXd j_;
    ModulationMatrix f_;
};

// Single-mode half-line projectors for x = (a + a')/2 by the midpoint rule.
struct PositionProjector {
    Eigen::MatrixXd plus;    // x in [0, x_max]
    Eigen::MatrixXd minus;   // x in [-x_max, 0]
    double x_max = 6.0;
    int points = 200;
};

// psi_n(x) = 2^{1/4} phi_n(sqrt(2) x), phi_n the Hermite functions; rows = points.
Eigen::MatrixXd fock_wavefunctions(const Eigen::VectorXd& x, int levels);
PositionProjector make_projectors(int levels, double x_max = 6.0, int points = 200);

// <psi| prod_i Pi_{sigma_i} |psi>, psi normalized.
double configuration_probability(const FockSpace& space, const Eigen::VectorXcd& psi, const SpinConfiguration& sigma,
                                 const PositionProjector& proj);
// All 2^N configuration probabilities indexed by encode_spins.
Eigen::VectorXd configuration_probabilities(const FockSpace& space, const Eigen::VectorXcd& psi,
                                            const PositionProjector& proj);
double ground_probability(const Eigen::VectorXd& config_probs, const GroundStateSet& ground);
// Adds each configuration to its global flip; index = code with the top spin set to +1.
Eigen::VectorXd fold_flips(const Eigen::VectorXd& config_probs, int n);

struct QuantumConfig {
    double kappa_tilde = 0.0;
    int n_traj = 1;                    // forced to 1 when kappa = 0
    double t_ramp_tilde = 100.0;
    double t_final_tilde = 0.0;        // 0: end of the ramp
    double r_max_tilde = 5.0;
    double dt_static = 0.001;
    double dt_dynamical = 0.0;         // 0: 2 pi / (40 Lambda)
    std::uint64_t seed = 1;
    int levels = 12;
    int samples = 101;
    bool stroboscopic = true;          // snap recorded times to multiples of 2 pi / Lambda
    double norm_guard = 1e-6;          // largest per-step norm change tolerated by RK4
    int threads = 1;
    bool allow_large = false;

    double t_final() const { return t_final_tilde > 0.0 ? t_final_tilde : t_ramp_tilde; }
    int trajectories() const { return kappa_tilde > 0.0 ? n_traj : 1; }
    double dynamical_step(double lambda_big_tilde) const;
    void validate() const;
};

QuantumConfig quantum_config(const AnnealerParams& p, int n_traj, std::uint64_t seed);

// Recorded times; with stroboscopic set every point is a whole number of
// Floquet periods.
Eigen::VectorXd quantum_time_grid(const QuantumConfig& cfg, double lambda_big_tilde);

struct QuantumTrajectory {
    Eigen::VectorXd t;
    Eigen::MatrixXd config_probs;      // time x 2^N
    Eigen::VectorXd success;
    std::vector<double> jump_times;
    std::vector<int> jump_modes;
    Eigen::VectorXcd final_state;
    double max_norm_error = 0.0;       // lossless runs: largest per-step drift before renormalizing
};

// Lossless Schroedinger evolution of the vacuum (or psi0) by RK4 with per-step
// renormalization. Throws NumericalFailure if a step changes the norm by more
// than cfg.norm_guard.
QuantumTrajectory schrodinger_evolve(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                                     double dt, const GroundStateSet& ground, const PositionProjector& proj,
                                     const Eigen::VectorXcd* psi0 = nullptr);

// One quantum-jump trajectory with loss operators sqrt(2 kappa) a_i; the
// jump record is drawn from the (seed, QuantumJump, traj_index) stream.
QuantumTrajectory jump_trajectory(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                                  double dt, const GroundStateSet& ground, const PositionProjector& proj,
                                  std::uint64_t traj_index, const Eigen::VectorXcd* psi0 = nullptr);

struct QuantumEnsemble {
    Eigen::VectorXd t;
    Eigen::VectorXd p;                 // mean success probability
    Eigen::VectorXd sem;
    Eigen::MatrixXd config_probs;      // ensemble mean, time x 2^N
    Eigen::MatrixXd per_trajectory;    // time x n_traj success
    std::vector<int> jumps;            // count per trajectory
    double dt = 0.0;
    double final_p() const { return p(p.size() - 1); }
    double final_sem() const { return sem(sem.size() - 1); }
};

QuantumEnsemble run_quantum(const QuantumModel& model, const QuantumConfig& cfg, const Eigen::VectorXd& grid,
                            double dt, const GroundStateSet& ground);

struct QuantumPaired {
    QuantumEnsemble static_run;
    QuantumEnsemble dynamical_run;
};

// Both systems on the same stroboscopic grid with the same jump streams.
QuantumPaired quantum_paired_run(const CouplingMatrix& c, const AnnealerParams& p, const ModulationMatrix& f,
                                 const QuantumConfig& cfg, const GroundStateSet& ground);

struct PhaseSpaceDensity {
    Eigen::VectorXd grid;
    Eigen::MatrixXd position;          // |psi(x1, x2)|^2, rows x1
    Eigen::MatrixXd momentum;
};

// Two-mode densities with x = (a + a')/2, p = (a - a')/(2i).
PhaseSpaceDensity position_momentum_density(const FockSpace& space, const Eigen::VectorXcd& psi,
                                            const Eigen::VectorXd& grid);

} // namespace kpo

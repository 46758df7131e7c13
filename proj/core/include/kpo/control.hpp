#pragma once

#include <optional>

#include <Eigen/Dense>

#include "kpo/floquet.hpp"
#include "kpo/prescription.hpp"
#include "kpo/scaling.hpp"

namespace kpo {

// Dimensionful hardware description. Frequencies and energies in rad/s.
struct HardwareFrame {
    double omega_bus = 0.0;
    double chi = 0.0;
    Eigen::VectorXd g;
    std::optional<double> e_c;
    std::optional<double> e_j;
    std::optional<double> phi_dc;

    void validate() const;
};

// g = g_tilde chi.
HardwareFrame make_frame(const AnnealerParams& p, double omega_bus, double chi);

// Lower-branch (physical) root of
//   omega_dc - g^2 / (omega_bus - omega_dc) + delta = omega_0 - i Lambda    (i 0-based)
double solve_dc_frequency(double omega_bus, double omega_0, double g, double delta, double lambda_big, int i);

// Root of
//   w + g^2/x - g^2/(x - w) = target,   x = omega_bus - omega_dc,
// that tends to target as g -> 0.
double solve_slow_frequency(double omega_bus, double omega_dc, double g, double target);

// 2 r cos[2 (omega_dc + delta) t + 2 phase], phase = integral of the coupling-band
// rate omega_slow - g^2 / (omega_bus - omega_dc - omega_slow).
double pump_fast_frequency(double r, double omega_dc, double delta, double t, double phase);

// Trapezoid accumulation of an integral sampled on an increasing grid.
class PhaseAccumulator {
public:
    void add(double t, double rate);
    double value() const { return value_; }
    void reset() { *this = PhaseAccumulator{}; }

private:
    double value_ = 0.0, last_t_ = 0.0, last_rate_ = 0.0;
    bool started_ = false;
};

// Transmon flux map around phi_dc:
//   phi_ac = -omega_ac sqrt(cos phi_dc / (E_C E_J)) / (2 sin phi_dc)
double flux_from_frequency(double omega_ac, const HardwareFrame& frame);
double frequency_from_flux(double phi_ac, const HardwareFrame& frame);

// Instantaneous-frequency plan for every oscillator. All outputs in rad/s.
class ControlPlan {
public:
    ControlPlan(const AnnealerParams& p, const ModulationMatrix& f, const HardwareFrame& frame);

    int n() const { return static_cast<int>(omega_dc_.size()); }
    double omega_0() const { return omega_0_; }
    double lambda_big() const { return lambda_big_; }
    double delta(int i) const { return delta_(i); }
    double omega_dc(int i) const { return omega_dc_(i); }
    const Eigen::VectorXd& omega_dc() const { return omega_dc_; }
    const HardwareFrame& frame() const { return frame_; }

    // -sum_k F_i^(k) k Lambda cos(k Lambda t)
    double slow_target(int i, double t) const;
    double omega_slow(int i, double t) const;
    double coupling_rate(int i, double t) const;
    // pump amplitude r(t) = r_max min(t / T_ramp, 1), rad/s
    double pump_amplitude(double t) const;

    double dc_residual(int i) const;
    double slow_residual(int i, double t) const;
    // heuristic ceiling for |omega_slow|, delta_omega_bound chi
    double slow_bound() const { return slow_bound_; }

private:
    ModulationMatrix f_;
    HardwareFrame frame_;
    Eigen::VectorXd delta_, omega_dc_;
    double omega_0_ = 0.0, lambda_big_ = 0.0, slow_bound_ = 0.0;
    double r_max_ = 0.0, t_ramp_ = 0.0;
};

struct ReportOptions {
    double duration = 0.0;          // seconds; 0 picks 64 Floquet periods
    double sample_rate = 0.0;       // Hz; 0 picks 10x the fastest content
    bool include_fast = true;
    double t_start = 0.0;           // seconds; shift into the ramp plateau if wanted
};

struct SignalReport {
    Eigen::VectorXd t;              // seconds
    Eigen::MatrixXd omega;          // samples x n, instantaneous frequency
    Eigen::MatrixXd omega_slow;
    Eigen::MatrixXd omega_fast;
    Eigen::MatrixXd x;              // cos of the accumulated phase
    Eigen::VectorXd freq;           // Hz, one-sided
    Eigen::MatrixXd psd;            // freq x n, per Hz
    double bin_width = 0.0;         // Hz
    Eigen::VectorXd carrier;        // Hz, PSD peak per oscillator
};

SignalReport emit_signal_report(const ControlPlan& plan, const ReportOptions& opts = {});

struct Periodogram {
    Eigen::VectorXd freq;   // Hz
    Eigen::VectorXd psd;    // one-sided, per Hz
    double bin_width = 0.0;
};

// Hann-windowed periodogram, normalized so that the integral of the PSD is the
// window-weighted mean square of the signal.
Periodogram periodogram(const Eigen::VectorXd& signal, double sample_rate);
double integrated_power(const Periodogram& p);

// Lowest and highest frequency bounding `fraction` of the (non-DC) power.
std::pair<double, double> spectral_band(const Periodogram& p, double fraction = 0.99);

// N = 5 SK7 showcase: fixed instance, eta = 0.2/N, omega_bus/2pi = 10 GHz,
// g_max/2pi = 20 MHz, Delta_max/2pi = 5 GHz, chi = chi_max.
struct DemoSetup {
    CouplingMatrix c;
    AnnealerParams params;
    DesignSolution design;
    ScalingPoint chi;
    HardwareFrame frame;
};
DemoSetup five_oscillator_demo();

} // namespace kpo

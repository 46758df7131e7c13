#include "kpo/control.hpp"

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "kpo/errors.hpp"

namespace kpo {

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

void require_flux_frame(const HardwareFrame& f) {
    if (!f.e_c || !f.e_j || !f.phi_dc) throw InvalidInput("flux map needs E_C, E_J and phi_dc");
    if (!(*f.e_c > 0.0) || !(*f.e_j > 0.0)) throw InvalidInput("E_C and E_J must be positive");
    if (std::abs(std::sin(*f.phi_dc)) < 1e-12) throw InvalidInput("zero flux sensitivity at this DC bias");
    if (!(std::cos(*f.phi_dc) > 0.0)) throw InvalidInput("DC flux outside the tunable range");
}

double flux_slope(const HardwareFrame& f) {
    require_flux_frame(f);
    return -std::sqrt(std::cos(*f.phi_dc) / (*f.e_c * *f.e_j)) / (2.0 * std::sin(*f.phi_dc));
}

} // namespace

void HardwareFrame::validate() const {
    if (!(omega_bus > 0.0)) throw InvalidInput("bus frequency must be positive");
    if (!(chi > 0.0)) throw InvalidInput("chi must be positive");
    if (g.size() == 0 || !(g.minCoeff() >= 0.0)) throw InvalidInput("bus couplings must be non-negative");
}

HardwareFrame make_frame(const AnnealerParams& p, double omega_bus, double chi) {
    HardwareFrame f;
    f.omega_bus = omega_bus;
    f.chi = chi;
    f.g = p.g_tilde * chi;
    f.validate();
    return f;
}

double solve_dc_frequency(double omega_bus, double omega_0, double g, double delta, double lambda_big, int i) {
    // x = omega_bus - omega_dc solves x^2 - b x + g^2 = 0
    const double b = omega_bus - omega_0 + i * lambda_big + delta;
    const double disc = 0.25 * b * b - g * g;
    if (!(b > 0.0) || disc < 0.0)
        throw InvalidInput("no physical DC operating point for oscillator " + std::to_string(i + 1));
    const double root = std::sqrt(disc);
    // the large root is the one continuous with g -> 0
    const double x = 0.5 * b + root;
    return omega_bus - x;
}

double solve_slow_frequency(double omega_bus, double omega_dc, double g, double target) {
    const double x = omega_bus - omega_dc;
    const double bb = x - g * g / x + target;
    const double disc = bb * bb - 4.0 * target * x;
    if (disc < 0.0) throw InvalidInput("slow-band modulation exceeds the available detuning");
    const double root = std::sqrt(disc);
    if (bb > 0.0) return 2.0 * target * x / (bb + root);
    return 0.5 * (bb - root);
}

double pump_fast_frequency(double r, double omega_dc, double delta, double t, double phase) {
    if (r == 0.0) return 0.0;
    return 2.0 * r * std::cos(2.0 * (omega_dc + delta) * t + 2.0 * phase);
}

void PhaseAccumulator::add(double t, double rate) {
    if (started_) value_ += 0.5 * (t - last_t_) * (rate + last_rate_);
    started_ = true;
    last_t_ = t;
    last_rate_ = rate;
}

double flux_from_frequency(double omega_ac, const HardwareFrame& frame) {
    return omega_ac * flux_slope(frame);
}

double frequency_from_flux(double phi_ac, const HardwareFrame& frame) {
    return phi_ac / flux_slope(frame);
}

ControlPlan::ControlPlan(const AnnealerParams& p, const ModulationMatrix& f, const HardwareFrame& frame)
    : f_(f), frame_(frame) {
    frame_.validate();
    const int n = p.n();
    if (frame_.g.size() != n) throw InvalidInput("bus coupling count does not match the parameter bundle");
    if (f_.rows() != n || f_.cols() != n - 1) throw InvalidInput("modulation matrix has the wrong shape");
    const double chi = frame_.chi;
    lambda_big_ = p.lambda_big_tilde * chi;
    delta_ = p.delta_tilde * chi;
    omega_0_ = frame_.omega_bus - p.delta_nom_tilde(0) * chi;
    slow_bound_ = p.delta_omega_bound_tilde * chi;
    r_max_ = p.r_max_tilde * chi;
    t_ramp_ = p.t_ramp_tilde / chi;
    omega_dc_.resize(n);
    for (int i = 0; i < n; ++i)
        omega_dc_(i) = solve_dc_frequency(frame_.omega_bus, omega_0_, frame_.g(i), delta_(i), lambda_big_, i);
}

double ControlPlan::slow_target(int i, double t) const {
    double s = 0.0;
    for (int k = 1; k <= f_.cols(); ++k) s -= f_(i, k - 1) * k * lambda_big_ * std::cos(k * lambda_big_ * t);
    return s;
}

double ControlPlan::omega_slow(int i, double t) const {
    return solve_slow_frequency(frame_.omega_bus, omega_dc_(i), frame_.g(i), slow_target(i, t));
}

double ControlPlan::coupling_rate(int i, double t) const {
    const double w = omega_slow(i, t);
    const double g = frame_.g(i);
    return w - g * g / (frame_.omega_bus - omega_dc_(i) - w);
}

double ControlPlan::pump_amplitude(double t) const {
    if (t <= 0.0) return 0.0;
    return r_max_ * std::min(t / t_ramp_, 1.0);
}

double ControlPlan::dc_residual(int i) const {
    const double g = frame_.g(i), w = omega_dc_(i);
    return w - g * g / (frame_.omega_bus - w) + delta_(i) - (omega_0_ - i * lambda_big_);
}

double ControlPlan::slow_residual(int i, double t) const {
    const double g = frame_.g(i), x = frame_.omega_bus - omega_dc_(i);
    const double w = omega_slow(i, t);
    return w + g * g / x - g * g / (x - w) - slow_target(i, t);
}

Periodogram periodogram(const Eigen::VectorXd& signal, double sample_rate) {
    const Eigen::Index n = signal.size();
    if (n < 4) throw InvalidInput("periodogram needs at least four samples");
    std::vector<double> windowed(n);
    double wsum = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double w = 0.5 * (1.0 - std::cos(two_pi * k / n));
        windowed[k] = w * signal(k);
        wsum += w * w;
    }
    Eigen::FFT<double> fft;
    std::vector<std::complex<double>> spec;
    fft.fwd(spec, windowed);
    const Eigen::Index half = n / 2;
    Periodogram p;
    p.bin_width = sample_rate / n;
    p.freq.resize(half + 1);
    p.psd.resize(half + 1);
    for (Eigen::Index k = 0; k <= half; ++k) {
        double v = std::norm(spec[k]) / (sample_rate * wsum);
        if (k != 0 && !(n % 2 == 0 && k == half)) v *= 2.0;
        p.freq(k) = k * p.bin_width;
        p.psd(k) = v;
    }
    return p;
}

double integrated_power(const Periodogram& p) {
    return p.psd.sum() * p.bin_width;
}

std::pair<double, double> spectral_band(const Periodogram& p, double fraction) {
    const Eigen::Index m = p.psd.size();
    const double total = p.psd.tail(m - 1).sum();
    if (!(total > 0.0)) return {0.0, 0.0};
    const double lo = 0.5 * (1.0 - fraction) * total, hi = 0.5 * (1.0 + fraction) * total;
    double cum = 0.0, f_lo = p.freq(1), f_hi = p.freq(m - 1);
    bool have_lo = false;
    for (Eigen::Index k = 1; k < m; ++k) {
        cum += p.psd(k);
        if (!have_lo && cum >= lo) {
            f_lo = p.freq(k);
            have_lo = true;
        }
        if (cum >= hi) {
            f_hi = p.freq(k);
            break;
        }
    }
    return {f_lo, f_hi};
}

SignalReport emit_signal_report(const ControlPlan& plan, const ReportOptions& opts) {
    const int n = plan.n();
    const double lam = plan.lambda_big();
    const double duration = opts.duration > 0.0 ? opts.duration : 64.0 * two_pi / lam;
    double rate = opts.sample_rate;
    if (!(rate > 0.0)) {
        const double top = plan.omega_dc().maxCoeff() + n * lam;
        rate = 10.0 * (opts.include_fast ? 2.0 * top : top) / two_pi;
    }
    Eigen::Index samples = 1;
    while (samples < static_cast<Eigen::Index>(std::ceil(duration * rate))) samples *= 2;
    if (samples > (Eigen::Index(1) << 24)) throw ResourceLimit("signal report needs more than 2^24 samples");
    rate = samples / duration;

    SignalReport rep;
    rep.t.resize(samples);
    rep.omega.resize(samples, n);
    rep.omega_slow.resize(samples, n);
    rep.omega_fast.resize(samples, n);
    rep.x.resize(samples, n);
    for (int i = 0; i < n; ++i) {
        // phases referenced to t_start
        PhaseAccumulator coupling, drift;
        for (Eigen::Index s = 0; s < samples; ++s) {
            const double t = opts.t_start + s / rate;
            const double ws = plan.omega_slow(i, t);
            const double g = plan.frame().g(i);
            coupling.add(t, ws - g * g / (plan.frame().omega_bus - plan.omega_dc(i) - ws));
            double wf = 0.0;
            if (opts.include_fast)
                wf = pump_fast_frequency(plan.pump_amplitude(t), plan.omega_dc(i), plan.delta(i), t, coupling.value());
            drift.add(t, ws + wf);
            rep.t(s) = t;
            rep.omega_slow(s, i) = ws;
            rep.omega_fast(s, i) = wf;
            rep.omega(s, i) = plan.omega_dc(i) + ws + wf;
            rep.x(s, i) = std::cos(plan.omega_dc(i) * (t - opts.t_start) + drift.value());
        }
    }
    rep.carrier.resize(n);
    for (int i = 0; i < n; ++i) {
        auto p = periodogram(rep.x.col(i), rate);
        if (i == 0) {
            rep.freq = p.freq;
            rep.bin_width = p.bin_width;
            rep.psd.resize(p.psd.size(), n);
        }
        rep.psd.col(i) = p.psd;
        Eigen::Index peak;
        p.psd.maxCoeff(&peak);
        rep.carrier(i) = p.freq(peak);
    }
    return rep;
}

DemoSetup five_oscillator_demo() {
    Eigen::MatrixXd raw(5, 5);
    raw << 0, 2, 1, -4, 4,
           2, 0, -5, 7, -6,
           1, -5, 0, 5, 3,
           -4, 7, 5, 0, -5,
           4, -6, 3, -5, 0;
    CouplingMatrix c(raw / 7.0, ProblemClass::SK7);
    PrescriptionOverrides over;
    over.eta = 0.2 / 5;
    AnnealerParams p = prescribe(c, ProblemClass::SK7, Tolerances::quantum(), over);
    DesignSolution sol = solve_design(design_problem(c, p));
    const HardwareLimits limits{two_pi * 20e6, two_pi * 5e9};
    ScalingPoint chi = chi_max(p, limits);
    HardwareFrame frame = make_frame(p, two_pi * 10e9, chi.chi_max);
    return DemoSetup{std::move(c), std::move(p), std::move(sol), chi, std::move(frame)};
}

} // namespace kpo

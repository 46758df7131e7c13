#include "commands.hpp"

#include <cmath>
#include <iostream>
#include <numeric>
#include <sstream>

#include "grid.hpp"
#include "kpo/classical.hpp"
#include "kpo/control.hpp"
#include "kpo/errors.hpp"
#include "kpo/floquet.hpp"
#include "kpo/io.hpp"
#include "kpo/ising.hpp"
#include "kpo/prescription.hpp"
#include "kpo/quantum.hpp"
#include "kpo/scaling.hpp"

namespace kpo::cli {

namespace fs = std::filesystem;

fs::path Context::out_path(const std::string& p) const {
    fs::path path(p);
    if (path.is_relative() && !output_dir.empty())
        return output_dir / path;
    return path;
}

std::string Context::read_input(const std::string& p) {
    if (!fs::exists(p))
        throw InvalidInput("input file not found: " + p);
    manifest.add_input(p);
    return io::read_text(p);
}

void Context::emit(const fs::path& p, const std::string& text) {
    io::write_text(p, text);
    manifest.add_output(p);
}

void Context::write_manifest(const fs::path& p) {
    stage = "manifest";
    io::write_text(p, manifest.to_json());
}

namespace {

fs::path sibling(const fs::path& p, const std::string& suffix, const std::string& ext) {
    return p.parent_path() / (p.stem().string() + suffix + ext);
}

fs::path manifest_for(const fs::path& primary) {
    return sibling(primary, ".manifest", ".json");
}

GroundStateSet ground_states(const CouplingMatrix& c) {
    if (c.n() > kMaxBruteForceSpins)
        throw ResourceLimit("success probability needs exact ground states; N = " + std::to_string(c.n()) +
                            " exceeds " + std::to_string(kMaxBruteForceSpins));
    return brute_force_ground_states(c);
}

DetuningForm parse_form(const std::string& s) {
    if (s == "filling_ratio" || s == "filling")
        return DetuningForm::FillingRatio;
    if (s == "printed")
        return DetuningForm::Printed;
    throw InvalidInput("unknown detuning form '" + s + "'");
}

Tolerances with_a(double a_factor) {
    Tolerances tol;
    tol.a_factor = a_factor;
    tol.validate();
    return tol;
}

// Re-run the prescription at a different multiplier while keeping every
// setting the original bundle pinned.
AnnealerParams represcribe(const CouplingMatrix& c, const AnnealerParams& p, double a_factor) {
    PrescriptionOverrides over;
    over.lambda_c_tilde = p.lambda_c_tilde;
    over.r_max_tilde = p.r_max_tilde;
    over.t_ramp_tilde = p.t_ramp_tilde;
    over.eta = p.eta;
    over.kappa_tilde = p.kappa_tilde;
    over.detuning_form = p.detuning_form;
    return prescribe(c, p.problem_class, with_a(a_factor), over);
}

struct Setup {
    CouplingMatrix c;
    AnnealerParams p;
    DesignSolution design;
};

// Instance, parameters and design for a run; missing parameter or design
// files are produced on the spot.
Setup load_setup(Context& ctx, const RunOptions& o, double default_a, bool quantum) {
    ctx.stage = "instance";
    if (o.instance.empty())
        throw InvalidInput("--instance is required");
    CouplingMatrix c = io::parse_instance(ctx.read_input(o.instance));

    AnnealerParams p = ctx.timed("prescribe", [&] {
        if (o.params.empty()) {
            // small quantum runs use the hand-tuned static settings when one exists
            auto over = quantum ? preset_overrides(c.n(), o.kappa.value_or(0.0)) : std::nullopt;
            PrescriptionOverrides use = over ? *over : PrescriptionOverrides{};
            use.kappa_tilde = o.kappa.value_or(0.0);
            return prescribe(c, c.problem_class(), with_a(o.a_factor.value_or(default_a)), use);
        }
        AnnealerParams q = io::parse_params(ctx.read_input(o.params));
        if (q.n() != c.n())
            throw InvalidInput("params are for N = " + std::to_string(q.n()) + ", instance has N = " +
                               std::to_string(c.n()));
        if (o.a_factor && *o.a_factor != q.a_factor) {
            if (!o.design.empty())
                throw InvalidInput("--A differs from the params file, so the design file no longer applies; "
                                   "omit --design to solve it here");
            q = represcribe(c, q, *o.a_factor);
        }
        return q;
    });

    DesignSolution d = ctx.timed("design", [&] {
        if (o.design.empty())
            return solve_design(design_problem(c, p));
        const std::string text = ctx.read_input(o.design);
        DesignSolution s = io::parse_design(text);
        if (s.f.rows() != c.n())
            throw InvalidInput("design is for N = " + std::to_string(s.f.rows()) + ", instance has N = " +
                               std::to_string(c.n()));
        if (io::design_instance(text).entries() != c.entries())
            throw InvalidInput("design file was solved for a different instance");
        return s;
    });
    return {std::move(c), std::move(p), std::move(d)};
}

bool wants(const std::string& system, const char* which) {
    if (system != "both" && system != "static" && system != "dynamical" && system != "auto")
        throw InvalidInput("--system must be both, static, dynamical or auto");
    return system == "both" || system == "auto" || system == which;
}

std::string trace_csv(const EnsembleResult* s, const EnsembleResult* d) {
    const EnsembleResult* base = s ? s : d;
    const auto& t = base->trace.t;
    const auto n = base->trace.amplitudes.front().size();
    std::ostringstream os;
    os.precision(17);
    os << 't';
    for (auto [e, tag] : {std::pair{s, "static"}, std::pair{d, "dynamical"}})
        if (e)
            for (Eigen::Index i = 0; i < n; ++i)
                os << ",re_" << tag << '_' << i << ",im_" << tag << '_' << i;
    os << '\n';
    for (Eigen::Index k = 0; k < t.size(); ++k) {
        os << t(k);
        for (const EnsembleResult* e : {s, d})
            if (e)
                for (Eigen::Index i = 0; i < n; ++i)
                    os << ',' << e->trace.amplitudes[k](i).real() << ',' << e->trace.amplitudes[k](i).imag();
        os << '\n';
    }
    return os.str();
}

fs::path csv_path(const Context& ctx, const RunOptions& o, const fs::path& out) {
    return o.csv.empty() ? sibling(out, "", ".csv") : ctx.out_path(o.csv);
}

DesignMode parse_mode(const std::string& s) {
    return parse_design_mode(s);
}

} // namespace

void cmd_instances(Context& ctx, const InstancesOptions& o) {
    ctx.stage = "instances";
    if (o.count < 1)
        throw InvalidInput("--count must be positive");
    const ProblemClass cls = parse_problem_class(o.cls);
    const fs::path out = ctx.out_path(o.out);
    for (int k = 0; k < o.count; ++k) {
        const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(k);
        ctx.manifest.seeds.push_back(seed);
        CouplingMatrix c = generate_instance(cls, o.n, seed);
        std::optional<GroundStateSet> g;
        if (o.ground)
            g = ground_states(c);
        const fs::path file = o.count == 1 ? out : sibling(out, "_s" + std::to_string(seed), ".json");
        ctx.emit(file, io::instance_json(c, g ? &*g : nullptr));
    }
    ctx.write_manifest(manifest_for(out));
}

void cmd_prescribe(Context& ctx, const PrescribeOptions& o) {
    ctx.stage = "instance";
    CouplingMatrix c = io::parse_instance(ctx.read_input(o.instance));
    ctx.stage = "prescribe";
    const ProblemClass cls = o.cls.empty() ? c.problem_class() : parse_problem_class(o.cls);
    PrescriptionOverrides over;
    if (o.preset) {
        auto pre = preset_overrides(c.n(), o.kappa);
        if (!pre)
            throw InvalidInput("no preset for N = " + std::to_string(c.n()) + " at kappa = " + std::to_string(o.kappa));
        over = *pre;
    }
    over.kappa_tilde = o.kappa;
    if (o.lambda_c) over.lambda_c_tilde = o.lambda_c;
    if (o.r_max) over.r_max_tilde = o.r_max;
    if (o.t_ramp) over.t_ramp_tilde = o.t_ramp;
    if (o.eta) over.eta = o.eta;
    over.detuning_form = parse_form(o.detuning_form);
    BandwidthEstimate bw;
    if (o.bandwidth == "closed")
        bw = BandwidthEstimate::ClosedForm;
    else if (o.bandwidth == "exact")
        bw = BandwidthEstimate::InstanceExact;
    else
        throw InvalidInput("--bandwidth must be closed or exact");
    AnnealerParams p = ctx.timed("prescribe", [&] { return prescribe(c, cls, with_a(o.a_factor), over, bw); });
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::params_json(p));
    ctx.write_manifest(manifest_for(out));
}

void cmd_design_solve(Context& ctx, const DesignSolveOptions& o) {
    ctx.stage = "instance";
    CouplingMatrix c = io::parse_instance(ctx.read_input(o.instance));
    ctx.stage = "design";
    const DesignMode mode = parse_mode(o.mode);
    std::optional<DesignProblem> prob;
    if (!o.params.empty()) {
        if (o.eta)
            throw InvalidInput("--eta conflicts with --params; the bundle fixes eta");
        AnnealerParams p = io::parse_params(ctx.read_input(o.params));
        prob = design_problem(c, p);
    } else {
        const double eta = o.eta.value_or(eta_prescription(c.n(), c.problem_class()));
        if (!(eta > 0.0))
            throw InvalidInput("eta must be positive");
        prob.emplace(c, eta, uniform_native(c.n(), 1.0));
    }
    DesignSolution d = ctx.timed("design", [&] { return solve_design(*prob, mode); });
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::design_json(d, c, prob->eta(), prob->lambda_c));
    ctx.write_manifest(manifest_for(out));
}

void cmd_design_sweep(Context& ctx, const DesignSweepOptions& o) {
    ctx.stage = "design";
    const ProblemClass cls = parse_problem_class(o.cls);
    const auto ns = parse_int_grid(o.n);
    const auto etas = parse_grid(o.eta_grid);
    const DesignMode mode = parse_mode(o.mode);
    if (o.instances < 1)
        throw InvalidInput("--instances must be positive");
    std::ostringstream os;
    os.precision(17);
    os << "eta,n,mean_error,sem_error\n";
    ctx.timed("design", [&] {
        for (double e : etas)
            for (int n : ns) {
                const double eta = o.eta_times_n ? e / n : e;
                std::vector<double> err;
                for (int k = 0; k < o.instances; ++k) {
                    const CouplingMatrix c = generate_instance(cls, n, o.seed + static_cast<std::uint64_t>(k));
                    err.push_back(solve_design(DesignProblem(c, eta, uniform_native(n, 1.0)), mode).error);
                }
                const double mean = std::accumulate(err.begin(), err.end(), 0.0) / err.size();
                double var = 0.0;
                for (double x : err)
                    var += (x - mean) * (x - mean);
                const double sem = err.size() > 1 ? std::sqrt(var / (err.size() - 1) / err.size()) : 0.0;
                os << eta << ',' << n << ',' << mean << ',' << sem << '\n';
            }
    });
    for (int k = 0; k < o.instances; ++k)
        ctx.manifest.seeds.push_back(o.seed + static_cast<std::uint64_t>(k));
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, os.str());
    ctx.write_manifest(manifest_for(out));
}

void cmd_control_emit(Context& ctx, const ControlOptions& o) {
    ctx.stage = "control";
    AnnealerParams p = io::parse_params(ctx.read_input(o.params));
    DesignSolution d = io::parse_design(ctx.read_input(o.design));
    if (d.f.rows() != p.n())
        throw InvalidInput("design and params disagree on N");
    const double two_pi = 2.0 * M_PI;
    HardwareLimits lim{two_pi * o.gmax_mhz * 1e6, two_pi * o.dmax_ghz * 1e9};
    lim.validate();
    const ScalingPoint sp = chi_max(p, lim, o.kappa_ratio);
    const double chi = o.chi_khz ? two_pi * *o.chi_khz * 1e3 : sp.chi_max;
    const HardwareFrame frame = make_frame(p, two_pi * o.omega_bus_ghz * 1e9, chi);
    ReportOptions ro;
    if (o.duration_us) ro.duration = *o.duration_us * 1e-6;
    if (o.sample_rate_ghz) ro.sample_rate = *o.sample_rate_ghz * 1e9;
    ro.include_fast = !o.no_fast;
    ro.t_start = o.t_start_us * 1e-6;
    const ControlPlan plan(p, d.f, frame);
    SignalReport rep = ctx.timed("control", [&] { return emit_signal_report(plan, ro); });
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::signal_csv(rep));
    ctx.emit(sibling(out, "_psd", ".csv"), io::spectrum_csv(rep));
    ctx.emit(sibling(out, "", ".json"), io::control_json(plan, rep, &sp));
    ctx.write_manifest(manifest_for(out));
}

void cmd_classical_run(Context& ctx, const RunOptions& o) {
    Setup s = load_setup(ctx, o, Tolerances::classical().a_factor, false);
    ctx.stage = "simulate";
    const GroundStateSet ground = ground_states(s.c);
    ClassicalConfig cfg = classical_config(s.p, o.ntraj, o.seed);
    cfg.threads = ctx.threads;
    cfg.samples = o.samples;
    if (o.kappa) cfg.kappa_tilde = *o.kappa;
    if (o.t_final) cfg.t_final_tilde = *o.t_final;
    cfg.keep_trace = !o.trace.empty();
    cfg.validate();
    ctx.manifest.seeds.push_back(o.seed);

    std::optional<EnsembleResult> st, dy;
    if (wants(o.system, "static"))
        st = ctx.timed("simulate_static",
                       [&] { return run_ensemble(static_system(s.c, s.p, cfg), cfg, cfg.dt_static, ground); });
    if (wants(o.system, "dynamical"))
        dy = ctx.timed("simulate_dynamical", [&] {
            return run_ensemble(dynamical_system(s.p, s.design.f, cfg), cfg, cfg.dynamical_step(s.p.lambda_big_tilde),
                                ground);
        });

    ctx.stage = "report";
    io::ClassicalRecord rec{st ? &*st : nullptr, dy ? &*dy : nullptr, cfg, &ground, &s.c, &s.p};
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::classical_json(rec));
    ctx.emit(csv_path(ctx, o, out), io::classical_csv(rec));
    if (!o.trace.empty())
        ctx.emit(ctx.out_path(o.trace), trace_csv(st ? &*st : nullptr, dy ? &*dy : nullptr));
    ctx.write_manifest(manifest_for(out));
}

void cmd_quantum_run(Context& ctx, const RunOptions& o) {
    Setup s = load_setup(ctx, o, Tolerances::quantum().a_factor, true);
    ctx.stage = "simulate";
    const GroundStateSet ground = ground_states(s.c);
    QuantumConfig cfg = quantum_config(s.p, o.ntraj, o.seed);
    cfg.threads = ctx.threads;
    cfg.samples = o.samples;
    cfg.levels = o.levels;
    cfg.allow_large = o.allow_large;
    if (o.kappa) cfg.kappa_tilde = *o.kappa;
    if (o.t_final) cfg.t_final_tilde = *o.t_final;
    cfg.validate();
    ctx.manifest.seeds.push_back(o.seed);

    const bool run_dy = o.system == "auto" ? (s.c.n() <= kMaxDynamicalQuantumModes || o.allow_large)
                                           : wants(o.system, "dynamical");
    const auto grid = quantum_time_grid(cfg, s.p.lambda_big_tilde);
    std::optional<QuantumModel> st_model, dy_model;
    std::optional<QuantumEnsemble> st, dy;
    if (wants(o.system, "static")) {
        st_model = QuantumModel::static_model(s.c, s.p, cfg.levels, cfg.allow_large);
        st = ctx.timed("simulate_static", [&] { return run_quantum(*st_model, cfg, grid, cfg.dt_static, ground); });
    }
    if (run_dy) {
        dy_model = QuantumModel::dynamical_model(s.p, s.design.f, cfg.levels, cfg.allow_large);
        dy = ctx.timed("simulate_dynamical", [&] {
            return run_quantum(*dy_model, cfg, grid, cfg.dynamical_step(s.p.lambda_big_tilde), ground);
        });
    }

    io::QuantumRecord rec{st ? &*st : nullptr, dy ? &*dy : nullptr, cfg, s.c.n(), &ground, &s.c, &s.p, {}};
    if (o.density) {
        if (s.c.n() != 2)
            throw InvalidInput("--density needs N = 2");
        ctx.timed("density", [&] {
            const QuantumModel& m = dy_model ? *dy_model : *st_model;
            const double dt = dy_model ? cfg.dynamical_step(s.p.lambda_big_tilde) : cfg.dt_static;
            const auto proj = make_projectors(cfg.levels);
            QuantumTrajectory tr = cfg.kappa_tilde > 0.0 ? jump_trajectory(m, cfg, grid, dt, ground, proj, 0)
                                                         : schrodinger_evolve(m, cfg, grid, dt, ground, proj);
            rec.density = position_momentum_density(m.space(), tr.final_state, Eigen::VectorXd::LinSpaced(81, -4.0, 4.0));
        });
    }
    ctx.stage = "report";
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::quantum_json(rec));
    ctx.emit(csv_path(ctx, o, out), io::quantum_csv(rec));
    ctx.write_manifest(manifest_for(out));
}

void cmd_scaling_sweep(Context& ctx, const ScalingOptions& o) {
    ctx.stage = "scaling";
    const ProblemClass cls = parse_problem_class(o.cls);
    const auto ns = parse_int_grid(o.n);
    const auto g = parse_grid(o.gmax_mhz);
    const auto dm = parse_grid(o.dmax_ghz);
    if (g.size() > 1 && dm.size() > 1)
        throw InvalidInput("sweep either --gmax-mhz or --dmax-ghz, not both");
    const double two_pi = 2.0 * M_PI;
    const Tolerances tol = with_a(o.a_factor.value_or(Tolerances{}.a_factor));
    std::vector<double> axis;
    SweepAxis which = SweepAxis::GMax;
    double fixed = 0.0;
    if (dm.size() > 1) {
        which = SweepAxis::DeltaMax;
        for (double x : dm) axis.push_back(two_pi * x * 1e9);
        fixed = two_pi * g[0] * 1e6;
    } else {
        for (double x : g) axis.push_back(two_pi * x * 1e6);
        fixed = two_pi * dm[0] * 1e9;
    }
    auto pts = ctx.timed("scaling", [&] { return sweep(ns, axis, which, fixed, cls, tol, o.kappa_ratio); });
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, io::scaling_csv(pts));
    ctx.emit(sibling(out, "", ".json"), io::scaling_json(pts, cls, o.kappa_ratio));
    ctx.write_manifest(manifest_for(out));
}

void cmd_pipeline(Context& ctx, const PipelineOptions& o) {
    ctx.stage = "instance";
    if (o.mode != "classical" && o.mode != "quantum")
        throw InvalidInput("--mode must be classical or quantum");
    const bool quantum = o.mode == "quantum";
    const ProblemClass cls = parse_problem_class(o.cls);
    const fs::path dir = ctx.out_path(o.out_dir.empty()
                                          ? "pipeline_" + o.cls + "_n" + std::to_string(o.n) + "_s" +
                                                std::to_string(o.seed) + "_" + o.mode
                                          : o.out_dir);
    ctx.manifest.seeds.push_back(o.seed);

    CouplingMatrix c = ctx.timed("instance", [&] { return generate_instance(cls, o.n, o.seed); });
    const GroundStateSet ground = ground_states(c);
    ctx.emit(dir / "instance.json", io::instance_json(c, &ground));

    AnnealerParams p = ctx.timed("prescribe", [&] {
        PrescriptionOverrides over;
        if (quantum)
            if (auto pre = preset_overrides(c.n(), o.kappa))
                over = *pre;
        over.kappa_tilde = o.kappa;
        if (o.t_ramp) over.t_ramp_tilde = o.t_ramp;
        const double a = o.a_factor.value_or(quantum ? Tolerances::quantum().a_factor : Tolerances::classical().a_factor);
        return prescribe(c, cls, with_a(a), over);
    });
    ctx.emit(dir / "params.json", io::params_json(p));

    const DesignProblem prob = design_problem(c, p);
    DesignSolution d = ctx.timed("design", [&] { return solve_design(prob); });
    ctx.emit(dir / "design.json", io::design_json(d, c, p.eta, p.lambda_c_tilde));

    RunOptions ro;
    ro.instance = (dir / "instance.json").string();
    ro.params = (dir / "params.json").string();
    ro.design = (dir / "design.json").string();
    ro.ntraj = o.ntraj.value_or(quantum ? 20 : 100);
    ro.seed = o.seed;
    ro.system = o.system == "auto" && !quantum ? "both" : o.system;
    ro.samples = o.samples;
    ro.levels = o.levels;
    ro.kappa = o.kappa;
    ro.out = (dir / "result.json").string();
    // The run re-reads the files written above so the manifest hashes what
    // was actually simulated.
    Context inner;
    inner.threads = ctx.threads;
    inner.deterministic = ctx.deterministic;
    try {
        if (quantum)
            cmd_quantum_run(inner, ro);
        else
            cmd_classical_run(inner, ro);
    } catch (...) {
        ctx.stage = inner.stage;
        throw;
    }
    for (const auto& [name, t] : inner.manifest.timing)
        if (name != "prescribe" && name != "design")
            ctx.manifest.timing.emplace_back(name, t);
    for (const auto& f : inner.manifest.outputs)
        if (f.filename() != "result.manifest.json")
            ctx.manifest.add_output(f);
    fs::remove(dir / "result.manifest.json");
    ctx.write_manifest(dir / "manifest.json");
}

void cmd_bench_design(Context& ctx, const BenchOptions& o) {
    ctx.stage = "bench";
    const auto ns = parse_int_grid(o.n);
    const DesignMode mode = parse_mode(o.mode);
    if (o.instances < 1)
        throw InvalidInput("--instances must be positive");
    std::ostringstream os;
    os.precision(10);
    os << "n,seed,seconds,error,passes\n";
    std::vector<double> logn, logt;
    for (int n : ns) {
        double total = 0.0;
        for (int k = 0; k < o.instances; ++k) {
            const std::uint64_t seed = o.seed + static_cast<std::uint64_t>(k);
            const CouplingMatrix c = generate_instance(ProblemClass::SK7, n, seed);
            const AnnealerParams p = prescribe(c, ProblemClass::SK7);
            const DesignProblem prob = design_problem(c, p);
            const auto t0 = std::chrono::steady_clock::now();
            const DesignSolution d = solve_design(prob, mode);
            const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            total += sec;
            os << n << ',' << seed << ',' << sec << ',' << d.error << ',' << d.passes << '\n';
        }
        ctx.manifest.timing.emplace_back("n" + std::to_string(n), total);
        logn.push_back(std::log(n));
        logt.push_back(std::log(total / o.instances));
        std::cerr << "n = " << n << ": " << total / o.instances << " s per instance\n";
    }
    if (logn.size() > 1) {
        const double mx = std::accumulate(logn.begin(), logn.end(), 0.0) / logn.size();
        const double my = std::accumulate(logt.begin(), logt.end(), 0.0) / logt.size();
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < logn.size(); ++i) {
            sxy += (logn[i] - mx) * (logt[i] - my);
            sxx += (logn[i] - mx) * (logn[i] - mx);
        }
        std::cerr << "log-log slope: " << sxy / sxx << '\n';
    }
    for (int k = 0; k < o.instances; ++k)
        ctx.manifest.seeds.push_back(o.seed + static_cast<std::uint64_t>(k));
    const fs::path out = ctx.out_path(o.out);
    ctx.emit(out, os.str());
    ctx.write_manifest(manifest_for(out));
}

} // namespace kpo::cli

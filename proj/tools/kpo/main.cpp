#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"

#include "commands.hpp"
#include "kpo/errors.hpp"

#ifndef KPO_VERSION
#define KPO_VERSION "unknown"
#endif

using namespace kpo::cli;

namespace {

enum Exit { Ok = 0, BadInput = 2, Numerical = 3, Resource = 4 };

void add_run_options(CLI::App* sub, RunOptions& o, bool quantum) {
    sub->add_option("--instance", o.instance, "instance JSON")->required();
    sub->add_option("--params", o.params, "parameter bundle JSON (prescribed here if omitted)");
    sub->add_option("--design", o.design, "design JSON (solved here if omitted)");
    sub->add_option("--A", o.a_factor, "Floquet multiplier; re-prescribes if it differs from --params");
    sub->add_option("--kappa", o.kappa, "loss rate in units of chi");
    sub->add_option("--ntraj", o.ntraj, "trajectories")->check(CLI::PositiveNumber);
    sub->add_option("--seed", o.seed, "master seed");
    sub->add_option("--system", o.system, "both, static or dynamical" + std::string(quantum ? " (or auto)" : ""));
    sub->add_option("--samples", o.samples, "recorded time points")->check(CLI::Range(2, 1000000));
    sub->add_option("--t-final", o.t_final, "end time in 1/chi (default: end of the ramp)");
    sub->add_option("--out", o.out, "result JSON");
    sub->add_option("--csv", o.csv, "result CSV (default: next to --out)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kerr parametric oscillator annealer with Floquet-engineered couplings", "kpo"};
    app.set_version_flag("--version", KPO_VERSION);
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "TOML/INI file mirroring the command-line flags");

    Context ctx;
    app.add_option("--threads", ctx.threads, "worker threads (0: all cores)")->check(CLI::NonNegativeNumber);
    app.add_flag("--deterministic", ctx.deterministic,
                 "record that ordered reductions were requested; results never depend on the thread count");

    InstancesOptions inst;
    auto* instances = app.add_subcommand("instances", "generate Ising instances");
    instances->require_subcommand(1);
    auto* gen = instances->add_subcommand("gen", "write one or more instances");
    gen->add_option("--class", inst.cls, "sk7, dense-maxcut or cubic-maxcut");
    gen->add_option("--n", inst.n, "spins")->check(CLI::Range(2, 100000));
    gen->add_option("--seed", inst.seed, "seed of the first instance");
    gen->add_option("--count", inst.count, "instances with consecutive seeds");
    gen->add_flag("--ground", inst.ground, "include brute-force ground states");
    gen->add_option("--out", inst.out, "output JSON");

    PrescribeOptions pre;
    auto* prescribe = app.add_subcommand("prescribe", "derive the dimensionless parameter bundle");
    prescribe->add_option("--instance", pre.instance, "instance JSON")->required();
    prescribe->add_option("--class", pre.cls, "override the instance class");
    prescribe->add_option("--A", pre.a_factor, "Floquet multiplier");
    prescribe->add_option("--kappa", pre.kappa, "loss rate in units of chi");
    prescribe->add_option("--lambda-c", pre.lambda_c, "static coupling scale");
    prescribe->add_option("--r-max", pre.r_max, "final pump amplitude");
    prescribe->add_option("--t-ramp", pre.t_ramp, "ramp duration in 1/chi");
    prescribe->add_option("--eta", pre.eta, "lambda_C over lambda_J");
    prescribe->add_flag("--preset", pre.preset, "use the loss-tuned static settings for this N and kappa");
    prescribe->add_option("--detuning-form", pre.detuning_form, "filling_ratio or printed");
    prescribe->add_option("--bandwidth", pre.bandwidth, "closed or exact frequency-swing estimate");
    prescribe->add_option("--out", pre.out, "output JSON");

    DesignSolveOptions dso;
    DesignSweepOptions dsw;
    auto* design = app.add_subcommand("design", "solve for the modulation matrix F");
    design->require_subcommand(1);
    auto* solve = design->add_subcommand("solve", "design F for one instance");
    solve->add_option("--instance", dso.instance, "instance JSON")->required();
    solve->add_option("--params", dso.params, "use the native couplings of a parameter bundle");
    solve->add_option("--mode", dso.mode, "auto, full or second");
    solve->add_option("--eta", dso.eta, "lambda_C over a uniform lambda_J (default: class prescription)");
    solve->add_option("--out", dso.out, "output JSON");
    auto* esweep = design->add_subcommand("error-sweep", "mean coupling error over (eta, N)");
    esweep->add_option("--class", dsw.cls, "problem class");
    esweep->add_option("--n", dsw.n, "size grid, e.g. 4..32 or 4:2:64");
    esweep->add_option("--eta-grid", dsw.eta_grid, "eta values");
    esweep->add_flag("--eta-times-n", dsw.eta_times_n, "grid values are eta N");
    esweep->add_option("--instances", dsw.instances, "instances per point");
    esweep->add_option("--seed", dsw.seed, "seed of the first instance");
    esweep->add_option("--mode", dsw.mode, "auto, full or second");
    esweep->add_option("--out", dsw.out, "output CSV");

    ControlOptions ctl;
    auto* control = app.add_subcommand("control", "hardware control signals");
    control->require_subcommand(1);
    auto* emit = control->add_subcommand("emit", "instantaneous frequencies and their spectra");
    emit->add_option("--params", ctl.params, "parameter bundle JSON")->required();
    emit->add_option("--design", ctl.design, "design JSON")->required();
    emit->add_option("--omega-bus-ghz", ctl.omega_bus_ghz, "bus frequency / 2 pi");
    emit->add_option("--gmax-mhz", ctl.gmax_mhz, "largest bus coupling / 2 pi");
    emit->add_option("--dmax-ghz", ctl.dmax_ghz, "largest detuning / 2 pi");
    emit->add_option("--chi-khz", ctl.chi_khz, "Kerr rate / 2 pi (default: largest allowed)");
    emit->add_option("--kappa-ratio", ctl.kappa_ratio, "kappa / chi used for the cavity lifetime");
    emit->add_option("--duration-us", ctl.duration_us, "trace length");
    emit->add_option("--sample-rate-ghz", ctl.sample_rate_ghz, "sampling rate");
    emit->add_option("--t-start-us", ctl.t_start_us, "trace start");
    emit->add_flag("--no-fast", ctl.no_fast, "omit the fast pump component");
    emit->add_option("--out", ctl.out, "trace CSV; the PSD and a JSON summary go next to it");

    RunOptions cro;
    auto* classical = app.add_subcommand("classical", "classical mean-field annealing");
    classical->require_subcommand(1);
    auto* crun = classical->add_subcommand("run", "static and dynamical ensembles");
    add_run_options(crun, cro, false);
    crun->add_option("--trace", cro.trace, "CSV of trajectory 0 amplitudes");

    RunOptions qro;
    qro.ntraj = 20;
    qro.system = "auto";
    qro.out = "q.json";
    auto* quantum = app.add_subcommand("quantum", "quantum annealing in a truncated Fock basis");
    quantum->require_subcommand(1);
    auto* qrun = quantum->add_subcommand("run", "Schroedinger or quantum-jump ensembles");
    add_run_options(qrun, qro, true);
    qrun->add_option("--levels", qro.levels, "Fock levels per mode")->check(CLI::Range(2, 64));
    qrun->add_flag("--density", qro.density, "position and momentum densities of one final state (N = 2)");
    qrun->add_flag("--allow-large", qro.allow_large, "lift the mode-count limits");

    ScalingOptions sco;
    auto* scaling = app.add_subcommand("scaling", "largest Kerr rate under hardware limits");
    scaling->require_subcommand(1);
    auto* ssweep = scaling->add_subcommand("sweep", "chi_max over N and one hardware limit");
    ssweep->add_option("--class", sco.cls, "problem class");
    ssweep->add_option("--n", sco.n, "size grid");
    ssweep->add_option("--gmax-mhz", sco.gmax_mhz, "g_max / 2 pi, value or grid");
    ssweep->add_option("--dmax-ghz", sco.dmax_ghz, "Delta_max / 2 pi, value or grid");
    ssweep->add_option("--kappa-ratio", sco.kappa_ratio, "kappa / chi");
    ssweep->add_option("--A", sco.a_factor, "Floquet multiplier");
    ssweep->add_option("--out", sco.out, "output CSV; a JSON copy goes next to it");

    PipelineOptions pip;
    auto* pipeline = app.add_subcommand("pipeline", "instance to result in one go");
    pipeline->require_subcommand(1);
    auto* prun = pipeline->add_subcommand("run", "instance, prescribe, design, simulate, report");
    prun->add_option("--class", pip.cls, "problem class");
    prun->add_option("--n", pip.n, "spins")->check(CLI::Range(2, 24));
    prun->add_option("--seed", pip.seed, "seed");
    prun->add_option("--mode", pip.mode, "classical or quantum");
    prun->add_option("--ntraj", pip.ntraj, "trajectories");
    prun->add_option("--kappa", pip.kappa, "loss rate in units of chi");
    prun->add_option("--A", pip.a_factor, "Floquet multiplier");
    prun->add_option("--t-ramp", pip.t_ramp, "ramp duration in 1/chi");
    prun->add_option("--levels", pip.levels, "Fock levels per mode (quantum)");
    prun->add_option("--samples", pip.samples, "recorded time points");
    prun->add_option("--system", pip.system, "both, static, dynamical or auto");
    prun->add_option("--out-dir", pip.out_dir, "output directory");

    BenchOptions ben;
    auto* bench = app.add_subcommand("bench", "timing runs");
    bench->require_subcommand(1);
    auto* bdesign = bench->add_subcommand("design", "design-solve wall clock per N");
    bdesign->add_option("--n", ben.n, "size grid");
    bdesign->add_option("--instances", ben.instances, "SK7 instances per N");
    bdesign->add_option("--seed", ben.seed, "seed of the first instance");
    bdesign->add_option("--mode", ben.mode, "auto, full or second");
    bdesign->add_option("--out", ben.out, "timing CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return BadInput;
    }

    if (const char* dir = std::getenv("KPO_OUTPUT_DIR"); dir && *dir)
        ctx.output_dir = dir;
    if (ctx.deterministic && ctx.threads == 0)
        ctx.threads = 1;
    ctx.manifest.argv.assign(argv, argv + argc);
    ctx.manifest.threads = ctx.threads;
    ctx.manifest.deterministic = ctx.deterministic;

    try {
        if (gen->parsed()) {
            ctx.manifest.command = "instances gen";
            cmd_instances(ctx, inst);
        } else if (prescribe->parsed()) {
            ctx.manifest.command = "prescribe";
            cmd_prescribe(ctx, pre);
        } else if (solve->parsed()) {
            ctx.manifest.command = "design solve";
            cmd_design_solve(ctx, dso);
        } else if (esweep->parsed()) {
            ctx.manifest.command = "design error-sweep";
            cmd_design_sweep(ctx, dsw);
        } else if (emit->parsed()) {
            ctx.manifest.command = "control emit";
            cmd_control_emit(ctx, ctl);
        } else if (crun->parsed()) {
            ctx.manifest.command = "classical run";
            cmd_classical_run(ctx, cro);
        } else if (qrun->parsed()) {
            ctx.manifest.command = "quantum run";
            cmd_quantum_run(ctx, qro);
        } else if (ssweep->parsed()) {
            ctx.manifest.command = "scaling sweep";
            cmd_scaling_sweep(ctx, sco);
        } else if (prun->parsed()) {
            ctx.manifest.command = "pipeline run";
            cmd_pipeline(ctx, pip);
        } else if (bdesign->parsed()) {
            ctx.manifest.command = "bench design";
            cmd_bench_design(ctx, ben);
        }
    } catch (const kpo::InvalidInput& e) {
        std::cerr << "kpo: [" << ctx.stage << "] invalid input: " << e.what() << '\n';
        return BadInput;
    } catch (const kpo::NumericalFailure& e) {
        std::cerr << "kpo: [" << ctx.stage << "] numerical failure: " << e.what() << '\n';
        return Numerical;
    } catch (const kpo::ResourceLimit& e) {
        std::cerr << "kpo: [" << ctx.stage << "] resource limit: " << e.what() << '\n';
        return Resource;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "kpo: [" << ctx.stage << "] " << e.what() << '\n';
        return BadInput;
    }
    return Ok;
}

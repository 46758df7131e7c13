#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "manifest.hpp"

namespace kpo::cli {

// Shared state for one invocation. `stage` names the step that is running so
// failures can be reported against it.
struct Context {
    std::string stage = "cli";
    int threads = 0;
    bool deterministic = false;
    std::filesystem::path output_dir;      // from KPO_OUTPUT_DIR, may be empty
    Manifest manifest;

    std::filesystem::path out_path(const std::string& p) const;
    std::string read_input(const std::string& p);
    void emit(const std::filesystem::path& p, const std::string& text);
    void write_manifest(const std::filesystem::path& p);

    template <class F>
    auto timed(const char* name, F&& f) {
        stage = name;
        const auto t0 = std::chrono::steady_clock::now();
        auto finish = [&] {
            manifest.timing.emplace_back(
                name, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
        };
        if constexpr (std::is_void_v<decltype(f())>) {
            f();
            finish();
        } else {
            auto r = f();
            finish();
            return r;
        }
    }
};

struct InstancesOptions {
    std::string cls = "sk7";
    int n = 8;
    std::uint64_t seed = 1;
    int count = 1;
    bool ground = false;
    std::string out = "instance.json";
};

struct PrescribeOptions {
    std::string instance;
    std::string cls;                       // empty: class recorded in the instance
    double a_factor = 100.0;
    double kappa = 0.0;
    std::optional<double> lambda_c, r_max, t_ramp, eta;
    bool preset = false;
    std::string detuning_form = "filling_ratio";
    std::string bandwidth = "closed";
    std::string out = "params.json";
};

struct DesignSolveOptions {
    std::string instance;
    std::string params;                    // optional; uniform native couplings otherwise
    std::string mode = "auto";
    std::optional<double> eta;
    std::string out = "design.json";
};

struct DesignSweepOptions {
    std::string cls = "sk7";
    std::string n = "4..32";
    std::string eta_grid = "0.2,0.4,0.8,1.6";
    bool eta_times_n = false;              // grid values are eta N
    int instances = 10;
    std::uint64_t seed = 1;
    std::string mode = "auto";
    std::string out = "error_sweep.csv";
};

struct ControlOptions {
    std::string params, design;
    double omega_bus_ghz = 10.0;
    double gmax_mhz = 20.0;
    double dmax_ghz = 5.0;
    std::optional<double> chi_khz;         // default: chi_max under the limits
    double kappa_ratio = 0.1;
    std::optional<double> duration_us;
    std::optional<double> sample_rate_ghz;
    double t_start_us = 0.0;
    bool no_fast = false;
    std::string out = "traces.csv";
};

// Shared by classical and quantum runs.
struct RunOptions {
    std::string instance, params, design;
    std::optional<double> a_factor;
    std::optional<double> kappa;
    int ntraj = 100;
    std::uint64_t seed = 1;
    std::string system = "both";
    int samples = 101;
    std::optional<double> t_final;
    std::optional<double> dt;
    std::string out = "result.json";
    std::string csv;                       // default: next to --out
    // classical
    std::string trace;
    // quantum
    int levels = 12;
    bool density = false;
    bool allow_large = false;
};

struct ScalingOptions {
    std::string cls = "sk7";
    std::string n = "4:2:4096";
    std::string gmax_mhz = "20";
    std::string dmax_ghz = "5";
    double kappa_ratio = 0.1;
    std::optional<double> a_factor;
    std::string out = "scaling.csv";
};

struct PipelineOptions {
    std::string cls = "sk7";
    int n = 8;
    std::uint64_t seed = 1;
    std::string mode = "classical";
    std::optional<int> ntraj;
    double kappa = 0.0;
    std::optional<double> a_factor;
    std::optional<double> t_ramp;
    int levels = 12;
    int samples = 101;
    std::string system = "auto";
    std::string out_dir;
};

struct BenchOptions {
    std::string n = "50,100,250";
    int instances = 10;
    std::uint64_t seed = 1;
    std::string mode = "second";
    std::string out = "bench_design.csv";
};

void cmd_instances(Context& ctx, const InstancesOptions& o);
void cmd_prescribe(Context& ctx, const PrescribeOptions& o);
void cmd_design_solve(Context& ctx, const DesignSolveOptions& o);
void cmd_design_sweep(Context& ctx, const DesignSweepOptions& o);
void cmd_control_emit(Context& ctx, const ControlOptions& o);
void cmd_classical_run(Context& ctx, const RunOptions& o);
void cmd_quantum_run(Context& ctx, const RunOptions& o);
void cmd_scaling_sweep(Context& ctx, const ScalingOptions& o);
void cmd_pipeline(Context& ctx, const PipelineOptions& o);
void cmd_bench_design(Context& ctx, const BenchOptions& o);

} // namespace kpo::cli

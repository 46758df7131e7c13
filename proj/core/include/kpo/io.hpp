#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "kpo/classical.hpp"
#include "kpo/control.hpp"
#include "kpo/floquet.hpp"
#include "kpo/ising.hpp"
#include "kpo/prescription.hpp"
#include "kpo/quantum.hpp"
#include "kpo/scaling.hpp"

// JSON and CSV exchange formats. Dimensionless files carry
// "units": "chi" (rates in chi, times in 1/chi); control and scaling outputs
// are in SI units and say so.
namespace kpo::io {

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

// "entries" holds the upper triangle row by row, i < j.
std::string instance_json(const CouplingMatrix& c, const GroundStateSet* ground = nullptr);
CouplingMatrix parse_instance(const std::string& json);

std::string params_json(const AnnealerParams& p);
AnnealerParams parse_params(const std::string& json);

// The instance is embedded so a design file is self-contained.
std::string design_json(const DesignSolution& d, const CouplingMatrix& c, double eta, double lambda_c);
DesignSolution parse_design(const std::string& json);
CouplingMatrix design_instance(const std::string& json);

std::string scaling_json(const std::vector<ScalingPoint>& points, ProblemClass cls, double kappa_ratio);
std::string scaling_csv(const std::vector<ScalingPoint>& points);

struct ClassicalRecord {
    const EnsembleResult* static_run = nullptr;
    const EnsembleResult* dynamical_run = nullptr;
    ClassicalConfig config;
    const GroundStateSet* ground = nullptr;
    const CouplingMatrix* instance = nullptr;
    const AnnealerParams* params = nullptr;
};
std::string classical_json(const ClassicalRecord& r);
std::string classical_csv(const ClassicalRecord& r);

struct QuantumRecord {
    const QuantumEnsemble* static_run = nullptr;
    const QuantumEnsemble* dynamical_run = nullptr;
    QuantumConfig config;
    int n = 0;
    const GroundStateSet* ground = nullptr;
    const CouplingMatrix* instance = nullptr;
    const AnnealerParams* params = nullptr;
    std::optional<PhaseSpaceDensity> density;   // final state of the first trajectory, N = 2
};
// Configuration probabilities are reported with each configuration added to
// its global flip.
std::string quantum_json(const QuantumRecord& r);
std::string quantum_csv(const QuantumRecord& r);

std::string control_json(const ControlPlan& plan, const SignalReport& rep, const ScalingPoint* chi);
std::string signal_csv(const SignalReport& rep);
std::string spectrum_csv(const SignalReport& rep);

// "a,b,c" -> values; used for grids on the command line
std::vector<double> parse_list(const std::string& text);

} // namespace kpo::io

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "metasense/acquisition.hpp"
#include "metasense/detection.hpp"
#include "metasense/geometry.hpp"
#include "metasense/mechanics.hpp"
#include "metasense/sensing.hpp"

namespace metasense {

/// Inconsistent or malformed scenario description.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct ChainSpec {
    int cells = 4;
    double peak_force = 6.7;                  // N, nominal per-cell peak
    double unstable_fraction = 0.4;
    double sigma_eta = 0.05;                  // spread of the imperfection draw
    std::vector<double> imperfections;        // explicit per-cell values; overrides the draw when set
};

enum class ProgramKind { SinglePull, Cyclic, Hold };

struct LoadSpec {
    ProgramKind kind = ProgramKind::SinglePull;
    int cycles = 1;
    std::optional<double> X_max;              // mm; default cells * stroke + 2
    double rate = 1.0;                        // mm/s
    double dt = 0.01;                         // s
    double hold_s = 1.0;                      // duration of a HOLD program at X = 0
};

struct OutputSpec {
    std::string trace;
    std::string events;
    std::string report;
};

struct ScenarioConfig {
    std::uint64_t seed = 1;
    ChainSpec chain;
    PlateGeometry plates;
    double eps_r = 1.0;
    double C_parasitic = 0.05;
    double coupling_alpha = 0.02;
    std::vector<double> coupling;             // optional full N x N matrix, row-major
    ConverterConfig converter;
    DetectionConfig detection;
    LoadSpec load;
    SolverOptions solver;
    OutputSpec output;

    /// Throws ConfigError on the first inconsistency found.
    void validate() const;
    double stroke() const { return cell_stroke(plates); }
    double x_max() const;
};

ScenarioConfig config_from_json(const std::string& text);
ScenarioConfig load_config(const std::string& path);
std::string config_to_json(const ScenarioConfig& cfg);

/// Four cells whose effective peaks rank cell2 < cell3 < cell1 < cell4,
/// strongest at 7 N, single pull.
ScenarioConfig reference_chain_config();

std::vector<CellParams> build_cells(const ScenarioConfig& cfg);
CapacitorModel build_capacitor(const ScenarioConfig& cfg);
LoadProgram build_program(const ScenarioConfig& cfg);

struct TraceRow {
    std::size_t step = 0;
    double t = 0.0;
    double X = 0.0;
    double F = 0.0;
    std::vector<double> x;
    std::vector<double> gap;
    std::vector<double> C;
    std::vector<Code> codes;
};

struct Trace {
    std::size_t cells = 0;
    std::vector<TraceRow> rows;
};

struct CycleReport {
    std::size_t first_step = 0;
    std::size_t last_step = 0;
    std::vector<TransitionEvent> truth;
    std::vector<DetectedEvent> detected;
    std::vector<int> truth_sequence;          // DEPLOY order
    SequenceResult detected_sequence;
    DetectionScore score;
    double work = 0.0;                        // closed integral of F dX over the cycle (mJ)
    double dissipated = 0.0;                  // snap energy released in the cycle (mJ)
};

struct RunReport {
    std::vector<CycleReport> cycles;
    double peak_force = 0.0;
    double wall_time_s = 0.0;
    bool all_exact() const;
};

struct ScenarioResult {
    std::vector<CellParams> cells;
    Trace trace;
    std::vector<TransitionEvent> events;
    RunReport report;
};

/// mechanics -> sensing -> acquisition -> detection, no file output.
ScenarioResult simulate(const ScenarioConfig& cfg);
/// simulate() and write whatever outputs the config names.
RunReport run_scenario(const ScenarioConfig& cfg);

/// Capacitance series recovered from the converter codes of a trace.
SignalSet signals_from_codes(const Trace& trace, const ConverterConfig& cc);
SignalSet signals_from_capacitance(const Trace& trace);

/// Detection restricted to each loading stroke of X.
std::vector<std::vector<DetectedEvent>> detect_per_stroke(const SignalSet& sig, const DetectionConfig& cfg);

struct NoiseRow {
    double sigma = 0.0;
    std::size_t runs = 0;
    std::size_t exact = 0;
    double accuracy() const { return runs ? static_cast<double>(exact) / static_cast<double>(runs) : 0.0; }
};

/// For every sigma, the fraction of seeds (cfg.seed, cfg.seed + 1, ...) whose
/// detected sequence matches the truth on every cycle.
std::vector<NoiseRow> noise_sweep(const ScenarioConfig& cfg, const std::vector<double>& sigmas, int seeds = 20);

/// Smallest sigma whose accuracy drops below the level, if any.
std::optional<double> first_failing_sigma(const std::vector<NoiseRow>& table, double level = 0.95);

struct ImperfectionRow {
    std::uint64_t seed = 0;
    std::vector<double> imperfections;
    std::vector<int> truth;
    std::vector<int> detected;
    bool match = false;
};

/// Draws fresh imperfections per seed (explicit values in cfg are ignored).
std::vector<ImperfectionRow> imperfection_mc(const ScenarioConfig& cfg, int draws);

}  // namespace metasense

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "metasense/geometry.hpp"
#include "metasense/io.hpp"
#include "metasense/scenario.hpp"

using namespace metasense;
using nlohmann::json;

namespace {

constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

void emit(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        write_file(path, text);
}

int cmd_simulate(const std::string& config_path, const std::string& out_dir)
{
    ScenarioConfig cfg = load_config(config_path);
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        cfg.output.trace = (dir / "trace.csv").string();
        cfg.output.events = (dir / "events.csv").string();
        cfg.output.report = (dir / "report.json").string();
    }
    const RunReport report = run_scenario(cfg);
    for (std::size_t c = 0; c < report.cycles.size(); ++c) {
        const CycleReport& cy = report.cycles[c];
        std::cout << "cycle " << c + 1 << ": truth " << json(cy.truth_sequence).dump() << " detected "
                  << json(cy.detected_sequence.sequence).dump() << (cy.score.exact_match ? " exact" : " mismatch")
                  << '\n';
    }
    std::cout << "peak force " << format_number(report.peak_force) << " N\n";
    return 0;
}

int cmd_detect(const std::string& trace_path, const std::string& truth_path, const std::string& config_path,
               std::string source, std::string events_out, const std::string& summary_out)
{
    ScenarioConfig cfg;
    if (!config_path.empty())
        cfg = load_config(config_path);

    std::ifstream is(trace_path);
    if (!is)
        throw std::runtime_error("cannot open '" + trace_path + "'");
    const Trace trace = read_trace_csv(is);
    if (trace.rows.empty())
        throw std::runtime_error("trace '" + trace_path + "' has no rows");

    if (source.empty())
        source = trace.rows.front().codes.empty() ? "capacitance" : "codes";
    const SignalSet sig = source == "codes" ? signals_from_codes(trace, cfg.converter) : signals_from_capacitance(trace);

    std::vector<DetectedEvent> detected;
    for (auto& stroke : detect_per_stroke(sig, cfg.detection))
        detected.insert(detected.end(), stroke.begin(), stroke.end());

    if (events_out.empty())
        events_out = (std::filesystem::path(trace_path).parent_path() / "detected_events.csv").string();
    std::ostringstream csv;
    write_detected_csv(csv, detected);
    emit(events_out, csv.str());

    const SequenceResult seq = sequence_from_events(detected);
    json summary;
    summary["source"] = source;
    summary["sequence"] = seq.sequence;
    summary["anomaly"] = seq.anomaly;
    summary["repeated"] = seq.repeated;
    summary["events_csv"] = events_out;
    if (!truth_path.empty()) {
        std::ifstream ts(truth_path);
        if (!ts)
            throw std::runtime_error("cannot open '" + truth_path + "'");
        const auto truth = read_events_csv(ts);
        const DetectionScore score = score_detection(detected, truth, cfg.detection.score_window);
        std::vector<int> order;
        for (const auto& e : truth)
            if (e.direction == Direction::Deploy)
                order.push_back(e.cell_id);
        summary["truth_sequence"] = order;
        summary["score"] = {{"exact_match", score.exact_match},
                            {"hit_rate", score.hit_rate},
                            {"hits", score.hits},
                            {"truth_count", score.truth_count},
                            {"false_positives", score.false_positives}};
    }
    emit(summary_out, summary.dump(2) + "\n");
    return 0;
}

int cmd_sweep_noise(const std::string& config_path, const std::vector<double>& sigmas, int seeds,
                    const std::string& out)
{
    const ScenarioConfig cfg = load_config(config_path);
    const auto table = noise_sweep(cfg, sigmas, seeds);
    std::ostringstream os;
    os << "sigma_pF,runs,exact,accuracy\n";
    for (const NoiseRow& r : table)
        os << format_number(r.sigma) << ',' << r.runs << ',' << r.exact << ',' << format_number(r.accuracy()) << '\n';
    emit(out, os.str());
    const auto star = first_failing_sigma(table);
    std::cerr << "sigma* = " << (star ? format_number(*star) + " pF" : std::string("not reached")) << '\n';
    return 0;
}

int cmd_sweep_imperfections(const std::string& config_path, int draws, const std::string& out)
{
    const ScenarioConfig cfg = load_config(config_path);
    const auto rows = imperfection_mc(cfg, draws);
    std::ostringstream os;
    os << "seed";
    for (int i = 1; i <= cfg.chain.cells; ++i)
        os << ",eta" << i;
    os << ",truth,detected,match\n";
    std::size_t exact = 0;
    auto joined = [](const std::vector<int>& v) {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i)
            s += (i ? " " : "") + std::to_string(v[i]);
        return s;
    };
    for (const ImperfectionRow& r : rows) {
        os << r.seed;
        for (double e : r.imperfections)
            os << ',' << format_number(e);
        os << ',' << joined(r.truth) << ',' << joined(r.detected) << ',' << (r.match ? 1 : 0) << '\n';
        exact += r.match ? 1 : 0;
    }
    emit(out, os.str());
    std::cerr << "exact recovery " << exact << "/" << rows.size() << '\n';
    return 0;
}

int cmd_export_geometry(int n, const std::string& out)
{
    const BeamProfile profile;
    std::ostringstream os;
    os << "s_mm,B_mm\n";
    for (const auto& [s, b] : sample_profile(profile, n))
        os << format_number(s) << ',' << format_number(b) << '\n';
    emit(out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Multistable metamaterial chain with capacitive self-sensing"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;

    auto* simulate = app.add_subcommand("simulate", "Run a scenario and write trace, events and report");
    simulate->add_option("config", config_path, "Scenario JSON")->required();
    std::string out_dir;
    simulate->add_option("--out", out_dir, "Directory for trace.csv, events.csv and report.json");

    auto* detect = app.add_subcommand("detect", "Detect deployments in a trace CSV");
    std::string trace_path;
    std::string truth_path;
    std::string source;
    std::string events_out;
    std::string summary_out;
    detect->add_option("trace", trace_path, "Trace CSV")->required();
    detect->add_option("--truth", truth_path, "Ground-truth events CSV");
    detect->add_option("--config", config_path, "Scenario JSON supplying converter and detection settings");
    detect->add_option("--source", source, "Signal to analyse")->check(CLI::IsMember({"codes", "capacitance"}));
    detect->add_option("--out-events", events_out, "Detected events CSV (default: next to the trace)");
    detect->add_option("--summary", summary_out, "Summary JSON (default: stdout)");

    auto* sweep_noise = app.add_subcommand("sweep-noise", "Sequence recovery against converter noise");
    std::vector<double> sigmas;
    int seeds = 20;
    sweep_noise->add_option("config", config_path, "Scenario JSON")->required();
    sweep_noise->add_option("--sigmas", sigmas, "Noise levels in pF")->required()->delimiter(',');
    sweep_noise->add_option("--seeds", seeds, "Seeds per noise level")->check(CLI::PositiveNumber);
    sweep_noise->add_option("--out", out, "Table CSV (default: stdout)");

    auto* sweep_imp = app.add_subcommand("sweep-imperfections", "Sequence recovery over imperfection draws");
    int draws = 100;
    sweep_imp->add_option("config", config_path, "Scenario JSON")->required();
    sweep_imp->add_option("--draws", draws, "Number of draws")->required()->check(CLI::PositiveNumber);
    sweep_imp->add_option("--out", out, "Table CSV (default: stdout)");

    auto* geometry = app.add_subcommand("export-geometry", "Sampled beam profile as CSV");
    int samples = 200;
    geometry->add_option("--samples", samples, "Number of points")->check(CLI::Range(2, 1000000));
    geometry->add_option("--out", out, "CSV path (default: stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*simulate)
            return cmd_simulate(config_path, out_dir);
        if (*detect)
            return cmd_detect(trace_path, truth_path, config_path, source, events_out, summary_out);
        if (*sweep_noise)
            return cmd_sweep_noise(config_path, sigmas, seeds, out);
        if (*sweep_imp)
            return cmd_sweep_imperfections(config_path, draws, out);
        if (*geometry)
            return cmd_export_geometry(samples, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}

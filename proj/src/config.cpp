#include <cmath>
#include <set>
#include <string>

#include "json.hpp"
#include "metasense/io.hpp"
#include "metasense/scenario.hpp"

namespace metasense {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::string& where, const std::set<std::string>& known)
{
    if (!obj.is_object())
        throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items())
        if (!known.count(item.key()))
            throw ConfigError(where + ": unknown key '" + item.key() + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key))
        return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(where + "." + key + ": " + e.what());
    }
}

std::string program_name(ProgramKind k)
{
    switch (k) {
    case ProgramKind::SinglePull: return "SINGLE_PULL";
    case ProgramKind::Cyclic: return "CYCLIC";
    case ProgramKind::Hold: return "HOLD";
    }
    return "?";
}

ProgramKind program_from_name(const std::string& s)
{
    if (s == "SINGLE_PULL")
        return ProgramKind::SinglePull;
    if (s == "CYCLIC")
        return ProgramKind::Cyclic;
    if (s == "HOLD")
        return ProgramKind::Hold;
    throw ConfigError("load.program: unknown program '" + s + "'");
}

}  // namespace

double ScenarioConfig::x_max() const
{
    return load.X_max ? *load.X_max : chain.cells * stroke() + 2.0;
}

void ScenarioConfig::validate() const
{
    auto check = [](bool ok, const std::string& msg) {
        if (!ok)
            throw ConfigError(msg);
    };
    check(chain.cells >= 1, "chain.cells must be >= 1");
    check(chain.peak_force > 0.0, "chain.peak_force_N must be positive");
    check(chain.unstable_fraction > 0.0 && chain.unstable_fraction < 1.0, "chain.unstable_fraction must lie in (0, 1)");
    check(chain.sigma_eta >= 0.0, "chain.sigma_eta must be >= 0");
    const auto n = static_cast<std::size_t>(chain.cells);
    check(chain.imperfections.empty() || chain.imperfections.size() == n,
          "chain.imperfections has " + std::to_string(chain.imperfections.size()) + " entries for "
              + std::to_string(n) + " cells");
    for (double eta : chain.imperfections)
        check(eta > -1.0, "chain.imperfections: effective peak force must stay positive");
    check(coupling.empty() || coupling.size() == n * n,
          "capacitor.coupling must be " + std::to_string(n) + "x" + std::to_string(n));
    check(load.cycles >= 1, "load.cycles must be >= 1");
    check(load.rate > 0.0, "load.rate_mm_s must be positive");
    check(load.dt > 0.0, "load.dt_s must be positive");
    check(load.hold_s >= 0.0, "load.hold_s must be >= 0");
    check(!load.X_max || *load.X_max > 0.0, "load.X_max_mm must be positive");
    check(solver.tol_x > 0.0 && solver.tol_F > 0.0 && solver.max_iter > 0, "solver tolerances must be positive");
    try {
        plates.validate();
        build_capacitor(*this).validate();
        converter.validate();
        detection.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
}

ScenarioConfig config_from_json(const std::string& text)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg;
    reject_unknown(j, "config",
                   {"seed", "chain", "plates", "capacitor", "converter", "detection", "load", "solver", "output"});
    read(j, "seed", cfg.seed, "config");

    if (j.contains("chain")) {
        const json& c = j["chain"];
        reject_unknown(c, "chain", {"cells", "peak_force_N", "unstable_fraction", "sigma_eta", "imperfections"});
        read(c, "cells", cfg.chain.cells, "chain");
        read(c, "peak_force_N", cfg.chain.peak_force, "chain");
        read(c, "unstable_fraction", cfg.chain.unstable_fraction, "chain");
        read(c, "sigma_eta", cfg.chain.sigma_eta, "chain");
        read(c, "imperfections", cfg.chain.imperfections, "chain");
    }
    if (j.contains("plates")) {
        const json& p = j["plates"];
        reject_unknown(p, "plates", {"width_mm", "height_mm", "thickness_mm", "gap_closed_mm", "gap_open_mm"});
        read(p, "width_mm", cfg.plates.width, "plates");
        read(p, "height_mm", cfg.plates.height, "plates");
        read(p, "thickness_mm", cfg.plates.plate_thickness, "plates");
        read(p, "gap_closed_mm", cfg.plates.gap_closed, "plates");
        read(p, "gap_open_mm", cfg.plates.gap_open, "plates");
    }
    if (j.contains("capacitor")) {
        const json& c = j["capacitor"];
        reject_unknown(c, "capacitor", {"eps_r", "C_parasitic_pF", "coupling_alpha", "coupling"});
        read(c, "eps_r", cfg.eps_r, "capacitor");
        read(c, "C_parasitic_pF", cfg.C_parasitic, "capacitor");
        read(c, "coupling_alpha", cfg.coupling_alpha, "capacitor");
        if (c.contains("coupling")) {
            std::vector<std::vector<double>> rows;
            read(c, "coupling", rows, "capacitor");
            for (const auto& r : rows) {
                if (r.size() != rows.size())
                    throw ConfigError("capacitor.coupling must be a square matrix");
                cfg.coupling.insert(cfg.coupling.end(), r.begin(), r.end());
            }
        }
    }
    if (j.contains("converter")) {
        const json& c = j["converter"];
        reject_unknown(c, "converter", {"L_uH", "C_board_pF", "f_ref_MHz", "bits", "noise_sigma_pF", "sample_rate_hz"});
        read(c, "L_uH", cfg.converter.L_uH, "converter");
        read(c, "C_board_pF", cfg.converter.C_board_pF, "converter");
        read(c, "f_ref_MHz", cfg.converter.f_ref_MHz, "converter");
        read(c, "bits", cfg.converter.bits, "converter");
        read(c, "noise_sigma_pF", cfg.converter.noise_sigma_pF, "converter");
        read(c, "sample_rate_hz", cfg.converter.sample_rate_hz, "converter");
    }
    if (j.contains("detection")) {
        const json& d = j["detection"];
        reject_unknown(d, "detection", {"window", "theta", "refractory", "score_window", "polarity"});
        read(d, "window", cfg.detection.window, "detection");
        read(d, "theta", cfg.detection.theta, "detection");
        read(d, "refractory", cfg.detection.refractory, "detection");
        read(d, "score_window", cfg.detection.score_window, "detection");
        std::string pol = "falling";
        read(d, "polarity", pol, "detection");
        if (pol == "falling")
            cfg.detection.polarity = Polarity::Falling;
        else if (pol == "rising")
            cfg.detection.polarity = Polarity::Rising;
        else
            throw ConfigError("detection.polarity must be 'falling' or 'rising'");
    }
    if (j.contains("load")) {
        const json& l = j["load"];
        reject_unknown(l, "load", {"program", "cycles", "X_max_mm", "rate_mm_s", "dt_s", "hold_s"});
        std::string prog = "SINGLE_PULL";
        read(l, "program", prog, "load");
        cfg.load.kind = program_from_name(prog);
        read(l, "cycles", cfg.load.cycles, "load");
        if (l.contains("X_max_mm")) {
            double xm = 0.0;
            read(l, "X_max_mm", xm, "load");
            cfg.load.X_max = xm;
        }
        read(l, "rate_mm_s", cfg.load.rate, "load");
        read(l, "dt_s", cfg.load.dt, "load");
        read(l, "hold_s", cfg.load.hold_s, "load");
    }
    if (j.contains("solver")) {
        const json& s = j["solver"];
        reject_unknown(s, "solver", {"tol_x_mm", "tol_F_N", "max_iter"});
        read(s, "tol_x_mm", cfg.solver.tol_x, "solver");
        read(s, "tol_F_N", cfg.solver.tol_F, "solver");
        read(s, "max_iter", cfg.solver.max_iter, "solver");
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        reject_unknown(o, "output", {"trace", "events", "report"});
        read(o, "trace", cfg.output.trace, "output");
        read(o, "events", cfg.output.events, "output");
        read(o, "report", cfg.output.report, "output");
    }
    cfg.converter.seed = cfg.seed;
    cfg.validate();
    return cfg;
}

ScenarioConfig load_config(const std::string& path)
{
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError(e.what());
    }
    return config_from_json(text);
}

std::string config_to_json(const ScenarioConfig& cfg)
{
    json j;
    j["seed"] = cfg.seed;
    j["chain"] = {{"cells", cfg.chain.cells},
                  {"peak_force_N", cfg.chain.peak_force},
                  {"unstable_fraction", cfg.chain.unstable_fraction},
                  {"sigma_eta", cfg.chain.sigma_eta}};
    if (!cfg.chain.imperfections.empty())
        j["chain"]["imperfections"] = cfg.chain.imperfections;
    j["plates"] = {{"width_mm", cfg.plates.width},
                   {"height_mm", cfg.plates.height},
                   {"thickness_mm", cfg.plates.plate_thickness},
                   {"gap_closed_mm", cfg.plates.gap_closed},
                   {"gap_open_mm", cfg.plates.gap_open}};
    j["capacitor"] = {{"eps_r", cfg.eps_r}, {"C_parasitic_pF", cfg.C_parasitic}, {"coupling_alpha", cfg.coupling_alpha}};
    if (!cfg.coupling.empty()) {
        const auto n = static_cast<std::size_t>(cfg.chain.cells);
        json rows = json::array();
        for (std::size_t i = 0; i < n; ++i)
            rows.push_back(std::vector<double>(cfg.coupling.begin() + static_cast<long>(i * n),
                                               cfg.coupling.begin() + static_cast<long>((i + 1) * n)));
        j["capacitor"]["coupling"] = rows;
    }
    j["converter"] = {{"L_uH", cfg.converter.L_uH},
                      {"C_board_pF", cfg.converter.C_board_pF},
                      {"f_ref_MHz", cfg.converter.f_ref_MHz},
                      {"bits", cfg.converter.bits},
                      {"noise_sigma_pF", cfg.converter.noise_sigma_pF},
                      {"sample_rate_hz", cfg.converter.sample_rate_hz}};
    j["detection"] = {{"window", cfg.detection.window},
                      {"theta", cfg.detection.theta},
                      {"refractory", cfg.detection.refractory},
                      {"score_window", cfg.detection.score_window},
                      {"polarity", cfg.detection.polarity == Polarity::Falling ? "falling" : "rising"}};
    j["load"] = {{"program", program_name(cfg.load.kind)},
                 {"cycles", cfg.load.cycles},
                 {"rate_mm_s", cfg.load.rate},
                 {"dt_s", cfg.load.dt},
                 {"hold_s", cfg.load.hold_s}};
    if (cfg.load.X_max)
        j["load"]["X_max_mm"] = *cfg.load.X_max;
    j["solver"] = {{"tol_x_mm", cfg.solver.tol_x}, {"tol_F_N", cfg.solver.tol_F}, {"max_iter", cfg.solver.max_iter}};
    if (!cfg.output.trace.empty() || !cfg.output.events.empty() || !cfg.output.report.empty())
        j["output"] = {{"trace", cfg.output.trace}, {"events", cfg.output.events}, {"report", cfg.output.report}};
    return j.dump(2) + "\n";
}

}  // namespace metasense

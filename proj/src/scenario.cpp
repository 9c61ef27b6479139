#include "metasense/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>
#include <thread>

#include "metasense/io.hpp"

namespace metasense {

namespace {

// Runs fn(i) for i in [0, n) on a small worker pool. Results must be written
// to per-index slots so the outcome does not depend on scheduling.
template <class Fn>
void parallel_for(std::size_t n, Fn fn)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(n, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto body = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            if (failed)
                return;
            try {
                fn(i);
            } catch (...) {
                if (!failed.exchange(true))
                    failure = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t w = 1; w < workers; ++w)
        pool.emplace_back(body);
    body();
    for (auto& t : pool)
        t.join();
    if (failure)
        std::rethrow_exception(failure);
}

// Step boundaries of each cycle, sharing the sample between cycles.
std::vector<std::pair<std::size_t, std::size_t>> cycle_ranges(const ScenarioConfig& cfg, std::size_t samples)
{
    const std::size_t last = samples - 1;
    if (cfg.load.kind != ProgramKind::Cyclic)
        return {{0, last}};
    const auto n = static_cast<std::size_t>(cfg.load.cycles);
    const std::size_t per_cycle = last / n;
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t c = 0; c < n; ++c)
        out.emplace_back(c * per_cycle, c + 1 == n ? last : (c + 1) * per_cycle);
    return out;
}

std::vector<double> displacement_series(const ScenarioConfig& cfg)
{
    if (cfg.load.kind == ProgramKind::Hold) {
        const auto steps = static_cast<std::size_t>(std::ceil(cfg.load.hold_s / cfg.load.dt - 1e-9));
        return std::vector<double>(steps + 1, 0.0);
    }
    return discretize(build_program(cfg));
}

}  // namespace

bool RunReport::all_exact() const
{
    return std::all_of(cycles.begin(), cycles.end(), [](const CycleReport& c) { return c.score.exact_match; });
}

ScenarioConfig reference_chain_config()
{
    ScenarioConfig cfg;
    cfg.chain.cells = 4;
    cfg.chain.peak_force = 6.7;
    // Effective peaks 6.767, 6.365, 6.566, 7.0015 N.
    cfg.chain.imperfections = {0.01, -0.05, -0.02, 0.045};
    cfg.load.kind = ProgramKind::SinglePull;
    return cfg;
}

std::vector<CellParams> build_cells(const ScenarioConfig& cfg)
{
    const auto n = static_cast<std::size_t>(cfg.chain.cells);
    std::vector<CellParams> cells(n);
    std::mt19937_64 rng = make_stream(cfg.seed, "imperfections");
    std::normal_distribution<double> draw(0.0, cfg.chain.sigma_eta > 0.0 ? cfg.chain.sigma_eta : 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        CellParams& c = cells[i];
        c.id = static_cast<int>(i) + 1;
        c.stroke = cfg.stroke();
        c.unstable_fraction = cfg.chain.unstable_fraction;
        c.peak_force = cfg.chain.peak_force;
        if (!cfg.chain.imperfections.empty())
            c.imperfection = cfg.chain.imperfections[i];
        else if (cfg.chain.sigma_eta > 0.0)
            c.imperfection = draw(rng);
        if (!(c.effective_peak() > 0.0))
            throw ConfigError("imperfection draw for cell " + std::to_string(c.id) + " gives a non-positive peak force");
    }
    return cells;
}

CapacitorModel build_capacitor(const ScenarioConfig& cfg)
{
    const auto n = static_cast<std::size_t>(cfg.chain.cells);
    CapacitorModel cm;
    cm.plates = cfg.plates;
    cm.eps_r = cfg.eps_r;
    cm.C_parasitic = cfg.C_parasitic;
    cm.coupling = cfg.coupling.empty() ? CouplingMatrix(n, cfg.coupling_alpha) : CouplingMatrix(n, cfg.coupling);
    return cm;
}

LoadProgram build_program(const ScenarioConfig& cfg)
{
    LoadProgram p;
    p.dX = cfg.load.rate * cfg.load.dt;
    const double xm = cfg.x_max();
    switch (cfg.load.kind) {
    case ProgramKind::SinglePull:
        p.waypoints = {xm};
        break;
    case ProgramKind::Cyclic:
        for (int c = 0; c < cfg.load.cycles; ++c) {
            p.waypoints.push_back(xm);
            p.waypoints.push_back(0.0);
        }
        break;
    case ProgramKind::Hold:
        break;
    }
    return p;
}

SignalSet signals_from_codes(const Trace& trace, const ConverterConfig& cc)
{
    SignalSet sig;
    sig.channels.assign(trace.cells, std::vector<double>(trace.rows.size()));
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const TraceRow& r = trace.rows[k];
        if (r.codes.size() != trace.cells)
            throw std::invalid_argument("signals_from_codes: trace row without converter codes");
        for (std::size_t c = 0; c < trace.cells; ++c)
            sig.channels[c][k] = code_to_capacitance(cc, r.codes[c]);
        sig.X.push_back(r.X);
        sig.steps.push_back(r.step);
    }
    return sig;
}

SignalSet signals_from_capacitance(const Trace& trace)
{
    SignalSet sig;
    sig.channels.assign(trace.cells, std::vector<double>(trace.rows.size()));
    for (std::size_t k = 0; k < trace.rows.size(); ++k) {
        const TraceRow& r = trace.rows[k];
        if (r.C.size() != trace.cells)
            throw std::invalid_argument("signals_from_capacitance: trace row without capacitance columns");
        for (std::size_t c = 0; c < trace.cells; ++c)
            sig.channels[c][k] = r.C[c];
        sig.X.push_back(r.X);
        sig.steps.push_back(r.step);
    }
    return sig;
}

std::vector<std::vector<DetectedEvent>> detect_per_stroke(const SignalSet& sig, const DetectionConfig& cfg)
{
    sig.validate(1);
    if (sig.X.empty())
        throw std::invalid_argument("detect_per_stroke: signal set carries no displacement column");
    std::vector<std::vector<DetectedEvent>> out;
    for (const auto& [first, last] : loading_strokes(sig.X)) {
        const std::size_t len = last - first + 1;
        if (len < 3 || len < static_cast<std::size_t>(cfg.window))
            continue;
        out.push_back(detect_pipeline(slice(sig, first, last), cfg));
    }
    return out;
}

ScenarioResult simulate(const ScenarioConfig& cfg)
{
    const auto t0 = std::chrono::steady_clock::now();
    cfg.validate();

    ScenarioResult res;
    res.cells = build_cells(cfg);
    const CapacitorModel cm = build_capacitor(cfg);
    const std::vector<double> xs = displacement_series(cfg);
    std::mt19937_64 noise = make_stream(cfg.seed, "noise");

    SolverOptions opts = cfg.solver;
    opts.max_step = std::max(opts.max_step, cfg.load.rate * cfg.load.dt);

    const std::size_t n = res.cells.size();
    res.trace.cells = n;
    res.trace.rows.reserve(xs.size());

    auto record = [&](std::size_t k, const ChainState& s) {
        TraceRow row;
        row.step = k;
        row.t = static_cast<double>(k) * cfg.load.dt;
        row.X = s.X;
        row.F = s.F;
        row.x = s.x;
        row.gap.resize(n);
        for (std::size_t i = 0; i < n; ++i)
            row.gap[i] = gap_from_displacement(cm.plates, plate_travel(s.x[i]));
        const SensorFrame frame = sensor_frame(cm, s, k);
        row.C = frame.C;
        row.codes = acquire(cfg.converter, frame, noise).codes;
        res.report.peak_force = std::max(res.report.peak_force, s.F);
        res.trace.rows.push_back(std::move(row));
    };

    ChainState state = ChainState::at_rest(n);
    record(0, state);
    for (std::size_t k = 1; k < xs.size(); ++k) {
        StepResult r = step_load(state, res.cells, xs[k], k, opts);
        state = std::move(r.state);
        res.events.insert(res.events.end(), r.events.begin(), r.events.end());
        record(k, state);
    }

    const SignalSet signals = signals_from_codes(res.trace, cfg.converter);
    for (const auto& [first, last] : cycle_ranges(cfg, xs.size())) {
        CycleReport cy;
        cy.first_step = first;
        cy.last_step = last;
        for (const TransitionEvent& e : res.events) {
            if (e.step_index > first && e.step_index <= last) {
                cy.truth.push_back(e);
                cy.dissipated += e.dissipated;
                if (e.direction == Direction::Deploy)
                    cy.truth_sequence.push_back(e.cell_id);
            }
        }
        for (std::size_t k = first; k < last; ++k) {
            const TraceRow& a = res.trace.rows[k];
            const TraceRow& b = res.trace.rows[k + 1];
            cy.work += 0.5 * (a.F + b.F) * (b.X - a.X);
        }
        for (auto& stroke : detect_per_stroke(slice(signals, first, last), cfg.detection))
            cy.detected.insert(cy.detected.end(), stroke.begin(), stroke.end());
        cy.detected_sequence = sequence_from_events(cy.detected);
        cy.score = score_detection(cy.detected, cy.truth, cfg.detection.score_window);
        res.report.cycles.push_back(std::move(cy));
    }

    res.report.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return res;
}

RunReport run_scenario(const ScenarioConfig& cfg)
{
    ScenarioResult res = simulate(cfg);
    if (!cfg.output.trace.empty()) {
        std::ostringstream os;
        write_trace_csv(os, res.trace);
        write_file(cfg.output.trace, os.str());
    }
    if (!cfg.output.events.empty()) {
        std::ostringstream os;
        write_events_csv(os, res.events);
        write_file(cfg.output.events, os.str());
    }
    if (!cfg.output.report.empty())
        write_file(cfg.output.report, report_to_json(res.report, res.cells));
    return res.report;
}

std::vector<NoiseRow> noise_sweep(const ScenarioConfig& cfg, const std::vector<double>& sigmas, int seeds)
{
    if (seeds < 1)
        throw std::invalid_argument("noise_sweep: need at least one seed");
    const auto k = static_cast<std::size_t>(seeds);
    std::vector<char> exact(sigmas.size() * k, 0);
    parallel_for(exact.size(), [&](std::size_t job) {
        ScenarioConfig run = cfg;
        run.output = {};
        run.seed = cfg.seed + job % k;
        run.converter.noise_sigma_pF = sigmas[job / k];
        exact[job] = simulate(run).report.all_exact() ? 1 : 0;
    });

    std::vector<NoiseRow> table;
    for (std::size_t s = 0; s < sigmas.size(); ++s) {
        NoiseRow row{sigmas[s], k, 0};
        for (std::size_t j = 0; j < k; ++j)
            row.exact += static_cast<std::size_t>(exact[s * k + j]);
        table.push_back(row);
    }
    return table;
}

std::optional<double> first_failing_sigma(const std::vector<NoiseRow>& table, double level)
{
    std::vector<NoiseRow> sorted = table;
    std::sort(sorted.begin(), sorted.end(), [](const NoiseRow& a, const NoiseRow& b) { return a.sigma < b.sigma; });
    for (const NoiseRow& r : sorted)
        if (r.accuracy() < level)
            return r.sigma;
    return std::nullopt;
}

std::vector<ImperfectionRow> imperfection_mc(const ScenarioConfig& cfg, int draws)
{
    if (draws < 1)
        throw std::invalid_argument("imperfection_mc: need at least one draw");
    std::vector<ImperfectionRow> rows(static_cast<std::size_t>(draws));
    parallel_for(rows.size(), [&](std::size_t i) {
        ScenarioConfig run = cfg;
        run.output = {};
        run.chain.imperfections.clear();
        run.seed = cfg.seed + i;
        const ScenarioResult res = simulate(run);
        ImperfectionRow& row = rows[i];
        row.seed = run.seed;
        for (const CellParams& c : res.cells)
            row.imperfections.push_back(c.imperfection);
        const CycleReport& first = res.report.cycles.front();
        row.truth = first.truth_sequence;
        row.detected = first.detected_sequence.sequence;
        row.match = res.report.all_exact();
    });
    return rows;
}

}  // namespace metasense

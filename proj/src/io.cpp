#include "metasense/io.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace metasense {

namespace {

std::vector<std::string> split_csv_line(const std::string& line)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ','))
        out.push_back(cell);
    if (!line.empty() && line.back() == ',')
        out.emplace_back();
    for (auto& c : out)
        if (!c.empty() && c.back() == '\r')
            c.pop_back();
    return out;
}

double parse_double(const std::string& s, const char* what)
{
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error(std::string("CSV: cannot parse ") + what + " value '" + s + "'");
    return v;
}

template <class Int>
Int parse_int(const std::string& s, const char* what)
{
    Int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw std::runtime_error(std::string("CSV: cannot parse ") + what + " value '" + s + "'");
    return v;
}

std::map<std::string, std::size_t> header_index(const std::vector<std::string>& header)
{
    std::map<std::string, std::size_t> idx;
    for (std::size_t i = 0; i < header.size(); ++i)
        idx[header[i]] = i;
    return idx;
}

std::size_t require_column(const std::map<std::string, std::size_t>& idx, const std::string& name)
{
    const auto it = idx.find(name);
    if (it == idx.end())
        throw std::runtime_error("CSV: missing column '" + name + "'");
    return it->second;
}

}  // namespace

std::string format_number(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_trace_csv(std::ostream& os, const Trace& trace)
{
    const std::size_t n = trace.cells;
    os << "step,X_mm,F_N";
    for (std::size_t i = 1; i <= n; ++i)
        os << ",x" << i << "_mm";
    for (std::size_t i = 1; i <= n; ++i)
        os << ",C" << i << "_pF";
    for (std::size_t i = 1; i <= n; ++i)
        os << ",code" << i;
    os << '\n';
    for (const TraceRow& r : trace.rows) {
        os << r.step << ',' << format_number(r.X) << ',' << format_number(r.F);
        for (double v : r.x)
            os << ',' << format_number(v);
        for (double v : r.C)
            os << ',' << format_number(v);
        for (Code c : r.codes)
            os << ',' << c;
        os << '\n';
    }
}

void write_events_csv(std::ostream& os, const std::vector<TransitionEvent>& events)
{
    os << "step,cell_id,direction,X_mm,F_before_N\n";
    for (const TransitionEvent& e : events)
        os << e.step_index << ',' << e.cell_id << ',' << to_string(e.direction) << ',' << format_number(e.X_at_event)
           << ',' << format_number(e.F_before) << '\n';
}

void write_detected_csv(std::ostream& os, const std::vector<DetectedEvent>& events)
{
    os << "step,cell_id,magnitude\n";
    for (const DetectedEvent& e : events)
        os << e.step_index << ',' << e.cell_id << ',' << format_number(e.magnitude) << '\n';
}

Trace read_trace_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("CSV: empty trace file");
    const auto header = split_csv_line(line);
    const auto idx = header_index(header);
    const std::size_t step_col = require_column(idx, "step");
    const std::size_t X_col = require_column(idx, "X_mm");
    const std::size_t F_col = require_column(idx, "F_N");

    Trace trace;
    while (idx.count("x" + std::to_string(trace.cells + 1) + "_mm"))
        ++trace.cells;
    const std::size_t n = trace.cells;
    if (n == 0)
        throw std::runtime_error("CSV: trace has no per-cell displacement columns");
    const bool has_C = idx.count("C1_pF") > 0;
    const bool has_codes = idx.count("code1") > 0;

    std::vector<std::size_t> x_cols, C_cols, code_cols;
    for (std::size_t i = 1; i <= n; ++i) {
        x_cols.push_back(require_column(idx, "x" + std::to_string(i) + "_mm"));
        if (has_C)
            C_cols.push_back(require_column(idx, "C" + std::to_string(i) + "_pF"));
        if (has_codes)
            code_cols.push_back(require_column(idx, "code" + std::to_string(i)));
    }

    while (std::getline(is, line)) {
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_csv_line(line);
        if (cells.size() != header.size())
            throw std::runtime_error("CSV: row has " + std::to_string(cells.size()) + " fields, header has "
                                     + std::to_string(header.size()));
        TraceRow r;
        r.step = parse_int<std::size_t>(cells[step_col], "step");
        r.X = parse_double(cells[X_col], "X_mm");
        r.F = parse_double(cells[F_col], "F_N");
        for (std::size_t c : x_cols)
            r.x.push_back(parse_double(cells[c], "x"));
        for (std::size_t c : C_cols)
            r.C.push_back(parse_double(cells[c], "C"));
        for (std::size_t c : code_cols)
            r.codes.push_back(parse_int<Code>(cells[c], "code"));
        trace.rows.push_back(std::move(r));
    }
    return trace;
}

std::vector<TransitionEvent> read_events_csv(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line))
        throw std::runtime_error("CSV: empty events file");
    const auto idx = header_index(split_csv_line(line));
    const std::size_t step_col = require_column(idx, "step");
    const std::size_t id_col = require_column(idx, "cell_id");
    const std::size_t dir_col = require_column(idx, "direction");
    const std::size_t X_col = require_column(idx, "X_mm");
    const std::size_t F_col = require_column(idx, "F_before_N");

    std::vector<TransitionEvent> events;
    while (std::getline(is, line)) {
        if (line.empty() || line == "\r")
            continue;
        const auto cells = split_csv_line(line);
        TransitionEvent e;
        e.step_index = parse_int<std::size_t>(cells.at(step_col), "step");
        e.cell_id = parse_int<int>(cells.at(id_col), "cell_id");
        e.direction = direction_from_string(cells.at(dir_col));
        e.X_at_event = parse_double(cells.at(X_col), "X_mm");
        e.F_before = parse_double(cells.at(F_col), "F_before_N");
        events.push_back(e);
    }
    return events;
}

std::string report_to_json(const RunReport& report, const std::vector<CellParams>& cells)
{
    using nlohmann::json;
    json j;
    json jc = json::array();
    for (const CellParams& c : cells)
        jc.push_back({{"id", c.id}, {"imperfection", c.imperfection}, {"effective_peak_N", c.effective_peak()}});
    j["cells"] = jc;
    j["peak_force_N"] = report.peak_force;
    j["all_exact"] = report.all_exact();

    json cycles = json::array();
    for (const CycleReport& cy : report.cycles) {
        json dets = json::array();
        for (const DetectedEvent& d : cy.detected)
            dets.push_back({{"step", d.step_index}, {"cell_id", d.cell_id}, {"magnitude", d.magnitude}});
        cycles.push_back({{"first_step", cy.first_step},
                          {"last_step", cy.last_step},
                          {"truth_sequence", cy.truth_sequence},
                          {"detected_sequence", cy.detected_sequence.sequence},
                          {"anomaly", cy.detected_sequence.anomaly},
                          {"exact_match", cy.score.exact_match},
                          {"hit_rate", cy.score.hit_rate},
                          {"false_positives", cy.score.false_positives},
                          {"work_mJ", cy.work},
                          {"dissipated_mJ", cy.dissipated},
                          {"detected_events", dets}});
    }
    j["cycles"] = cycles;
    return j.dump(2) + "\n";
}

void write_file(const std::string& path, const std::string& contents)
{
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    std::error_code ec;
    if (!parent.empty())
        std::filesystem::create_directories(parent, ec);
    std::ofstream os(path, std::ios::binary);
    if (!os)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    os << contents;
    if (!os)
        throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_file(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is)
        throw std::runtime_error("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

}  // namespace metasense

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "metasense/scenario.hpp"

namespace metasense {

/// Shortest decimal representation that round-trips, '.' separator.
std::string format_number(double v);

// Trace CSV: step,X_mm,F_N,x1_mm..xN_mm,C1_pF..CN_pF,code1..codeN
void write_trace_csv(std::ostream& os, const Trace& trace);
// Events CSV: step,cell_id,direction,X_mm,F_before_N
void write_events_csv(std::ostream& os, const std::vector<TransitionEvent>& events);
// Detected events CSV: step,cell_id,magnitude
void write_detected_csv(std::ostream& os, const std::vector<DetectedEvent>& events);

/// Reads a trace written by write_trace_csv. Missing C or code columns are
/// left empty in every row.
Trace read_trace_csv(std::istream& is);
std::vector<TransitionEvent> read_events_csv(std::istream& is);

std::string report_to_json(const RunReport& report, const std::vector<CellParams>& cells);

void write_file(const std::string& path, const std::string& contents);
std::string read_file(const std::string& path);

}  // namespace metasense

#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "metasense/sensing.hpp"

namespace metasense {

/// LC-tank capacitance-to-digital converter. The sensor sits in parallel
/// with a fixed board capacitance; the output code is the tank frequency as
/// a fraction of the reference clock, scaled to 2^bits.
struct ConverterConfig {
    double L_uH = 18.0;
    double C_board_pF = 33.0;
    double f_ref_MHz = 40.0;
    int bits = 28;
    double noise_sigma_pF = 0.001;
    double sample_rate_hz = 100.0;
    std::uint64_t seed = 0;

    void validate() const;
    double full_scale() const;   // 2^bits
};

using Code = std::uint32_t;

struct CodeFrame {
    std::vector<Code> codes;
    std::size_t step_index = 0;
};

/// Tank resonance in Hz for sensor capacitance C (pF).
double tank_frequency(const ConverterConfig& cc, double C_pF);
Code capacitance_to_code(const ConverterConfig& cc, double C_pF);
/// Exact inverse of the noiseless forward map. Throws std::out_of_range for code 0.
double code_to_capacitance(const ConverterConfig& cc, Code code);
/// d(code)/dC of the unrounded forward map, codes per pF.
double code_sensitivity(const ConverterConfig& cc, double C_pF);

/// Noisy conversion of one frame. Draws one normal deviate per channel when
/// noise is enabled; with noise_sigma_pF == 0 the rng is left untouched.
CodeFrame acquire(const ConverterConfig& cc, const SensorFrame& frame, std::mt19937_64& rng);

/// Independent generator for a named sub-stream of a top-level seed.
std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name);

}  // namespace metasense

#include "metasense/acquisition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace metasense {

namespace {

std::uint64_t splitmix64(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace

void ConverterConfig::validate() const
{
    if (!(L_uH > 0.0) || !(C_board_pF > 0.0) || !(f_ref_MHz > 0.0))
        throw std::invalid_argument("ConverterConfig: L, C_board and f_ref must be positive");
    if (bits != 28)
        throw std::invalid_argument("ConverterConfig: only 28-bit output is supported");
    if (!(noise_sigma_pF >= 0.0))
        throw std::invalid_argument("ConverterConfig: noise_sigma must be >= 0");
    if (!(sample_rate_hz > 0.0))
        throw std::invalid_argument("ConverterConfig: sample_rate must be positive");
}

double ConverterConfig::full_scale() const
{
    return std::ldexp(1.0, bits);
}

double tank_frequency(const ConverterConfig& cc, double C_pF)
{
    const double L = cc.L_uH * 1e-6;
    const double C = (C_pF + cc.C_board_pF) * 1e-12;
    return 1.0 / (2.0 * std::numbers::pi * std::sqrt(L * C));
}

Code capacitance_to_code(const ConverterConfig& cc, double C_pF)
{
    const double fs = cc.full_scale();
    const double ratio = tank_frequency(cc, std::max(C_pF, 0.0)) / (cc.f_ref_MHz * 1e6);
    const double clamped = std::clamp(ratio, 0.0, 1.0 - 1.0 / fs);
    return static_cast<Code>(std::llround(clamped * fs));
}

double code_to_capacitance(const ConverterConfig& cc, Code code)
{
    if (code == 0 || static_cast<double>(code) >= cc.full_scale())
        throw std::out_of_range("code_to_capacitance: code outside (0, 2^bits)");
    const double f = static_cast<double>(code) / cc.full_scale() * cc.f_ref_MHz * 1e6;
    const double w = 2.0 * std::numbers::pi * f;
    const double total_F = 1.0 / (cc.L_uH * 1e-6 * w * w);
    return total_F * 1e12 - cc.C_board_pF;
}

double code_sensitivity(const ConverterConfig& cc, double C_pF)
{
    // code ~ (C + C_board)^(-1/2)
    const double code = tank_frequency(cc, C_pF) / (cc.f_ref_MHz * 1e6) * cc.full_scale();
    return -0.5 * code / (C_pF + cc.C_board_pF);
}

CodeFrame acquire(const ConverterConfig& cc, const SensorFrame& frame, std::mt19937_64& rng)
{
    CodeFrame out;
    out.step_index = frame.step_index;
    out.codes.reserve(frame.C.size());
    std::normal_distribution<double> noise(0.0, cc.noise_sigma_pF);
    for (double c : frame.C) {
        const double noisy = cc.noise_sigma_pF > 0.0 ? c + noise(rng) : c;
        out.codes.push_back(capacitance_to_code(cc, std::max(noisy, 0.0)));
    }
    return out;
}

std::mt19937_64 make_stream(std::uint64_t seed, std::string_view name)
{
    return std::mt19937_64(splitmix64(seed ^ splitmix64(fnv1a(name))));
}

}  // namespace metasense

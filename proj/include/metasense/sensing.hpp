#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "metasense/geometry.hpp"
#include "metasense/mechanics.hpp"

namespace metasense {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;   // F/m
inline constexpr double kMinGap = 0.1;                             // mm, vinyl-layer floor

/// Square coupling matrix, row-major. Diagonal entries are 1.
class CouplingMatrix {
public:
    CouplingMatrix() = default;
    explicit CouplingMatrix(std::size_t n, double alpha = 0.0);
    CouplingMatrix(std::size_t n, std::vector<double> entries);

    std::size_t size() const { return n_; }
    double operator()(std::size_t i, std::size_t j) const { return m_[i * n_ + j]; }
    void validate() const;

private:
    std::size_t n_ = 0;
    std::vector<double> m_;
};

struct CapacitorModel {
    PlateGeometry plates;
    double eps_r = 1.0;
    double C_parasitic = 0.05;   // pF
    CouplingMatrix coupling;

    /// Default model for an n-channel chain with uniform off-diagonal alpha.
    static CapacitorModel uniform(std::size_t n, double alpha = 0.02);
    void validate() const;
};

struct SensorFrame {
    std::vector<double> C;   // pF per channel
    std::size_t step_index = 0;
};

/// Plate gap for a cell displacement x: gap_closed + x, floored at kMinGap.
double gap_from_displacement(const PlateGeometry& pg, double x);

/// Plate travel produced by a cell displacement. The plates separate with
/// cell elongation; compressing a closed cell leaves them at the closed gap.
double plate_travel(double x);

/// Ideal parallel-plate capacitance in pF for a gap in mm.
double plate_capacitance(const CapacitorModel& cm, double gap);

/// Per-channel capacitance including coupling and parasitic offset.
SensorFrame sensor_frame(const CapacitorModel& cm, const ChainState& state, std::size_t step_index = 0);

/// Same as sensor_frame for bare displacements.
std::vector<double> channel_capacitances(const CapacitorModel& cm, std::span<const double> x);

}  // namespace metasense

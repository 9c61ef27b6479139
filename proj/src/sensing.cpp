#include "metasense/sensing.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace metasense {

CouplingMatrix::CouplingMatrix(std::size_t n, double alpha) : n_(n), m_(n * n, alpha)
{
    for (std::size_t i = 0; i < n; ++i)
        m_[i * n + i] = 1.0;
}

CouplingMatrix::CouplingMatrix(std::size_t n, std::vector<double> entries) : n_(n), m_(std::move(entries))
{
    if (m_.size() != n * n)
        throw std::invalid_argument("CouplingMatrix: expected " + std::to_string(n * n) + " entries");
}

void CouplingMatrix::validate() const
{
    for (std::size_t i = 0; i < n_; ++i) {
        for (std::size_t j = 0; j < n_; ++j) {
            const double v = (*this)(i, j);
            if (i == j && v != 1.0)
                throw std::invalid_argument("CouplingMatrix: diagonal entries must be 1");
            if (i != j && !(v >= 0.0 && v <= 0.2))
                throw std::invalid_argument("CouplingMatrix: off-diagonal entries must lie in [0, 0.2]");
        }
    }
}

CapacitorModel CapacitorModel::uniform(std::size_t n, double alpha)
{
    CapacitorModel cm;
    cm.coupling = CouplingMatrix(n, alpha);
    return cm;
}

void CapacitorModel::validate() const
{
    plates.validate();
    if (!(eps_r >= 1.0))
        throw std::invalid_argument("CapacitorModel: eps_r must be >= 1");
    if (!(C_parasitic >= 0.0))
        throw std::invalid_argument("CapacitorModel: C_parasitic must be >= 0");
    coupling.validate();
}

double gap_from_displacement(const PlateGeometry& pg, double x)
{
    return std::max(pg.gap_closed + x, kMinGap);
}

double plate_travel(double x)
{
    return std::max(x, 0.0);
}

double plate_capacitance(const CapacitorModel& cm, double gap)
{
    if (!(gap >= kMinGap))
        throw std::domain_error("plate_capacitance: gap " + std::to_string(gap) + " mm below the vinyl floor");
    const double area_m2 = cm.plates.area_mm2() * 1e-6;
    const double farads = kVacuumPermittivity * cm.eps_r * area_m2 / (gap * 1e-3);
    return farads * 1e12;
}

std::vector<double> channel_capacitances(const CapacitorModel& cm, std::span<const double> x)
{
    const std::size_t n = x.size();
    if (cm.coupling.size() != n)
        throw std::invalid_argument("sensor_frame: coupling matrix is " + std::to_string(cm.coupling.size())
                                    + "x" + std::to_string(cm.coupling.size()) + " for " + std::to_string(n)
                                    + " cells");
    std::vector<double> ideal(n);
    for (std::size_t j = 0; j < n; ++j)
        ideal[j] = plate_capacitance(cm, gap_from_displacement(cm.plates, plate_travel(x[j])));

    std::vector<double> out(n, cm.C_parasitic);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            out[i] += cm.coupling(i, j) * ideal[j];
    return out;
}

SensorFrame sensor_frame(const CapacitorModel& cm, const ChainState& state, std::size_t step_index)
{
    return {channel_capacitances(cm, state.x), step_index};
}

}  // namespace metasense

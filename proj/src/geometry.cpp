#include "metasense/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace metasense {

void BeamProfile::validate() const
{
    if (!(h > 0.0) || !(l > 0.0))
        throw std::invalid_argument("BeamProfile: h and l must be positive");
    if (!(s_max > 0.0) || s_max > l)
        throw std::invalid_argument("BeamProfile: s_max must lie in (0, l]");
}

void CellGeometry::validate() const
{
    beam.validate();
    if (!(thickness > 0.0))
        throw std::invalid_argument("CellGeometry: thickness must be positive");
}

void PlateGeometry::validate() const
{
    if (!(width > 0.0) || !(height > 0.0) || !(plate_thickness > 0.0) || !(gap_closed > 0.0)
        || !(gap_open > 0.0))
        throw std::invalid_argument("PlateGeometry: all dimensions must be positive");
    if (!(gap_open > gap_closed))
        throw std::invalid_argument("PlateGeometry: gap_open must exceed gap_closed");
}

double beam_profile(const BeamProfile& profile, double s)
{
    profile.validate();
    if (!(s >= 0.0 && s <= profile.s_max))
        throw std::domain_error("beam_profile: s = " + std::to_string(s) + " outside [0, s_max]");
    return 0.5 * profile.h * (1.0 - std::cos(2.0 * std::numbers::pi * s / profile.l));
}

std::vector<std::pair<double, double>> sample_profile(const BeamProfile& profile, int n)
{
    if (n < 2)
        throw std::invalid_argument("sample_profile: need at least 2 points");
    profile.validate();

    std::vector<std::pair<double, double>> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // The last sample is pinned so it never overshoots s_max by rounding.
        const double s = (i == n - 1) ? profile.s_max : profile.s_max * i / (n - 1);
        out.emplace_back(s, beam_profile(profile, s));
    }
    return out;
}

double cell_stroke(const PlateGeometry& pg)
{
    pg.validate();
    return pg.gap_open - pg.gap_closed;
}

}  // namespace metasense

#pragma once

#include <utility>
#include <vector>

namespace metasense {

// All lengths are in millimetres.

/// Curved-beam profile of one bistable cell: B(s) = (h/2)(1 - cos(2*pi*s/l)).
struct BeamProfile {
    double h = 8.0;       // apex height
    double l = 18.0;      // wavelength parameter
    double s_max = 9.0;   // end of the arclength parameter range

    void validate() const;
};

struct CellGeometry {
    BeamProfile beam;
    double thickness = 7.0;   // out-of-plane depth

    void validate() const;
};

/// Parallel-plate capacitor geometry embedded in each cell.
struct PlateGeometry {
    double width = 3.8;
    double height = 7.3;
    double plate_thickness = 0.4;
    double gap_closed = 0.5;
    double gap_open = 15.3;

    void validate() const;
    double area_mm2() const { return width * height; }
};

/// Height of the beam at arclength parameter s. Throws std::domain_error
/// outside [0, s_max].
double beam_profile(const BeamProfile& profile, double s);

/// n uniformly spaced (s, B(s)) samples over [0, s_max]. n >= 2.
std::vector<std::pair<double, double>> sample_profile(const BeamProfile& profile, int n);

/// Plate travel between the closed and open stable states.
double cell_stroke(const PlateGeometry& pg);

}  // namespace metasense

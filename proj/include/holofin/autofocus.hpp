#pragma once

#include <vector>

#include "holofin/field.hpp"

namespace holofin {

// Tamura coefficient of the gradient magnitude, sqrt(std(|grad I|)/mean(|grad I|)),
// computed with central differences on interior pixels. Sharp, sparse edges give
// large values; defocused images give small ones. Throws numeric_error on a
// constant image (zero mean gradient).
double edge_sparsity_metric(const std::vector<double>& amplitude, int height, int width);

struct AutofocusResult {
    double z_um = 0.0;
    // True when the coarse peak had two interior neighbours and the parabolic
    // refinement was applied; false when the grid was degenerate or the peak
    // sat on the boundary of the search range.
    bool refined = false;
};

// Sweeps back-propagation distances over [z_min, z_max] with the given coarse
// step, scores each amplitude with edge_sparsity_metric, and refines the best
// grid point by parabolic interpolation over its two neighbours.
AutofocusResult autofocus(const IntensityImage& hologram, double z_min_um, double z_max_um,
                          double coarse_step_um);

}  // namespace holofin

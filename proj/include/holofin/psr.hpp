#pragma once

#include <utility>
#include <vector>

#include "holofin/field.hpp"

namespace holofin {

// A burst of low-resolution holograms captured at sub-pixel lateral offsets.
// Shift convention: frame k's pixel (y, x) observes the scene at coarse-grid
// position (x + dx_k, y + dy_k), so true_shifts[k] = (dx_k, dy_k) in coarse
// pixels with frame 0 at (0, 0).
struct LowResBurst {
    std::vector<IntensityImage> frames;
    std::vector<std::pair<double, double>> true_shifts;  // optional, (dx, dy)

    void validate() const;
};

// Relative shift of every frame with respect to frame 0 via phase correlation
// with quadratic sub-pixel peak interpolation. Entry 0 is exactly (0, 0).
std::vector<std::pair<double, double>> estimate_shifts(const LowResBurst& burst);

// Shift-and-add pixel super-resolution: places each coarse sample at its
// shifted position on a grid refined by `factor`, averages per-cell, and
// fills unsampled cells by interpolating the nearest filled neighbours.
// The output pitch is the coarse pitch divided by `factor`.
IntensityImage pixel_super_resolve(const LowResBurst& burst, int factor,
                                   const std::vector<std::pair<double, double>>& shifts);

}  // namespace holofin

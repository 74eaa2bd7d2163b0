#include "holofin/autofocus.hpp"

#include <cmath>
#include <complex>

#include "holofin/errors.hpp"
#include "holofin/propagate.hpp"

namespace holofin {

double edge_sparsity_metric(const std::vector<double>& amplitude, int height, int width) {
    if (height < 3 || width < 3) throw config_error("edge_sparsity_metric needs at least a 3x3 grid");
    if (amplitude.size() != static_cast<std::size_t>(height) * static_cast<std::size_t>(width))
        throw config_error("edge_sparsity_metric: data size does not match the grid");

    double sum = 0.0, sum_sq = 0.0;
    const std::size_t count =
        static_cast<std::size_t>(height - 2) * static_cast<std::size_t>(width - 2);
    for (int y = 1; y < height - 1; ++y) {
        const double* row = amplitude.data() + static_cast<std::size_t>(y) * width;
        const double* up = row - width;
        const double* down = row + width;
        for (int x = 1; x < width - 1; ++x) {
            double gx = 0.5 * (row[x + 1] - row[x - 1]);
            double gy = 0.5 * (down[x] - up[x]);
            double g = std::sqrt(gx * gx + gy * gy);
            sum += g;
            sum_sq += g * g;
        }
    }
    double mean = sum / static_cast<double>(count);
    if (!(mean > 0.0))
        throw numeric_error("edge_sparsity_metric: constant image has zero mean gradient");
    double var = sum_sq / static_cast<double>(count) - mean * mean;
    if (var < 0.0) var = 0.0;
    return std::sqrt(std::sqrt(var) / mean);
}

AutofocusResult autofocus(const IntensityImage& hologram, double z_min_um, double z_max_um,
                          double coarse_step_um) {
    hologram.validate();
    if (!(z_min_um < z_max_um)) throw config_error("autofocus: z_min must be < z_max");
    if (!(coarse_step_um > 0.0)) throw config_error("autofocus: coarse_step must be positive");

    ComplexField sensor = make_field(hologram.height, hologram.width, hologram.pixel_pitch_um,
                                     hologram.wavelength_um);
    for (std::size_t i = 0; i < hologram.data.size(); ++i)
        sensor.data[i] = {std::sqrt(hologram.data[i]), 0.0};

    const int points = static_cast<int>(std::floor((z_max_um - z_min_um) / coarse_step_um + 1e-9)) + 1;
    std::vector<double> z_grid(points), scores(points);
    std::vector<double> amp(hologram.data.size());
    for (int i = 0; i < points; ++i) {
        z_grid[i] = z_min_um + i * coarse_step_um;
        ComplexField back = angular_spectrum_propagate(sensor, -z_grid[i]);
        for (std::size_t p = 0; p < amp.size(); ++p) amp[p] = std::abs(back.data[p]);
        scores[i] = edge_sparsity_metric(amp, hologram.height, hologram.width);
    }

    int best = 0;
    for (int i = 1; i < points; ++i)
        if (scores[i] > scores[best]) best = i;

    AutofocusResult result{z_grid[best], false};
    if (points < 3 || best == 0 || best == points - 1) return result;

    double denom = scores[best - 1] - 2.0 * scores[best] + scores[best + 1];
    if (!(denom < -1e-300)) return result;  // flat or non-concave neighbourhood
    double offset = 0.5 * (scores[best - 1] - scores[best + 1]) / denom;
    result.z_um = z_grid[best] + offset * coarse_step_um;
    result.refined = true;
    return result;
}

}  // namespace holofin

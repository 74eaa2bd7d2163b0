#include "holofin/mhpr.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <numeric>

#include "holofin/errors.hpp"
#include "holofin/propagate.hpp"

namespace holofin {

void MhprConfig::validate(int plane_count) const {
    if (iterations < 1) throw config_error("MhprConfig.iterations must be >= 1");
    if (!visit_order.empty()) {
        if (static_cast<int>(visit_order.size()) != plane_count)
            throw config_error("MhprConfig.visit_order length must match the plane count");
        std::vector<bool> seen(visit_order.size(), false);
        for (int idx : visit_order) {
            if (idx < 0 || idx >= plane_count || seen[idx])
                throw config_error("MhprConfig.visit_order must be a permutation of plane indices");
            seen[idx] = true;
        }
    }
}

MhprResult mhpr_reconstruct(const HologramStack& stack, const MhprConfig& cfg) {
    stack.validate();
    const int planes = stack.planes();
    cfg.validate(planes);

    const IntensityImage& first = stack.holograms[0];
    const std::size_t n = first.data.size();

    std::vector<std::vector<double>> measured_amp(planes);
    for (int p = 0; p < planes; ++p) {
        measured_amp[p].resize(n);
        for (std::size_t i = 0; i < n; ++i)
            measured_amp[p][i] = std::sqrt(stack.holograms[p].data[i]);
    }

    // Warm start: zero-phase back-propagation of the closest hologram.
    ComplexField estimate = make_field(first.height, first.width, first.pixel_pitch_um,
                                       first.wavelength_um);
    for (std::size_t i = 0; i < n; ++i) estimate.data[i] = {measured_amp[0][i], 0.0};
    estimate = angular_spectrum_propagate(estimate, -stack.z2_um[0]);

    std::vector<int> order(planes);
    if (cfg.visit_order.empty())
        std::iota(order.begin(), order.end(), 0);
    else
        order = cfg.visit_order;

    MhprResult result{std::move(estimate), {}};
    if (cfg.record_residuals) result.residuals.reserve(cfg.iterations);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        double mismatch_sum = 0.0;
        for (int p : order) {
            ComplexField at_plane = angular_spectrum_propagate(result.field, stack.z2_um[p]);
            double sq = 0.0;
            const std::vector<double>& meas = measured_amp[p];
            for (std::size_t i = 0; i < n; ++i) {
                std::complex<double>& v = at_plane.data[i];
                double amp = std::abs(v);
                double diff = amp - meas[i];
                sq += diff * diff;
                double target = 0.5 * (amp + meas[i]);
                if (amp > 1e-300)
                    v *= target / amp;
                else
                    v = {target, 0.0};
            }
            mismatch_sum += std::sqrt(sq / static_cast<double>(n));
            result.field = angular_spectrum_propagate(at_plane, -stack.z2_um[p]);
        }
        if (cfg.record_residuals)
            result.residuals.push_back(mismatch_sum / static_cast<double>(planes));
    }
    return result;
}

void write_residuals_csv(const std::string& path, const std::vector<double>& residuals) {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw error("cannot open for writing: " + path);
    std::fputs("iteration,residual\n", f);
    for (std::size_t i = 0; i < residuals.size(); ++i)
        std::fprintf(f, "%zu,%.17g\n", i, residuals[i]);
    std::fclose(f);
}

}  // namespace holofin

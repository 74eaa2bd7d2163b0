#pragma once

#include <vector>

#include "holofin/field.hpp"

namespace holofin {

struct FieldMetrics {
    double amp_rmse = 0.0;
    double phase_rmse = 0.0;  // radians
    double amp_ssim = 1.0;
    double phase_ssim = 1.0;
};

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), C1 = 0.01^2,
// C2 = 0.03^2, averaged over positions where the full window fits. Inputs must
// lie in [0, 1] and be at least 11x11.
double ssim(const std::vector<double>& a, const std::vector<double>& b, int height, int width);

// Amplitude/phase RMSE plus SSIM on jointly min-max-normalized amplitude and
// wrapped-phase images. When align_phase is set, the single global phase
// offset given by the circular mean of the phase differences is removed from
// pred first.
FieldMetrics field_metrics(const ComplexField& pred, const ComplexField& gt, bool align_phase);

}  // namespace holofin

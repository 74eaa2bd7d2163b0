#include "holofin/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>

#include "holofin/errors.hpp"

namespace holofin {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimSigma = 1.5;
constexpr double kSsimC1 = 0.01 * 0.01;
constexpr double kSsimC2 = 0.03 * 0.03;

std::vector<double> ssim_window_weights() {
    std::vector<double> w(kSsimWindow * kSsimWindow);
    const int half = kSsimWindow / 2;
    double sum = 0.0;
    for (int y = 0; y < kSsimWindow; ++y) {
        for (int x = 0; x < kSsimWindow; ++x) {
            const double dy = y - half;
            const double dx = x - half;
            const double g = std::exp(-(dx * dx + dy * dy) / (2.0 * kSsimSigma * kSsimSigma));
            w[static_cast<std::size_t>(y) * kSsimWindow + x] = g;
            sum += g;
        }
    }
    for (double& v : w) v /= sum;
    return w;
}

double wrap_phase(double d) {
    double w = std::remainder(d, 2.0 * std::numbers::pi);
    if (w <= -std::numbers::pi) w += 2.0 * std::numbers::pi;
    return w;
}

// Min-max normalizes both images with a shared range so their relative
// structure is preserved; a flat pair maps to identical zeros.
void joint_normalize(std::vector<double>& a, std::vector<double>& b) {
    double lo = a[0];
    double hi = a[0];
    for (double v : a) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    for (double v : b) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo;
    if (span <= 0.0) {
        std::fill(a.begin(), a.end(), 0.0);
        std::fill(b.begin(), b.end(), 0.0);
        return;
    }
    for (double& v : a) v = (v - lo) / span;
    for (double& v : b) v = (v - lo) / span;
}

}  // namespace

double ssim(const std::vector<double>& a, const std::vector<double>& b, int height, int width) {
    if (height < kSsimWindow || width < kSsimWindow) {
        throw config_error("ssim: image smaller than the 11x11 window");
    }
    const std::size_t pixels = static_cast<std::size_t>(height) * static_cast<std::size_t>(width);
    if (a.size() != pixels || b.size() != pixels) {
        throw config_error("ssim: image size does not match height*width");
    }
    for (std::size_t i = 0; i < pixels; ++i) {
        if (!std::isfinite(a[i]) || !std::isfinite(b[i]) || a[i] < 0.0 || a[i] > 1.0 ||
            b[i] < 0.0 || b[i] > 1.0) {
            throw config_error("ssim: inputs must lie in [0, 1]");
        }
    }

    static const std::vector<double> weights = ssim_window_weights();
    double total = 0.0;
    std::size_t positions = 0;
    for (int y0 = 0; y0 + kSsimWindow <= height; ++y0) {
        for (int x0 = 0; x0 + kSsimWindow <= width; ++x0) {
            double mu_a = 0.0;
            double mu_b = 0.0;
            double aa = 0.0;
            double bb = 0.0;
            double ab = 0.0;
            for (int wy = 0; wy < kSsimWindow; ++wy) {
                const std::size_t row = static_cast<std::size_t>(y0 + wy) * width + x0;
                const std::size_t wrow = static_cast<std::size_t>(wy) * kSsimWindow;
                for (int wx = 0; wx < kSsimWindow; ++wx) {
                    const double wgt = weights[wrow + wx];
                    const double av = a[row + wx];
                    const double bv = b[row + wx];
                    mu_a += wgt * av;
                    mu_b += wgt * bv;
                    aa += wgt * av * av;
                    bb += wgt * bv * bv;
                    ab += wgt * av * bv;
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double num = (2.0 * mu_a * mu_b + kSsimC1) * (2.0 * cov + kSsimC2);
            const double den = (mu_a * mu_a + mu_b * mu_b + kSsimC1) * (var_a + var_b + kSsimC2);
            total += num / den;
            ++positions;
        }
    }
    return total / static_cast<double>(positions);
}

FieldMetrics field_metrics(const ComplexField& pred, const ComplexField& gt, bool align_phase) {
    pred.validate();
    gt.validate();
    if (pred.height != gt.height || pred.width != gt.width) {
        throw config_error("field_metrics: field shapes do not match");
    }
    const std::size_t n = pred.data.size();

    std::complex<double> rotation{1.0, 0.0};
    if (align_phase) {
        // Circular mean of the per-pixel phase differences; pixels where either
        // field vanishes carry no phase information and are skipped.
        std::complex<double> mean{0.0, 0.0};
        for (std::size_t i = 0; i < n; ++i) {
            const std::complex<double> d = pred.data[i] * std::conj(gt.data[i]);
            const double mag = std::abs(d);
            if (mag > 0.0) mean += d / mag;
        }
        if (std::abs(mean) > 0.0) rotation = std::conj(mean) / std::abs(mean);
    }

    std::vector<double> amp_p(n);
    std::vector<double> amp_g(n);
    std::vector<double> phase_p(n);
    std::vector<double> phase_g(n);
    double amp_sq = 0.0;
    double phase_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> p = pred.data[i] * rotation;
        const std::complex<double> g = gt.data[i];
        amp_p[i] = std::abs(p);
        amp_g[i] = std::abs(g);
        phase_p[i] = std::arg(p);
        phase_g[i] = std::arg(g);
        const double da = amp_p[i] - amp_g[i];
        const double dp = wrap_phase(phase_p[i] - phase_g[i]);
        amp_sq += da * da;
        phase_sq += dp * dp;
    }

    FieldMetrics out;
    out.amp_rmse = std::sqrt(amp_sq / static_cast<double>(n));
    out.phase_rmse = std::sqrt(phase_sq / static_cast<double>(n));
    joint_normalize(amp_p, amp_g);
    joint_normalize(phase_p, phase_g);
    out.amp_ssim = ssim(amp_p, amp_g, pred.height, pred.width);
    out.phase_ssim = ssim(phase_p, phase_g, pred.height, pred.width);
    return out;
}

}  // namespace holofin

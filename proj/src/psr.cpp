#include "holofin/psr.hpp"

#include <cmath>
#include <complex>

#include "holofin/errors.hpp"
#include "holofin/fft.hpp"

namespace holofin {

void LowResBurst::validate() const {
    if (frames.empty()) throw config_error("LowResBurst needs at least one frame");
    frames[0].validate();
    for (std::size_t k = 1; k < frames.size(); ++k) {
        frames[k].validate();
        if (frames[k].height != frames[0].height || frames[k].width != frames[0].width ||
            frames[k].pixel_pitch_um != frames[0].pixel_pitch_um ||
            frames[k].wavelength_um != frames[0].wavelength_um)
            throw config_error("LowResBurst frames must share shape and metadata");
    }
    if (!true_shifts.empty() && true_shifts.size() != frames.size())
        throw config_error("LowResBurst.true_shifts length must match the frame count");
}

namespace {

// Parabolic three-point peak refinement; returns an offset in [-0.5, 0.5].
double parabolic_offset(double left, double centre, double right) {
    double denom = left - 2.0 * centre + right;
    if (!(std::abs(denom) > 1e-300)) return 0.0;
    double off = 0.5 * (left - right) / denom;
    if (off > 0.5) off = 0.5;
    if (off < -0.5) off = -0.5;
    return off;
}

}  // namespace

std::vector<std::pair<double, double>> estimate_shifts(const LowResBurst& burst) {
    burst.validate();
    if (burst.frames.size() < 2)
        throw config_error("estimate_shifts needs at least two frames");

    const int h = burst.frames[0].height;
    const int w = burst.frames[0].width;
    const std::size_t n = static_cast<std::size_t>(h) * static_cast<std::size_t>(w);

    // Mean-subtracted spectra (removing DC keeps the normalized cross-power
    // from being dominated by the constant background).
    auto spectrum = [&](const IntensityImage& img) {
        double mean = 0.0;
        for (double v : img.data) mean += v;
        mean /= static_cast<double>(n);
        std::vector<std::complex<double>> buf(n);
        for (std::size_t i = 0; i < n; ++i) buf[i] = {img.data[i] - mean, 0.0};
        return fft::forward2d(h, w, buf);
    };

    std::vector<std::complex<double>> ref = spectrum(burst.frames[0]);

    std::vector<std::pair<double, double>> shifts;
    shifts.reserve(burst.frames.size());
    shifts.emplace_back(0.0, 0.0);

    std::vector<std::complex<double>> cross(n), corr(n);
    for (std::size_t k = 1; k < burst.frames.size(); ++k) {
        std::vector<std::complex<double>> spec = spectrum(burst.frames[k]);
        for (std::size_t i = 0; i < n; ++i) {
            std::complex<double> c = ref[i] * std::conj(spec[i]);
            double mag = std::abs(c);
            cross[i] = mag > 1e-12 ? c / mag : std::complex<double>(0.0, 0.0);
        }
        fft::inverse2d(h, w, cross.data(), corr.data());

        std::size_t peak = 0;
        double peak_val = corr[0].real();
        for (std::size_t i = 1; i < n; ++i) {
            if (corr[i].real() > peak_val) {
                peak_val = corr[i].real();
                peak = i;
            }
        }
        if (!(peak_val > 1e-6))
            throw numeric_error("estimate_shifts: no correlation peak (flat frames?)");

        int py = static_cast<int>(peak) / w;
        int px = static_cast<int>(peak) % w;
        auto at = [&](int y, int x) {
            y = ((y % h) + h) % h;
            x = ((x % w) + w) % w;
            return corr[static_cast<std::size_t>(y) * w + x].real();
        };
        double ox = parabolic_offset(at(py, px - 1), peak_val, at(py, px + 1));
        double oy = parabolic_offset(at(py - 1, px), peak_val, at(py + 1, px));

        double dx = (px <= w / 2 ? px : px - w) + ox;
        double dy = (py <= h / 2 ? py : py - h) + oy;
        shifts.emplace_back(dx, dy);
    }
    return shifts;
}

IntensityImage pixel_super_resolve(const LowResBurst& burst, int factor,
                                   const std::vector<std::pair<double, double>>& shifts) {
    burst.validate();
    if (factor < 1) throw config_error("pixel_super_resolve: factor must be >= 1");
    if (shifts.size() != burst.frames.size())
        throw config_error("pixel_super_resolve: shifts length must match the frame count");

    const int h = burst.frames[0].height;
    const int w = burst.frames[0].width;
    const int fh = h * factor;
    const int fw = w * factor;

    std::vector<double> sum(static_cast<std::size_t>(fh) * fw, 0.0);
    std::vector<int> count(sum.size(), 0);

    // A coarse pixel's footprint covers `factor` fine cells; its measurement is
    // attributed to the central one. The footprint corner is rounded first (it
    // sits near an integer, so rounding is robust) and the integer half-width
    // added afterwards to avoid half-cell rounding ties.
    const long centre = factor / 2;
    for (std::size_t k = 0; k < burst.frames.size(); ++k) {
        const IntensityImage& frame = burst.frames[k];
        const double dx = shifts[k].first;
        const double dy = shifts[k].second;
        for (int y = 0; y < h; ++y) {
            long fy = std::lround((y + dy) * factor) + centre;
            fy = ((fy % fh) + fh) % fh;
            for (int x = 0; x < w; ++x) {
                long fx = std::lround((x + dx) * factor) + centre;
                fx = ((fx % fw) + fw) % fw;
                std::size_t cell = static_cast<std::size_t>(fy) * fw + fx;
                sum[cell] += frame.data[static_cast<std::size_t>(y) * w + x];
                count[cell] += 1;
            }
        }
    }

    IntensityImage out;
    out.height = fh;
    out.width = fw;
    out.pixel_pitch_um = burst.frames[0].pixel_pitch_um / static_cast<double>(factor);
    out.wavelength_um = burst.frames[0].wavelength_um;
    out.data.assign(sum.size(), 0.0);
    for (std::size_t i = 0; i < sum.size(); ++i)
        if (count[i] > 0) out.data[i] = sum[i] / static_cast<double>(count[i]);

    // Fill unsampled cells by inverse-distance interpolation over the four
    // nearest filled cells, found by expanding square rings around the hole.
    for (int y = 0; y < fh; ++y) {
        for (int x = 0; x < fw; ++x) {
            std::size_t cell = static_cast<std::size_t>(y) * fw + x;
            if (count[cell] > 0) continue;
            std::vector<std::pair<double, std::size_t>> found;  // (distance^2, cell)
            const int max_radius = std::max(fh, fw);
            for (int r = 1; r <= max_radius; ++r) {
                for (int ny = y - r; ny <= y + r; ++ny) {
                    if (ny < 0 || ny >= fh) continue;
                    const bool edge_row = (ny == y - r || ny == y + r);
                    const int step = edge_row ? 1 : 2 * r;
                    for (int nx = x - r; nx <= x + r; nx += step) {
                        if (nx < 0 || nx >= fw) continue;
                        std::size_t nc = static_cast<std::size_t>(ny) * fw + nx;
                        if (count[nc] > 0) {
                            double d2 = static_cast<double>(ny - y) * (ny - y) +
                                        static_cast<double>(nx - x) * (nx - x);
                            found.emplace_back(d2, nc);
                        }
                    }
                }
                if (found.size() >= 4) {
                    std::sort(found.begin(), found.end());
                    found.resize(4);
                    // Cells in later rings are at Euclidean distance > r; stop
                    // once none of them could displace the current four.
                    if (static_cast<double>(r) * r >= found.back().first) break;
                }
            }
            if (found.empty()) continue;
            std::sort(found.begin(), found.end());
            if (found.size() > 4) found.resize(4);
            double acc = 0.0, weight = 0.0;
            for (const auto& [d2, nc] : found) {
                double wgt = 1.0 / std::sqrt(d2);
                acc += wgt * sum[nc] / static_cast<double>(count[nc]);
                weight += wgt;
            }
            out.data[cell] = acc / weight;
        }
    }
    out.validate();
    return out;
}

}  // namespace holofin

#ifndef HOLOFIN_TEST_UTIL_HPP
#define HOLOFIN_TEST_UTIL_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <vector>

#include "holofin/fft.hpp"
#include "holofin/field.hpp"
#include "holofin/rng.hpp"

namespace testutil {

// Bench geometry used throughout: super-resolved pitch, green illumination.
constexpr double kPitchUm = 0.37;
constexpr double kLambdaUm = 0.530;

// Random complex field whose spectrum is confined to a disc of
// band_fraction * Nyquist. At this pitch/wavelength any fraction below
// ~1.0 keeps the field free of evanescent content.
inline holofin::ComplexField random_band_limited_field(int side, std::uint64_t seed,
                                                       double band_fraction = 0.8,
                                                       double pitch = kPitchUm,
                                                       double lambda = kLambdaUm) {
    holofin::Rng rng(seed);
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(side) * side, {0.0, 0.0});
    double fcut = band_fraction * 0.5 * side; // in index units
    for (int v = 0; v < side; ++v) {
        double sv = (v <= side / 2) ? v : v - side;
        for (int u = 0; u < side; ++u) {
            double su = (u <= side / 2) ? u : u - side;
            if (sv * sv + su * su <= fcut * fcut) {
                spec[static_cast<std::size_t>(v) * side + u] =
                    std::complex<double>(rng.gaussian(), rng.gaussian());
            }
        }
    }
    holofin::ComplexField f = holofin::make_field(side, side, pitch, lambda);
    holofin::fft::inverse2d(side, side, spec.data(), f.data.data());
    return f;
}

// Unit-amplitude field with a smooth random phase of the given peak size
// (radians) — a weak phase object.
inline holofin::ComplexField weak_phase_field(int side, std::uint64_t seed, double phase_scale,
                                              double band_fraction = 0.25) {
    holofin::ComplexField g = random_band_limited_field(side, seed, band_fraction);
    double mx = 0.0;
    for (const auto& v : g.data) mx = std::max(mx, std::abs(v.real()));
    holofin::ComplexField f = holofin::make_field(side, side, kPitchUm, kLambdaUm);
    for (std::size_t i = 0; i < f.data.size(); ++i)
        f.data[i] = std::polar(1.0, phase_scale * g.data[i].real() / mx);
    return f;
}

// Transparent background with several absorbing Gaussian blobs — an
// amplitude object with crisp in-focus edges.
inline holofin::ComplexField absorbing_blobs(int side, std::uint64_t seed, int count = 6) {
    holofin::Rng rng(seed);
    std::vector<double> amp(static_cast<std::size_t>(side) * side, 1.0);
    for (int b = 0; b < count; ++b) {
        double cy = rng.uniform(0.15, 0.85) * side;
        double cx = rng.uniform(0.15, 0.85) * side;
        double sigma = rng.uniform(1.5, 3.5);
        double depth = rng.uniform(0.5, 0.9);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x) {
                double r2 = (y - cy) * (y - cy) + (x - cx) * (x - cx);
                amp[static_cast<std::size_t>(y) * side + x] *=
                    1.0 - depth * std::exp(-r2 / (2.0 * sigma * sigma));
            }
    }
    holofin::ComplexField f = holofin::make_field(side, side, kPitchUm, kLambdaUm);
    for (std::size_t i = 0; i < f.data.size(); ++i) f.data[i] = {amp[i], 0.0};
    return f;
}

// RMS difference between the amplitudes of two equally sized fields.
inline double amplitude_rmse(const holofin::ComplexField& a, const holofin::ComplexField& b) {
    double sq = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        double d = std::abs(a.data[i]) - std::abs(b.data[i]);
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(a.data.size()));
}

// Strictly positive band-limited intensity scene on a fine grid, mean ~1.
inline std::vector<double> fine_scene(int fine_side, std::uint64_t seed,
                                      double band_fraction = 0.12) {
    holofin::ComplexField g = random_band_limited_field(fine_side, seed, band_fraction);
    double mx = 0.0;
    for (const auto& v : g.data) mx = std::max(mx, std::abs(v.real()));
    std::vector<double> scene(g.data.size());
    for (std::size_t i = 0; i < scene.size(); ++i)
        scene[i] = 1.0 + 0.8 * g.data[i].real() / mx;  // in [0.2, 1.8]
    return scene;
}

// Area-downsamples a periodic fine scene into a coarse frame whose pixel
// (y, x) covers the fine block at coarse position (y + dy, x + dx).
inline holofin::IntensityImage downsample_frame(const std::vector<double>& fine, int fine_side,
                                                int factor, double dx, double dy,
                                                double coarse_pitch = kPitchUm * 6.0) {
    int side = fine_side / factor;
    holofin::IntensityImage img;
    img.height = side;
    img.width = side;
    img.pixel_pitch_um = coarse_pitch;
    img.wavelength_um = kLambdaUm;
    img.data.assign(static_cast<std::size_t>(side) * side, 0.0);
    long sy = std::lround(dy * factor);
    long sx = std::lround(dx * factor);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            double acc = 0.0;
            for (int by = 0; by < factor; ++by)
                for (int bx = 0; bx < factor; ++bx) {
                    long fy = (y * factor + sy + by) % fine_side;
                    if (fy < 0) fy += fine_side;
                    long fx = (x * factor + sx + bx) % fine_side;
                    if (fx < 0) fx += fine_side;
                    acc += fine[static_cast<std::size_t>(fy) * fine_side + fx];
                }
            img.data[static_cast<std::size_t>(y) * side + x] =
                acc / static_cast<double>(factor * factor);
        }
    return img;
}

inline double psnr(const std::vector<double>& ref, const std::vector<double>& x) {
    double peak = 0.0, mse = 0.0;
    for (double v : ref) peak = std::max(peak, v);
    for (std::size_t i = 0; i < ref.size(); ++i) {
        double d = ref[i] - x[i];
        mse += d * d;
    }
    mse /= static_cast<double>(ref.size());
    return 10.0 * std::log10(peak * peak / mse);
}

inline double max_abs_diff(const std::vector<std::complex<double>>& a,
                           const std::vector<std::complex<double>>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline double energy(const std::vector<std::complex<double>>& a) {
    double e = 0.0;
    for (const auto& v : a) e += std::norm(v);
    return e;
}

} // namespace testutil

#endif

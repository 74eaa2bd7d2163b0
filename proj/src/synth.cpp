#include "holofin/synth.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <vector>

#include "holofin/errors.hpp"
#include "holofin/fft.hpp"
#include "holofin/rng.hpp"

namespace holofin {

std::string sample_class_name(SampleClass c) {
    switch (c) {
        case SampleClass::connected_texture: return "connected-texture";
        case SampleClass::sparse_blobs: return "sparse-blobs";
        case SampleClass::resolution_target: return "resolution-target";
    }
    throw config_error("sample_class_name: invalid class");
}

SampleClass sample_class_from_name(const std::string& name) {
    if (name == "connected-texture") return SampleClass::connected_texture;
    if (name == "sparse-blobs") return SampleClass::sparse_blobs;
    if (name == "resolution-target") return SampleClass::resolution_target;
    throw config_error("sample_class_from_name: unknown class \"" + name + "\"");
}

void SampleSpec::validate() const {
    if (!(phase_lo <= phase_hi)) throw config_error("SampleSpec: phase range out of order");
    if (!(amp_lo <= amp_hi)) throw config_error("SampleSpec: amplitude range out of order");
    if (!(amp_lo > 0.0) || !(amp_hi <= 1.0))
        throw config_error("SampleSpec: amplitude range must lie in (0, 1]");
    if (!(density >= 0.0 && density <= 1.0))
        throw config_error("SampleSpec: density must lie in [0, 1]");
    if (!(feature_scale_um > 0.0)) throw config_error("SampleSpec: feature scale must be > 0");
}

namespace {

ComplexField unit_background(int side, double pitch_um, double lambda_um) {
    ComplexField f;
    f.height = f.width = side;
    f.pixel_pitch_um = pitch_um;
    f.wavelength_um = lambda_um;
    f.data.assign(static_cast<std::size_t>(side) * side, {1.0, 0.0});
    return f;
}

std::complex<double> modulated(const SampleSpec& spec, double depth) {
    const double amp = spec.amp_hi + (spec.amp_lo - spec.amp_hi) * depth;
    const double phase = spec.phase_lo + (spec.phase_hi - spec.phase_lo) * depth;
    return std::polar(amp, phase);
}

// Gaussian random field with correlation length feature_px, zero mean, unit
// variance.
std::vector<double> smooth_field(int side, double feature_px, Rng& rng) {
    const std::size_t n = static_cast<std::size_t>(side) * side;
    std::vector<std::complex<double>> noise(n), spec(n);
    for (auto& v : noise) v = {rng.gaussian(), 0.0};
    fft::forward2d(side, side, noise.data(), spec.data());
    for (int u = 0; u < side; ++u) {
        const int fu = (u <= side / 2) ? u : u - side;
        for (int v = 0; v < side; ++v) {
            const int fv = (v <= side / 2) ? v : v - side;
            const double f = std::sqrt(static_cast<double>(fu) * fu + static_cast<double>(fv) * fv) /
                             side;
            const double w = std::exp(-2.0 * std::pow(3.14159265358979324 * f * feature_px, 2.0));
            spec[static_cast<std::size_t>(u) * side + v] *= w;
        }
    }
    fft::inverse2d(side, side, spec.data(), spec.data());
    std::vector<double> g(n);
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        g[i] = spec[i].real();
        mean += g[i];
    }
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (auto& v : g) {
        v -= mean;
        var += v * v;
    }
    var /= static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0)
        for (auto& v : g) v /= sd;
    return g;
}

ComplexField connected_texture(const SampleSpec& spec, int side, double pitch_um,
                               double lambda_um, Rng& rng) {
    ComplexField out = unit_background(side, pitch_um, lambda_um);
    const std::size_t n = out.data.size();
    const std::size_t covered = static_cast<std::size_t>(std::llround(spec.density * n));
    if (covered == 0) return out;

    const std::vector<double> g = smooth_field(side, spec.feature_scale_um / pitch_um, rng);
    std::vector<double> sorted = g;
    std::nth_element(sorted.begin(), sorted.begin() + (n - covered), sorted.end());
    const double threshold = sorted[n - covered];
    const double peak = *std::max_element(g.begin(), g.end());
    const double span = (peak > threshold) ? peak - threshold : 1.0;

    for (std::size_t i = 0; i < n; ++i) {
        if (g[i] < threshold) continue;
        const double depth = std::clamp((g[i] - threshold) / span, 0.0, 1.0);
        out.data[i] = modulated(spec, depth);
    }
    return out;
}

std::size_t poisson_count(double lambda, Rng& rng) {
    if (lambda <= 0.0) return 0;
    // Knuth's product method; lambda stays small enough here (< ~200) that
    // exp(-lambda) does not underflow.
    const double limit = std::exp(-lambda);
    std::size_t k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.uniform();
    } while (p > limit);
    return k - 1;
}

ComplexField sparse_blobs(const SampleSpec& spec, int side, double pitch_um, double lambda_um,
                          Rng& rng) {
    ComplexField out = unit_background(side, pitch_um, lambda_um);
    const double feature_px = spec.feature_scale_um / pitch_um;
    const double mean_area = 3.14159265358979324 * feature_px * feature_px;
    const double lambda_count =
        spec.density * static_cast<double>(side) * side / mean_area;
    const std::size_t count = poisson_count(lambda_count, rng);

    struct Blob {
        double cx, cy, a, b, cos_t, sin_t, amp, phase;
    };
    std::vector<Blob> blobs(count);
    for (auto& blob : blobs) {
        blob.cx = rng.uniform(0.0, side);
        blob.cy = rng.uniform(0.0, side);
        blob.a = rng.uniform(0.6, 1.4) * feature_px;
        blob.b = rng.uniform(0.6, 1.4) * feature_px;
        const double theta = rng.uniform(0.0, 3.14159265358979324);
        blob.cos_t = std::cos(theta);
        blob.sin_t = std::sin(theta);
        blob.amp = rng.uniform(spec.amp_lo, spec.amp_hi);
        blob.phase = rng.uniform(spec.phase_lo, spec.phase_hi);
    }

    for (const auto& blob : blobs) {
        const double edge = 1.5 / std::min(blob.a, blob.b);  // ~1.5 px soft rim
        const double reach = std::max(blob.a, blob.b) * (1.0 + edge) + 1.0;
        const int y0 = std::max(0, static_cast<int>(std::floor(blob.cy - reach)));
        const int y1 = std::min(side - 1, static_cast<int>(std::ceil(blob.cy + reach)));
        const int x0 = std::max(0, static_cast<int>(std::floor(blob.cx - reach)));
        const int x1 = std::min(side - 1, static_cast<int>(std::ceil(blob.cx + reach)));
        for (int y = y0; y <= y1; ++y)
            for (int x = x0; x <= x1; ++x) {
                const double dx = x - blob.cx, dy = y - blob.cy;
                const double ex = (dx * blob.cos_t + dy * blob.sin_t) / blob.a;
                const double ey = (-dx * blob.sin_t + dy * blob.cos_t) / blob.b;
                const double rho = std::sqrt(ex * ex + ey * ey);
                double w;
                if (rho <= 1.0 - edge)
                    w = 1.0;
                else if (rho >= 1.0 + edge)
                    w = 0.0;
                else
                    w = 0.5 * (1.0 + std::cos(3.14159265358979324 * (rho - (1.0 - edge)) /
                                              (2.0 * edge)));
                if (w <= 0.0) continue;
                auto& px = out.data[static_cast<std::size_t>(y) * side + x];
                const std::complex<double> blob_val =
                    std::polar(1.0 + (blob.amp - 1.0) * w, blob.phase * w);
                // Overlapping blobs keep the strongest modulation.
                if (std::abs(blob_val - 1.0) > std::abs(px - 1.0)) px = blob_val;
            }
    }
    return out;
}

ComplexField resolution_target(const SampleSpec& spec, int side, double pitch_um,
                               double lambda_um) {
    ComplexField out = unit_background(side, pitch_um, lambda_um);
    const int bands = 4;
    const int band_h = side / bands;
    const double base_period = std::max(4.0, 2.0 * spec.feature_scale_um / pitch_um);
    const std::complex<double> bar = std::polar(spec.amp_lo, spec.phase_hi);
    for (int g = 0; g < bands; ++g) {
        const double period = std::max(2.0, base_period / std::pow(2.0, g));
        const int y_top = g * band_h + band_h / 8;
        const int y_bot = (g + 1) * band_h - band_h / 8;
        for (int y = y_top; y < y_bot; ++y)
            for (int x = 0; x < side; ++x)
                if (std::fmod(static_cast<double>(x), period) < 0.5 * period)
                    out.data[static_cast<std::size_t>(y) * side + x] = bar;
    }
    return out;
}

}  // namespace

ComplexField generate_sample(const SampleSpec& spec, int side, double pixel_pitch_um,
                             double wavelength_um, std::uint64_t seed) {
    spec.validate();
    if (side < 4) throw config_error("generate_sample: side must be >= 4");
    if (!(pixel_pitch_um > 0.0) || !(wavelength_um > 0.0))
        throw config_error("generate_sample: pitch and wavelength must be > 0");

    Rng rng(mix_seed(seed, 0x53594e54ULL));
    switch (spec.sample_class) {
        case SampleClass::connected_texture:
            return connected_texture(spec, side, pixel_pitch_um, wavelength_um, rng);
        case SampleClass::sparse_blobs:
            return sparse_blobs(spec, side, pixel_pitch_um, wavelength_um, rng);
        case SampleClass::resolution_target:
            return resolution_target(spec, side, pixel_pitch_um, wavelength_um);
    }
    throw config_error("generate_sample: invalid sample class");
}

namespace {

void check_square(int h, int w, const char* what) {
    if (h != w) throw config_error(std::string(what) + ": rotation requires a square FOV");
}

template <typename T>
std::vector<T> rotate_plane(const std::vector<T>& src, int side, int quarter) {
    std::vector<T> dst(src.size());
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) {
            int sy, sx;
            switch (quarter) {
                case 1: sy = x; sx = side - 1 - y; break;
                case 2: sy = side - 1 - y; sx = side - 1 - x; break;
                case 3: sy = side - 1 - x; sx = y; break;
                default: sy = y; sx = x; break;
            }
            dst[static_cast<std::size_t>(y) * side + x] =
                src[static_cast<std::size_t>(sy) * side + sx];
        }
    return dst;
}

}  // namespace

ComplexField rotate_field(const ComplexField& field, int quarter) {
    check_square(field.height, field.width, "rotate_field");
    int q = quarter % 4;
    if (q < 0) q += 4;
    ComplexField out = field;
    if (q != 0) out.data = rotate_plane(field.data, field.height, q);
    return out;
}

IntensityImage rotate_intensity(const IntensityImage& image, int quarter) {
    check_square(image.height, image.width, "rotate_intensity");
    int q = quarter % 4;
    if (q < 0) q += 4;
    IntensityImage out = image;
    if (q != 0) out.data = rotate_plane(image.data, image.height, q);
    return out;
}

HologramStack rotate_stack(const HologramStack& stack, int quarter) {
    HologramStack out;
    out.z2_um = stack.z2_um;
    out.holograms.reserve(stack.holograms.size());
    for (const auto& h : stack.holograms) out.holograms.push_back(rotate_intensity(h, quarter));
    return out;
}

FovPair augment_rotate(const FovPair& pair, std::uint64_t seed) {
    Rng rng(mix_seed(seed, 0x524f5441ULL));
    const int quarter = static_cast<int>(rng.uniform_int(4));
    FovPair out;
    out.stack = rotate_stack(pair.stack, quarter);
    out.gt = rotate_field(pair.gt, quarter);
    return out;
}

}  // namespace holofin

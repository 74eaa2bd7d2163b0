#include "holofin/propagate.hpp"

#include <cmath>

#include "holofin/errors.hpp"
#include "holofin/fft.hpp"
#include "holofin/rng.hpp"

namespace holofin {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

// Wrapped frequency index: u in [0, n) maps to u for u <= n/2, u-n above.
inline double wrapped_freq(int u, int n, double pitch_um) {
    int s = (u <= n / 2) ? u : u - n;
    return static_cast<double>(s) / (static_cast<double>(n) * pitch_um);
}
} // namespace

TransferFunction make_transfer_function(int height, int width, double pixel_pitch_um,
                                        double wavelength_um, double z_um) {
    if (!std::isfinite(z_um))
        throw config_error("propagate: z must be finite");
    TransferFunction tf;
    tf.height = height;
    tf.width = width;
    tf.pixel_pitch_um = pixel_pitch_um;
    tf.wavelength_um = wavelength_um;
    tf.z_um = z_um;
    tf.h.resize(static_cast<std::size_t>(height) * width);
    const double lam = wavelength_um;
    for (int v = 0; v < height; ++v) {
        double fy = wrapped_freq(v, height, pixel_pitch_um);
        double ly2 = (lam * fy) * (lam * fy);
        for (int u = 0; u < width; ++u) {
            double fx = wrapped_freq(u, width, pixel_pitch_um);
            double arg = 1.0 - (lam * fx) * (lam * fx) - ly2;
            std::complex<double> value(0.0, 0.0);
            if (arg >= 0.0) {
                double phase = kTwoPi * (z_um / lam) * std::sqrt(arg);
                value = std::complex<double>(std::cos(phase), std::sin(phase));
            }
            tf.h[static_cast<std::size_t>(v) * width + u] = value;
        }
    }
    return tf;
}

void apply_transfer(const TransferFunction& tf, const std::complex<double>* spectrum_in,
                    std::complex<double>* spectrum_out) {
    const std::size_t n = tf.h.size();
    for (std::size_t i = 0; i < n; ++i) spectrum_out[i] = spectrum_in[i] * tf.h[i];
}

ComplexField angular_spectrum_propagate(const ComplexField& field, double z_um) {
    field.validate();
    if (!std::isfinite(z_um))
        throw config_error("propagate: z must be finite");
    TransferFunction tf = make_transfer_function(field.height, field.width, field.pixel_pitch_um,
                                                 field.wavelength_um, z_um);
    std::vector<std::complex<double>> spec(field.data.size());
    fft::forward2d(field.height, field.width, field.data.data(), spec.data());
    apply_transfer(tf, spec.data(), spec.data());
    ComplexField out = field;
    fft::inverse2d(field.height, field.width, spec.data(), out.data.data());
    return out;
}

IntensityImage simulate_hologram(const ComplexField& sample, double z_um, double noise_sigma,
                                 std::uint64_t seed) {
    if (!(z_um > 0.0))
        throw config_error("simulate_hologram: z must be positive");
    if (noise_sigma < 0.0)
        throw config_error("simulate_hologram: noise_sigma must be >= 0");
    ComplexField propagated = angular_spectrum_propagate(sample, z_um);
    IntensityImage img;
    img.height = sample.height;
    img.width = sample.width;
    img.pixel_pitch_um = sample.pixel_pitch_um;
    img.wavelength_um = sample.wavelength_um;
    img.data.resize(propagated.data.size());
    for (std::size_t i = 0; i < propagated.data.size(); ++i)
        img.data[i] = std::norm(propagated.data[i]);
    if (noise_sigma > 0.0) {
        Rng rng(seed);
        for (double& v : img.data) {
            v += noise_sigma * rng.gaussian();
            if (v < 0.0) v = 0.0;
        }
    }
    return img;
}

HologramStack simulate_stack(const ComplexField& sample, const std::vector<double>& z_list_um,
                             double noise_sigma, std::uint64_t seed) {
    if (z_list_um.empty())
        throw config_error("simulate_stack: z list must not be empty");
    double prev = 0.0;
    for (double z : z_list_um) {
        if (!(z > prev))
            throw config_error("simulate_stack: z list must be strictly increasing and positive");
        prev = z;
    }
    HologramStack stack;
    stack.z2_um = z_list_um;
    stack.holograms.reserve(z_list_um.size());
    for (std::size_t i = 0; i < z_list_um.size(); ++i) {
        stack.holograms.push_back(
            simulate_hologram(sample, z_list_um[i], noise_sigma, mix_seed(seed, i)));
    }
    stack.validate();
    return stack;
}

} // namespace holofin

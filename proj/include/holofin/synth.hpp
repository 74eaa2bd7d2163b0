#pragma once

#include <cstdint>
#include <string>

#include "holofin/field.hpp"

namespace holofin {

enum class SampleClass { connected_texture, sparse_blobs, resolution_target };

std::string sample_class_name(SampleClass c);
SampleClass sample_class_from_name(const std::string& name);

// Synthetic transmission-sample distribution. Covered regions modulate both
// amplitude (absorption) and phase; the background is unit transmission.
struct SampleSpec {
    SampleClass sample_class = SampleClass::connected_texture;
    double phase_lo = 0.3;  // radians
    double phase_hi = 1.0;
    double amp_lo = 0.5;  // in (0, 1]
    double amp_hi = 0.8;
    double feature_scale_um = 2.0;
    double density = 0.7;  // target coverage fraction

    void validate() const;
};

// Deterministic per (spec, seed):
//  - connected_texture: a smoothed random field thresholded at the density
//    quantile; amplitude/phase track the field depth inside covered regions.
//  - sparse_blobs: Poisson-scattered soft ellipses whose expected half-max
//    coverage matches the density.
//  - resolution_target: bar groups of decreasing period (no randomness).
ComplexField generate_sample(const SampleSpec& spec, int side, double pixel_pitch_um,
                             double wavelength_um, std::uint64_t seed);

// Quarter-turn rotations (counter-clockwise), square inputs only.
ComplexField rotate_field(const ComplexField& field, int quarter);
IntensityImage rotate_intensity(const IntensityImage& image, int quarter);
HologramStack rotate_stack(const HologramStack& stack, int quarter);

struct FovPair {
    HologramStack stack;
    ComplexField gt;
};

// Applies one uniformly drawn rotation from {0, 90, 180, 270} degrees to every
// hologram and to the ground-truth field.
FovPair augment_rotate(const FovPair& pair, std::uint64_t seed);

}  // namespace holofin

#ifndef HOLOFIN_PROPAGATE_HPP
#define HOLOFIN_PROPAGATE_HPP

#include <cstdint>
#include <vector>

#include "holofin/field.hpp"

namespace holofin {

// Precomputed angular-spectrum transfer function H(fx,fy; z) for one grid
// geometry and distance. Frequencies live on the wrapped DFT grid
// fx = u/(W*pitch), fy = v/(H*pitch); evanescent components, where
// (lambda*fx)^2 + (lambda*fy)^2 > 1, are zeroed so that +z/-z propagation is
// an exact inverse pair on the propagating band.
struct TransferFunction {
    int height = 0;
    int width = 0;
    double pixel_pitch_um = 0.0;
    double wavelength_um = 0.0;
    double z_um = 0.0;
    std::vector<std::complex<double>> h; // row-major, wrapped frequency order
};

TransferFunction make_transfer_function(int height, int width, double pixel_pitch_um,
                                        double wavelength_um, double z_um);

// Free-space propagation over distance z (negative z back-propagates):
// FFT -> multiply by H -> inverse FFT. Metadata is unchanged.
ComplexField angular_spectrum_propagate(const ComplexField& field, double z_um);

// Spectrum-domain variants for callers that reuse one forward FFT across
// several distances (autofocus sweeps, MH-PR plane visits).
void apply_transfer(const TransferFunction& tf, const std::complex<double>* spectrum_in,
                    std::complex<double>* spectrum_out);

// |propagate(sample, z)|^2 with optional additive Gaussian noise of standard
// deviation noise_sigma, clipped at zero. Deterministic for a given seed.
IntensityImage simulate_hologram(const ComplexField& sample, double z_um, double noise_sigma,
                                 std::uint64_t seed);

// One simulate_hologram per z with per-plane seeds derived from `seed`.
HologramStack simulate_stack(const ComplexField& sample, const std::vector<double>& z_list_um,
                             double noise_sigma, std::uint64_t seed);

} // namespace holofin

#endif

#ifndef HOLOFIN_FIELD_HPP
#define HOLOFIN_FIELD_HPP

#include <complex>
#include <cstdint>
#include <vector>

namespace holofin {

// 2D complex optical field sampled on a square-pixel grid. Lengths are in
// micrometers throughout the library.
struct ComplexField {
    int height = 0;
    int width = 0;
    double pixel_pitch_um = 0.0;
    double wavelength_um = 0.0;
    std::vector<std::complex<double>> data; // row-major, height*width

    std::size_t size() const { return data.size(); }
    std::complex<double>& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    const std::complex<double>& at(int y, int x) const {
        return data[static_cast<std::size_t>(y) * width + x];
    }

    // Throws config_error if any invariant is violated: H,W >= 2, positive
    // pitch and wavelength, all values finite.
    void validate() const;

    bool same_geometry(const ComplexField& other) const;
};

ComplexField make_field(int height, int width, double pixel_pitch_um, double wavelength_um,
                        std::complex<double> fill = {0.0, 0.0});

// Nonnegative real intensity grid with the same metadata as ComplexField.
struct IntensityImage {
    int height = 0;
    int width = 0;
    double pixel_pitch_um = 0.0;
    double wavelength_um = 0.0;
    std::vector<double> data; // row-major

    double& at(int y, int x) { return data[static_cast<std::size_t>(y) * width + x]; }
    double at(int y, int x) const { return data[static_cast<std::size_t>(y) * width + x]; }

    void validate() const;
};

// M intensity holograms of one sample captured at strictly increasing
// sample-to-sensor distances z2.
struct HologramStack {
    std::vector<IntensityImage> holograms;
    std::vector<double> z2_um;

    int planes() const { return static_cast<int>(holograms.size()); }

    // M >= 1, shared geometry, z2 strictly increasing and positive.
    void validate() const;
};

} // namespace holofin

#endif

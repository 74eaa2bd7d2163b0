#include "holofin/field.hpp"

#include <cmath>

#include "holofin/errors.hpp"

namespace holofin {

void ComplexField::validate() const {
    if (height < 2 || width < 2)
        throw config_error("ComplexField: grid must be at least 2x2");
    if (!(pixel_pitch_um > 0.0))
        throw config_error("ComplexField: pixel_pitch must be positive");
    if (!(wavelength_um > 0.0))
        throw config_error("ComplexField: wavelength must be positive");
    if (data.size() != static_cast<std::size_t>(height) * width)
        throw config_error("ComplexField: data size does not match height*width");
    for (const auto& v : data) {
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw numeric_error("ComplexField: non-finite value");
    }
}

bool ComplexField::same_geometry(const ComplexField& other) const {
    return height == other.height && width == other.width &&
           pixel_pitch_um == other.pixel_pitch_um && wavelength_um == other.wavelength_um;
}

ComplexField make_field(int height, int width, double pixel_pitch_um, double wavelength_um,
                        std::complex<double> fill) {
    ComplexField f;
    f.height = height;
    f.width = width;
    f.pixel_pitch_um = pixel_pitch_um;
    f.wavelength_um = wavelength_um;
    f.data.assign(static_cast<std::size_t>(height) * width, fill);
    return f;
}

void IntensityImage::validate() const {
    if (height < 2 || width < 2)
        throw config_error("IntensityImage: grid must be at least 2x2");
    if (!(pixel_pitch_um > 0.0))
        throw config_error("IntensityImage: pixel_pitch must be positive");
    if (!(wavelength_um > 0.0))
        throw config_error("IntensityImage: wavelength must be positive");
    if (data.size() != static_cast<std::size_t>(height) * width)
        throw config_error("IntensityImage: data size does not match height*width");
    for (double v : data) {
        if (!std::isfinite(v))
            throw numeric_error("IntensityImage: non-finite value");
        if (v < 0.0)
            throw config_error("IntensityImage: negative intensity");
    }
}

void HologramStack::validate() const {
    if (holograms.empty())
        throw config_error("HologramStack: at least one hologram required");
    if (z2_um.size() != holograms.size())
        throw config_error("HologramStack: z2 count does not match hologram count");
    const IntensityImage& first = holograms.front();
    for (const auto& h : holograms) {
        h.validate();
        if (h.height != first.height || h.width != first.width ||
            h.pixel_pitch_um != first.pixel_pitch_um || h.wavelength_um != first.wavelength_um)
            throw config_error("HologramStack: holograms disagree on geometry");
    }
    double prev = 0.0;
    for (double z : z2_um) {
        if (!(z > prev))
            throw config_error("HologramStack: z2 must be strictly increasing and positive");
        prev = z;
    }
}

} // namespace holofin

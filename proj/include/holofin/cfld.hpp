#ifndef HOLOFIN_CFLD_HPP
#define HOLOFIN_CFLD_HPP

#include <string>

#include "holofin/field.hpp"

namespace holofin {

// CFLD binary field format, little-endian:
//   magic "CFLD", version u32 = 1, H u32, W u32, pixel_pitch f64 (um),
//   wavelength f64 (um), then H*W interleaved (re f32, im f32) row-major.
// Intensity images are stored with zero imaginary parts.
void write_cfld(const std::string& path, const ComplexField& field);
void write_cfld(const std::string& path, const IntensityImage& image);
ComplexField read_cfld(const std::string& path);
IntensityImage read_cfld_intensity(const std::string& path);

// 16-bit binary PGM (P5, maxval 65535), min-max normalized. Used for visual
// inspection only.
void write_pgm16(const std::string& path, const std::vector<double>& data, int height, int width);

} // namespace holofin

#endif

#include "holofin/cfld.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "holofin/errors.hpp"

namespace holofin {

namespace {

constexpr char kMagic[4] = {'C', 'F', 'L', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 8);
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw format_error("CFLD: truncated file: " + path);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

double get_f64(std::istream& is, const std::string& path) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8))
        throw format_error("CFLD: truncated file: " + path);
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

float get_f32(std::istream& is, const std::string& path) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4))
        throw format_error("CFLD: truncated file: " + path);
    std::uint32_t bits = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                         (static_cast<std::uint32_t>(b[2]) << 16) |
                         (static_cast<std::uint32_t>(b[3]) << 24);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void write_header(std::ostream& os, int height, int width, double pitch, double wavelength) {
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    put_u32(os, static_cast<std::uint32_t>(height));
    put_u32(os, static_cast<std::uint32_t>(width));
    put_f64(os, pitch);
    put_f64(os, wavelength);
}

} // namespace

void write_cfld(const std::string& path, const ComplexField& field) {
    field.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("CFLD: cannot open for writing: " + path);
    write_header(os, field.height, field.width, field.pixel_pitch_um, field.wavelength_um);
    for (const auto& v : field.data) {
        put_f32(os, static_cast<float>(v.real()));
        put_f32(os, static_cast<float>(v.imag()));
    }
    if (!os) throw format_error("CFLD: write failed: " + path);
}

void write_cfld(const std::string& path, const IntensityImage& image) {
    image.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("CFLD: cannot open for writing: " + path);
    write_header(os, image.height, image.width, image.pixel_pitch_um, image.wavelength_um);
    for (double v : image.data) {
        put_f32(os, static_cast<float>(v));
        put_f32(os, 0.0f);
    }
    if (!os) throw format_error("CFLD: write failed: " + path);
}

ComplexField read_cfld(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("CFLD: cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0)
        throw format_error("CFLD: bad magic in " + path);
    std::uint32_t version = get_u32(is, path);
    if (version != kVersion)
        throw format_error("CFLD: unsupported version in " + path);
    std::uint32_t h = get_u32(is, path);
    std::uint32_t w = get_u32(is, path);
    if (h < 2 || w < 2 || h > (1u << 20) || w > (1u << 20))
        throw format_error("CFLD: implausible dimensions in " + path);
    ComplexField field;
    field.height = static_cast<int>(h);
    field.width = static_cast<int>(w);
    field.pixel_pitch_um = get_f64(is, path);
    field.wavelength_um = get_f64(is, path);
    field.data.resize(static_cast<std::size_t>(h) * w);
    for (auto& v : field.data) {
        float re = get_f32(is, path);
        float im = get_f32(is, path);
        v = std::complex<double>(re, im);
    }
    try {
        field.validate();
    } catch (const error& e) {
        throw format_error("CFLD: invalid content in " + path + ": " + e.what());
    }
    return field;
}

IntensityImage read_cfld_intensity(const std::string& path) {
    ComplexField field = read_cfld(path);
    IntensityImage img;
    img.height = field.height;
    img.width = field.width;
    img.pixel_pitch_um = field.pixel_pitch_um;
    img.wavelength_um = field.wavelength_um;
    img.data.resize(field.data.size());
    for (std::size_t i = 0; i < field.data.size(); ++i) {
        if (field.data[i].imag() != 0.0)
            throw format_error("CFLD: expected intensity data (zero imaginary) in " + path);
        img.data[i] = field.data[i].real();
    }
    try {
        img.validate();
    } catch (const error& e) {
        throw format_error("CFLD: invalid intensity in " + path + ": " + e.what());
    }
    return img;
}

void write_pgm16(const std::string& path, const std::vector<double>& data, int height, int width) {
    if (data.size() != static_cast<std::size_t>(height) * width)
        throw config_error("PGM: data size mismatch");
    double lo = data[0], hi = data[0];
    for (double v : data) {
        if (!std::isfinite(v)) throw numeric_error("PGM: non-finite value");
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    double scale = (hi > lo) ? 65535.0 / (hi - lo) : 0.0;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("PGM: cannot open for writing: " + path);
    os << "P5\n" << width << " " << height << "\n65535\n";
    for (double v : data) {
        auto q = static_cast<std::uint32_t>(std::lround((v - lo) * scale));
        if (q > 65535) q = 65535;
        // PGM stores the most significant byte first
        unsigned char b[2] = {static_cast<unsigned char>(q >> 8),
                              static_cast<unsigned char>(q & 0xff)};
        os.write(reinterpret_cast<const char*>(b), 2);
    }
    if (!os) throw format_error("PGM: write failed: " + path);
}

} // namespace holofin

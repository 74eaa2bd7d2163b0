#include "holofin/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>

#include "holofin/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace holofin::fin {

namespace {

constexpr char kMagic[4] = {'F', 'I', 'N', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& is, const std::string& path) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw format_error("FINW: truncated file: " + path);
    return v;
}

}  // namespace

void save_checkpoint(const std::string& path, const FinModel& model) {
    model.config.validate();
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("FINW: cannot open for writing: " + path);

    os.write(kMagic, 4);
    write_raw(os, kVersion);
    const std::string config_json = fin_config_to_json(model.config);
    write_raw(os, static_cast<std::uint32_t>(config_json.size()));
    os.write(config_json.data(), static_cast<std::streamsize>(config_json.size()));

    const auto params = model.parameters();
    const auto names = model.parameter_names();
    for (std::size_t i = 0; i < params.size(); ++i) {
        write_raw(os, static_cast<std::uint16_t>(names[i].size()));
        os.write(names[i].data(), static_cast<std::streamsize>(names[i].size()));
        write_raw(os, static_cast<std::uint8_t>(params[i]->shape.size()));
        for (int extent : params[i]->shape) write_raw(os, static_cast<std::uint32_t>(extent));
        for (double v : params[i]->values) write_raw(os, static_cast<float>(v));
    }
    if (!os) throw format_error("FINW: write failed: " + path);
}

FinModel load_checkpoint(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw format_error("FINW: cannot open: " + path);

    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(kMagic, 4))
        throw format_error("FINW: bad magic in " + path);
    if (read_raw<std::uint32_t>(is, path) != kVersion)
        throw format_error("FINW: unsupported version in " + path);

    const auto config_len = read_raw<std::uint32_t>(is, path);
    if (config_len > (1u << 20)) throw format_error("FINW: implausible config size in " + path);
    std::string config_json(config_len, '\0');
    is.read(config_json.data(), config_len);
    if (!is) throw format_error("FINW: truncated file: " + path);
    const FinConfig config = fin_config_from_json(config_json);

    FinModel model = make_model(config, 0);
    const auto params = model.parameters();
    const auto names = model.parameter_names();
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < names.size(); ++i) index[names[i]] = i;
    std::vector<bool> seen(params.size(), false);

    for (std::size_t rec = 0; rec < params.size(); ++rec) {
        const auto name_len = read_raw<std::uint16_t>(is, path);
        std::string name(name_len, '\0');
        is.read(name.data(), name_len);
        if (!is) throw format_error("FINW: truncated file: " + path);
        auto it = index.find(name);
        if (it == index.end())
            throw format_error("FINW: unknown parameter \"" + name + "\" in " + path);
        if (seen[it->second])
            throw format_error("FINW: duplicate parameter \"" + name + "\" in " + path);
        seen[it->second] = true;

        ad::Tensor& target = *params[it->second];
        const auto rank = read_raw<std::uint8_t>(is, path);
        std::vector<int> shape(rank);
        for (auto& e : shape) {
            const auto extent = read_raw<std::uint32_t>(is, path);
            if (extent == 0 || extent > static_cast<std::uint32_t>(std::numeric_limits<int>::max()))
                throw format_error("FINW: invalid extent in " + path);
            e = static_cast<int>(extent);
        }
        if (shape != target.shape)
            throw format_error("FINW: shape mismatch for \"" + name + "\" in " + path);
        for (auto& v : target.values) v = static_cast<double>(read_raw<float>(is, path));
    }
    if (is.peek() != std::ifstream::traits_type::eof())
        throw format_error("FINW: trailing bytes in " + path);
    return model;
}

}  // namespace holofin::fin

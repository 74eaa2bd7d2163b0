#include "holofin/dataset.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "holofin/cfld.hpp"
#include "holofin/errors.hpp"
#include "holofin/mhpr.hpp"
#include "holofin/parallel.hpp"
#include "holofin/propagate.hpp"
#include "holofin/rng.hpp"
#include "json.hpp"

namespace holofin {

void DatasetConfig::validate() const {
    sample.validate();
    if (n_fovs < 2) throw config_error("DatasetConfig: n_fovs must be >= 2");
    if (z_list_um.empty()) throw config_error("DatasetConfig: z_list must not be empty");
    for (std::size_t i = 0; i < z_list_um.size(); ++i) {
        if (!(z_list_um[i] > 0.0)) throw config_error("DatasetConfig: z values must be > 0");
        if (i > 0 && !(z_list_um[i] > z_list_um[i - 1]))
            throw config_error("DatasetConfig: z_list must be strictly increasing");
    }
    if (side < 4) throw config_error("DatasetConfig: side must be >= 4");
    if (!(pixel_pitch_um > 0.0) || !(wavelength_um > 0.0))
        throw config_error("DatasetConfig: pitch and wavelength must be > 0");
    if (!(noise_sigma >= 0.0)) throw config_error("DatasetConfig: noise_sigma must be >= 0");
    if (split_train < 1 || split_test < 1)
        throw config_error("DatasetConfig: split ratio parts must be >= 1");
    if (gt_planes < 2) throw config_error("DatasetConfig: gt_planes must be >= 2");
    if (mhpr_iterations < 1) throw config_error("DatasetConfig: mhpr_iterations must be >= 1");
}

void Dataset::validate() const {
    const int n = static_cast<int>(items.size());
    std::set<int> seen;
    for (int idx : train_indices) {
        if (idx < 0 || idx >= n) throw config_error("Dataset: train index out of range");
        if (!seen.insert(idx).second) throw config_error("Dataset: duplicate train index");
    }
    for (int idx : test_indices) {
        if (idx < 0 || idx >= n) throw config_error("Dataset: test index out of range");
        if (!seen.insert(idx).second)
            throw config_error("Dataset: train and test splits must be disjoint");
    }
    if (static_cast<int>(seen.size()) != n)
        throw config_error("Dataset: split does not cover every item");

    std::set<std::uint64_t> seeds;
    for (const auto& item : items) {
        item.stack.validate();
        item.gt.validate();
        item.truth.validate();
        if (!seeds.insert(item.seed).second)
            throw config_error("Dataset: per-item seeds must be distinct");
    }
}

namespace {

std::vector<double> gt_plane_list(const DatasetConfig& config) {
    const double lo = config.z_list_um.front(), hi = config.z_list_um.back();
    std::vector<double> z(config.gt_planes);
    if (config.gt_planes == 1) {
        z[0] = lo;
        return z;
    }
    for (int k = 0; k < config.gt_planes; ++k)
        z[k] = lo + (hi - lo) * static_cast<double>(k) / (config.gt_planes - 1);
    return z;
}

DatasetItem make_item(const DatasetConfig& config, std::uint64_t item_seed) {
    DatasetItem item;
    item.label = config.sample.sample_class;
    item.seed = item_seed;
    item.truth = generate_sample(config.sample, config.side, config.pixel_pitch_um,
                                 config.wavelength_um, item_seed);
    item.stack = simulate_stack(item.truth, config.z_list_um, config.noise_sigma,
                                mix_seed(item_seed, 1));
    if (config.gt_from_truth) {
        item.gt = item.truth;
    } else {
        HologramStack chain = simulate_stack(item.truth, gt_plane_list(config),
                                             config.noise_sigma, mix_seed(item_seed, 2));
        MhprConfig mhpr;
        mhpr.iterations = config.mhpr_iterations;
        item.gt = mhpr_reconstruct(chain, mhpr).field;
    }
    return item;
}

}  // namespace

Dataset build_dataset(const DatasetConfig& config) {
    config.validate();
    const int n = config.n_fovs;
    int n_test = static_cast<int>(std::llround(
        static_cast<double>(n) * config.split_test / (config.split_train + config.split_test)));
    n_test = std::clamp(n_test, 1, n - 1);
    const int n_train = n - n_test;

    Dataset ds;
    ds.items.resize(n);
    // Train and test FOVs draw from unrelated seed streams, standing in for
    // samples taken from different slides.
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const bool is_train = static_cast<int>(i) < n_train;
        const std::uint64_t stream = is_train ? 0x545241494eULL : 0x54455354ULL;
        const std::uint64_t fov = is_train ? i : i - n_train;
        ds.items[i] = make_item(config, mix_seed(mix_seed(config.seed, stream), fov));
    });
    for (int i = 0; i < n_train; ++i) ds.train_indices.push_back(i);
    for (int i = n_train; i < n; ++i) ds.test_indices.push_back(i);
    ds.validate();
    return ds;
}

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fov_path(const fs::path& dir, int index, const std::string& role) {
    return (dir / ("fov_" + std::to_string(index) + "_" + role + ".cfld")).string();
}

}  // namespace

void write_dataset(const std::string& dir, const DatasetConfig& config, const Dataset& dataset) {
    config.validate();
    dataset.validate();
    const fs::path root(dir);
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw format_error("dataset: cannot create directory " + dir);

    json manifest;
    manifest["format"] = "holofin-dataset";
    manifest["version"] = 1;
    manifest["side"] = config.side;
    manifest["pixel_pitch_um"] = config.pixel_pitch_um;
    manifest["wavelength_um"] = config.wavelength_um;
    manifest["noise_sigma"] = config.noise_sigma;
    manifest["seed"] = config.seed;
    manifest["n_fovs"] = config.n_fovs;
    manifest["split_train"] = config.split_train;
    manifest["split_test"] = config.split_test;
    manifest["gt_planes"] = config.gt_planes;
    manifest["mhpr_iterations"] = config.mhpr_iterations;
    manifest["gt_from_truth"] = config.gt_from_truth;
    manifest["z_list_um"] = config.z_list_um;
    manifest["sample"] = {{"class", sample_class_name(config.sample.sample_class)},
                          {"phase_range", {config.sample.phase_lo, config.sample.phase_hi}},
                          {"amp_range", {config.sample.amp_lo, config.sample.amp_hi}},
                          {"feature_scale_um", config.sample.feature_scale_um},
                          {"density", config.sample.density}};
    manifest["train_indices"] = dataset.train_indices;
    manifest["test_indices"] = dataset.test_indices;
    json items = json::array();
    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        const auto& item = dataset.items[i];
        items.push_back({{"index", i},
                         {"seed", item.seed},
                         {"label", sample_class_name(item.label)},
                         {"z2_um", item.stack.z2_um}});
    }
    manifest["items"] = items;

    std::ofstream os(root / "manifest.json");
    if (!os) throw format_error("dataset: cannot write manifest in " + dir);
    os << manifest.dump(2) << "\n";
    if (!os) throw format_error("dataset: manifest write failed in " + dir);

    for (std::size_t i = 0; i < dataset.items.size(); ++i) {
        const auto& item = dataset.items[i];
        for (int m = 0; m < item.stack.planes(); ++m)
            write_cfld(fov_path(root, static_cast<int>(i), "holo_" + std::to_string(m)),
                       item.stack.holograms[m]);
        write_cfld(fov_path(root, static_cast<int>(i), "gt"), item.gt);
        write_cfld(fov_path(root, static_cast<int>(i), "truth"), item.truth);
    }
}

StoredDataset read_dataset(const std::string& dir) {
    const fs::path root(dir);
    std::ifstream is(root / "manifest.json");
    if (!is) throw format_error("dataset: cannot open manifest in " + dir);
    json manifest;
    try {
        is >> manifest;
    } catch (const json::exception& e) {
        throw format_error(std::string("dataset: invalid manifest JSON: ") + e.what());
    }

    StoredDataset out;
    try {
        if (manifest.at("format").get<std::string>() != "holofin-dataset" ||
            manifest.at("version").get<int>() != 1)
            throw format_error("dataset: unsupported manifest format in " + dir);
        DatasetConfig& c = out.config;
        c.side = manifest.at("side").get<int>();
        c.pixel_pitch_um = manifest.at("pixel_pitch_um").get<double>();
        c.wavelength_um = manifest.at("wavelength_um").get<double>();
        c.noise_sigma = manifest.at("noise_sigma").get<double>();
        c.seed = manifest.at("seed").get<std::uint64_t>();
        c.n_fovs = manifest.at("n_fovs").get<int>();
        c.split_train = manifest.at("split_train").get<int>();
        c.split_test = manifest.at("split_test").get<int>();
        c.gt_planes = manifest.at("gt_planes").get<int>();
        c.mhpr_iterations = manifest.at("mhpr_iterations").get<int>();
        c.gt_from_truth = manifest.at("gt_from_truth").get<bool>();
        c.z_list_um = manifest.at("z_list_um").get<std::vector<double>>();
        const json& sample = manifest.at("sample");
        c.sample.sample_class = sample_class_from_name(sample.at("class").get<std::string>());
        c.sample.phase_lo = sample.at("phase_range").at(0).get<double>();
        c.sample.phase_hi = sample.at("phase_range").at(1).get<double>();
        c.sample.amp_lo = sample.at("amp_range").at(0).get<double>();
        c.sample.amp_hi = sample.at("amp_range").at(1).get<double>();
        c.sample.feature_scale_um = sample.at("feature_scale_um").get<double>();
        c.sample.density = sample.at("density").get<double>();

        Dataset& ds = out.dataset;
        ds.train_indices = manifest.at("train_indices").get<std::vector<int>>();
        ds.test_indices = manifest.at("test_indices").get<std::vector<int>>();
        for (const json& entry : manifest.at("items")) {
            DatasetItem item;
            item.seed = entry.at("seed").get<std::uint64_t>();
            item.label = sample_class_from_name(entry.at("label").get<std::string>());
            const auto z2 = entry.at("z2_um").get<std::vector<double>>();
            const int index = entry.at("index").get<int>();
            item.stack.z2_um = z2;
            for (std::size_t m = 0; m < z2.size(); ++m)
                item.stack.holograms.push_back(
                    read_cfld_intensity(fov_path(root, index, "holo_" + std::to_string(m))));
            item.gt = read_cfld(fov_path(root, index, "gt"));
            item.truth = read_cfld(fov_path(root, index, "truth"));
            ds.items.push_back(std::move(item));
        }
    } catch (const json::exception& e) {
        throw format_error(std::string("dataset: malformed manifest: ") + e.what());
    }
    out.config.validate();
    out.dataset.validate();
    return out;
}

}  // namespace holofin

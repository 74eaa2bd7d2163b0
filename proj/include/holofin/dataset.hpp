#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "holofin/field.hpp"
#include "holofin/synth.hpp"

namespace holofin {

struct DatasetItem {
    HologramStack stack;  // training input planes at the configured z list
    ComplexField gt;      // supervision field (multi-height retrieval by default)
    ComplexField truth;   // exact generator field, kept for oracle evaluation
    SampleClass label = SampleClass::connected_texture;
    std::uint64_t seed = 0;
};

struct Dataset {
    std::vector<DatasetItem> items;
    std::vector<int> train_indices;
    std::vector<int> test_indices;

    // Split disjointness/coverage, per-item field and stack invariants, and
    // distinct per-item seeds.
    void validate() const;
};

struct DatasetConfig {
    SampleSpec sample;
    int n_fovs = 7;
    std::vector<double> z_list_um = {300.0, 450.0, 600.0};
    int side = 64;
    double pixel_pitch_um = 0.37;
    double wavelength_um = 0.530;
    double noise_sigma = 0.0;
    int split_train = 6;  // train:test ratio
    int split_test = 1;
    int gt_planes = 8;          // supervision chain length, linspace over z_list span
    int mhpr_iterations = 100;  // iterations of the supervision reconstruction
    bool gt_from_truth = false;  // supervise on the generator field instead
    std::uint64_t seed = 0;

    void validate() const;
};

// Generates n_fovs samples, simulates the training stacks and the supervision
// chain, reconstructs GT, and splits train/test with disjoint seed streams.
Dataset build_dataset(const DatasetConfig& config);

// Directory layout: manifest.json plus fov_{i}_{role}.cfld with role in
// holo_0..holo_{M-1}, gt, truth.
void write_dataset(const std::string& dir, const DatasetConfig& config, const Dataset& dataset);

struct StoredDataset {
    DatasetConfig config;
    Dataset dataset;
};
StoredDataset read_dataset(const std::string& dir);

}  // namespace holofin

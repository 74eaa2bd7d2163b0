#pragma once

#include <string>
#include <utility>
#include <vector>

#include "holofin/dataset.hpp"
#include "holofin/fin.hpp"
#include "holofin/metrics.hpp"
#include "holofin/train.hpp"

namespace holofin {

// Packs a reconstruction as a [2, side, side] real/imaginary training target.
ad::Tensor field_target(const ComplexField& field);

// Builds training samples (normalized leading-m-plane stacks plus supervision
// targets) for the given dataset items.
std::vector<fin::TrainSample> collect_samples(const Dataset& dataset,
                                              const std::vector<int>& indices, int m);

// Splits training indices into gradient and validation slices (the last
// max(1, n/6) indices are held back for best-epoch selection).
void split_train_val(const std::vector<int>& train_indices, std::vector<int>& train,
                     std::vector<int>& val);

struct BenchRow {
    std::string train_label;  // training class or z pair; "-" for classical rows
    std::string test_label;
    std::string method;  // "fin" or "mhpr"
    int hologram_count = 0;
    int fov_count = 0;
    FieldMetrics metrics;  // averaged over the evaluated FOVs
};

struct BenchReport {
    std::vector<BenchRow> rows;

    void validate() const;  // every metric value finite
};

std::string bench_report_csv(const BenchReport& report);
std::string render_bench_table(const BenchReport& report);
void write_bench_csv(const std::string& path, const BenchReport& report);

struct BenchConfig {
    fin::FinConfig fin;     // hologram_count is overridden per harness
    DatasetConfig dataset;  // sample class and z list are overridden per harness
    fin::TrainOptions train;
    std::string dump_dir;  // when non-empty, per-FOV amplitude-difference maps (PGM)
};

// Cross-class generalization: one network per sample class, evaluated on every
// class's test split, plus the classical multi-height baseline on each test
// split. Requires at least two classes.
BenchReport bench_generalization(const std::vector<SampleSpec>& classes, int hologram_count,
                                 const BenchConfig& config);

// Per-height-pair quality: for each (z1, z2) with 300 <= z1 < z2 <= 600 trains
// a two-plane network and reports it next to the two-plane classical baseline.
BenchReport bench_z_pairs(const std::vector<std::pair<double, double>>& pairs,
                          const BenchConfig& config);

struct TimingRow {
    std::string method;  // "fin" or "mhpr"
    int hologram_count = 0;
    int batch = 0;  // 0 for classical rows
    int fov_count = 0;
    int reps = 0;
    double s_per_fov = 0.0;
    double s_per_mm2 = 0.0;
};

struct TimingReport {
    std::vector<TimingRow> rows;
};

std::string timing_report_csv(const TimingReport& report);
std::string render_timing_table(const TimingReport& report);
void write_timing_csv(const std::string& path, const TimingReport& report);

// Wall-clock inference throughput over the dataset's test split: one network
// row per batch size plus classical baselines at M = 2 and, when the stacks
// carry at least three planes, M = 3. Each row keeps the fastest of `reps`
// timed passes.
TimingReport bench_timing(const fin::FinModel& model, const Dataset& dataset,
                          const std::vector<int>& batch_sizes, int reps = 3);

}  // namespace holofin

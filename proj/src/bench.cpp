#include "holofin/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "holofin/cfld.hpp"
#include "holofin/errors.hpp"
#include "holofin/mhpr.hpp"
#include "holofin/parallel.hpp"
#include "holofin/rng.hpp"

namespace holofin {

namespace {

HologramStack take_planes(const HologramStack& stack, int m) {
    if (m < 1 || m > stack.planes()) {
        throw config_error("bench: requested more planes than the stack carries");
    }
    HologramStack out;
    out.holograms.assign(stack.holograms.begin(), stack.holograms.begin() + m);
    out.z2_um.assign(stack.z2_um.begin(), stack.z2_um.begin() + m);
    return out;
}

FieldMetrics average_metrics(const std::vector<FieldMetrics>& per_fov) {
    FieldMetrics avg{0.0, 0.0, 0.0, 0.0};
    for (const FieldMetrics& m : per_fov) {
        avg.amp_rmse += m.amp_rmse;
        avg.phase_rmse += m.phase_rmse;
        avg.amp_ssim += m.amp_ssim;
        avg.phase_ssim += m.phase_ssim;
    }
    const double n = static_cast<double>(per_fov.size());
    avg.amp_rmse /= n;
    avg.phase_rmse /= n;
    avg.amp_ssim /= n;
    avg.phase_ssim /= n;
    return avg;
}

void dump_amp_diff(const std::string& dir, const std::string& tag, int fov,
                   const ComplexField& pred, const ComplexField& gt) {
    if (dir.empty()) return;
    std::vector<double> diff(pred.data.size());
    for (std::size_t i = 0; i < diff.size(); ++i) {
        diff[i] = std::abs(std::abs(pred.data[i]) - std::abs(gt.data[i]));
    }
    std::filesystem::create_directories(dir);
    char name[128];
    std::snprintf(name, sizeof(name), "%s_fov%d_ampdiff.pgm", tag.c_str(), fov);
    write_pgm16((std::filesystem::path(dir) / name).string(), diff, pred.height, pred.width);
}

// Evaluates one trained network over a dataset's test split.
BenchRow eval_fin_cell(const fin::FinModel& model, const Dataset& dataset, int m,
                       const std::string& train_label, const std::string& test_label,
                       const std::string& dump_dir) {
    const std::vector<int>& test = dataset.test_indices;
    std::vector<FieldMetrics> per_fov(test.size());
    parallel_for(test.size(), [&](std::size_t i) {
        const DatasetItem& item = dataset.items[static_cast<std::size_t>(test[i])];
        const ComplexField pred = fin::infer(model, take_planes(item.stack, m));
        per_fov[i] = field_metrics(pred, item.gt, true);
        dump_amp_diff(dump_dir, "fin_" + train_label + "_on_" + test_label,
                      test[i], pred, item.gt);
    });
    return {train_label, test_label, "fin", m, static_cast<int>(test.size()),
            average_metrics(per_fov)};
}

BenchRow eval_mhpr_cell(const Dataset& dataset, int m, int iterations,
                        const std::string& test_label, const std::string& dump_dir) {
    const std::vector<int>& test = dataset.test_indices;
    MhprConfig cfg;
    cfg.iterations = iterations;
    std::vector<FieldMetrics> per_fov(test.size());
    parallel_for(test.size(), [&](std::size_t i) {
        const DatasetItem& item = dataset.items[static_cast<std::size_t>(test[i])];
        const ComplexField pred = mhpr_reconstruct(take_planes(item.stack, m), cfg).field;
        per_fov[i] = field_metrics(pred, item.gt, true);
        dump_amp_diff(dump_dir, "mhpr_on_" + test_label, test[i], pred, item.gt);
    });
    return {"-", test_label, "mhpr", m, static_cast<int>(test.size()), average_metrics(per_fov)};
}

fin::FinModel train_on_dataset(const BenchConfig& config, const Dataset& dataset, int m,
                               std::uint64_t train_seed) {
    std::vector<int> train_idx;
    std::vector<int> val_idx;
    split_train_val(dataset.train_indices, train_idx, val_idx);
    fin::FinConfig fc = config.fin;
    fc.hologram_count = m;
    fin::TrainOptions to = config.train;
    to.seed = train_seed;
    return fin::train_fin(fc, collect_samples(dataset, train_idx, m),
                          collect_samples(dataset, val_idx, m), to)
        .model;
}

std::vector<double> leading_z(const DatasetConfig& config, int m) {
    if (m < 1 || static_cast<std::size_t>(m) > config.z_list_um.size()) {
        throw config_error("bench: hologram count exceeds the configured z list");
    }
    return {config.z_list_um.begin(), config.z_list_um.begin() + m};
}

std::string format_z_pair(double z1, double z2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%g-%g", z1, z2);
    return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw format_error("cannot open for writing: " + path);
    out << content;
    if (!out) throw format_error("write failed: " + path);
}

}  // namespace

ad::Tensor field_target(const ComplexField& field) {
    ad::Tensor t({2, field.height, field.width});
    const std::size_t n = field.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        t.values[i] = field.data[i].real();
        t.values[n + i] = field.data[i].imag();
    }
    return t;
}

std::vector<fin::TrainSample> collect_samples(const Dataset& dataset,
                                              const std::vector<int>& indices, int m) {
    std::vector<fin::TrainSample> out;
    out.reserve(indices.size());
    for (int idx : indices) {
        const DatasetItem& item = dataset.items[static_cast<std::size_t>(idx)];
        out.push_back({fin::normalize_stack(take_planes(item.stack, m)), field_target(item.gt)});
    }
    return out;
}

// Keeps the test split untouched: only training indices feed both the gradient
// and the best-epoch selection slices.
void split_train_val(const std::vector<int>& train_indices, std::vector<int>& train,
                     std::vector<int>& val) {
    const int n = static_cast<int>(train_indices.size());
    if (n < 2) {
        throw config_error("bench: need at least two training FOVs per dataset");
    }
    const int n_val = std::max(1, n / 6);
    train.assign(train_indices.begin(), train_indices.end() - n_val);
    val.assign(train_indices.end() - n_val, train_indices.end());
}

void BenchReport::validate() const {
    if (rows.empty()) throw config_error("bench report has no rows");
    for (const BenchRow& row : rows) {
        const FieldMetrics& m = row.metrics;
        if (!std::isfinite(m.amp_rmse) || !std::isfinite(m.phase_rmse) ||
            !std::isfinite(m.amp_ssim) || !std::isfinite(m.phase_ssim)) {
            throw numeric_error("bench report row " + row.train_label + "/" + row.test_label +
                                " has non-finite metrics");
        }
        if (row.fov_count < 1) {
            throw config_error("bench report row evaluated no FOVs");
        }
    }
}

std::string bench_report_csv(const BenchReport& report) {
    std::ostringstream out;
    out << "# holofin bench csv v1\n";
    out << "train,test,method,m,fovs,amp_rmse,phase_rmse,amp_ssim,phase_ssim\n";
    char buf[256];
    for (const BenchRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%s,%s,%d,%d,%.17g,%.17g,%.17g,%.17g\n",
                      row.train_label.c_str(), row.test_label.c_str(), row.method.c_str(),
                      row.hologram_count, row.fov_count, row.metrics.amp_rmse,
                      row.metrics.phase_rmse, row.metrics.amp_ssim, row.metrics.phase_ssim);
        out << buf;
    }
    return out.str();
}

std::string render_bench_table(const BenchReport& report) {
    std::ostringstream out;
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-20s %-20s %-6s %3s %5s %10s %11s %9s %10s\n", "train",
                  "test", "method", "m", "fovs", "amp_rmse", "phase_rmse", "amp_ssim",
                  "phase_ssim");
    out << buf;
    out << std::string(100, '-') << "\n";
    for (const BenchRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-20s %-20s %-6s %3d %5d %10.5f %11.5f %9.5f %10.5f\n",
                      row.train_label.c_str(), row.test_label.c_str(), row.method.c_str(),
                      row.hologram_count, row.fov_count, row.metrics.amp_rmse,
                      row.metrics.phase_rmse, row.metrics.amp_ssim, row.metrics.phase_ssim);
        out << buf;
    }
    return out.str();
}

void write_bench_csv(const std::string& path, const BenchReport& report) {
    write_text_file(path, bench_report_csv(report));
}

BenchReport bench_generalization(const std::vector<SampleSpec>& classes, int hologram_count,
                                 const BenchConfig& config) {
    if (classes.size() < 2) {
        throw config_error("bench_generalization: need at least two sample classes");
    }
    const std::vector<double> z_list = leading_z(config.dataset, hologram_count);

    std::vector<Dataset> datasets;
    std::vector<fin::FinModel> models;
    std::vector<std::string> labels;
    datasets.reserve(classes.size());
    for (std::size_t i = 0; i < classes.size(); ++i) {
        DatasetConfig dc = config.dataset;
        dc.sample = classes[i];
        dc.z_list_um = z_list;
        dc.seed = mix_seed(config.dataset.seed, i + 1);
        datasets.push_back(build_dataset(dc));
        labels.push_back(sample_class_name(classes[i].sample_class));
        models.push_back(train_on_dataset(config, datasets.back(), hologram_count,
                                          mix_seed(config.train.seed, i + 1)));
    }

    BenchReport report;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        for (std::size_t j = 0; j < classes.size(); ++j) {
            report.rows.push_back(eval_fin_cell(models[i], datasets[j], hologram_count, labels[i],
                                                labels[j], config.dump_dir));
        }
    }
    for (std::size_t j = 0; j < classes.size(); ++j) {
        report.rows.push_back(eval_mhpr_cell(datasets[j], hologram_count,
                                             config.dataset.mhpr_iterations, labels[j],
                                             config.dump_dir));
    }
    report.validate();
    return report;
}

BenchReport bench_z_pairs(const std::vector<std::pair<double, double>>& pairs,
                          const BenchConfig& config) {
    if (pairs.empty()) throw config_error("bench_z_pairs: empty pair list");
    for (const auto& [z1, z2] : pairs) {
        if (!(z1 >= 300.0 && z2 <= 600.0 && z1 < z2)) {
            throw config_error("bench_z_pairs: pairs must satisfy 300 <= z1 < z2 <= 600");
        }
    }

    BenchReport report;
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        DatasetConfig dc = config.dataset;
        dc.z_list_um = {pairs[p].first, pairs[p].second};
        dc.seed = mix_seed(config.dataset.seed, 0x5a50u + p);
        const Dataset dataset = build_dataset(dc);
        const std::string label = format_z_pair(pairs[p].first, pairs[p].second);
        const fin::FinModel model =
            train_on_dataset(config, dataset, 2, mix_seed(config.train.seed, 0x5a50u + p));
        report.rows.push_back(eval_fin_cell(model, dataset, 2, label, label, config.dump_dir));
        report.rows.push_back(
            eval_mhpr_cell(dataset, 2, config.dataset.mhpr_iterations, label, config.dump_dir));
    }
    report.validate();
    return report;
}

std::string timing_report_csv(const TimingReport& report) {
    std::ostringstream out;
    out << "# holofin timing csv v1\n";
    out << "method,m,batch,fovs,reps,s_per_fov,s_per_mm2\n";
    char buf[192];
    for (const TimingRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%d,%d,%d,%d,%.17g,%.17g\n", row.method.c_str(),
                      row.hologram_count, row.batch, row.fov_count, row.reps, row.s_per_fov,
                      row.s_per_mm2);
        out << buf;
    }
    return out.str();
}

std::string render_timing_table(const TimingReport& report) {
    std::ostringstream out;
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%-6s %3s %6s %5s %5s %12s %12s\n", "method", "m", "batch",
                  "fovs", "reps", "s_per_fov", "s_per_mm2");
    out << buf;
    out << std::string(55, '-') << "\n";
    for (const TimingRow& row : report.rows) {
        std::snprintf(buf, sizeof(buf), "%-6s %3d %6d %5d %5d %12.6f %12.6f\n", row.method.c_str(),
                      row.hologram_count, row.batch, row.fov_count, row.reps, row.s_per_fov,
                      row.s_per_mm2);
        out << buf;
    }
    return out.str();
}

void write_timing_csv(const std::string& path, const TimingReport& report) {
    write_text_file(path, timing_report_csv(report));
}

TimingReport bench_timing(const fin::FinModel& model, const Dataset& dataset,
                          const std::vector<int>& batch_sizes, int reps) {
    dataset.validate();
    if (dataset.test_indices.empty()) {
        throw config_error("bench_timing: dataset has no test split");
    }
    if (batch_sizes.empty()) throw config_error("bench_timing: empty batch size list");
    for (int b : batch_sizes) {
        if (b < 1) throw config_error("bench_timing: batch sizes must be positive");
    }
    if (reps < 1) throw config_error("bench_timing: reps must be positive");

    const int m = model.config.hologram_count;
    std::vector<HologramStack> stacks;
    stacks.reserve(dataset.test_indices.size());
    for (int idx : dataset.test_indices) {
        const DatasetItem& item = dataset.items[static_cast<std::size_t>(idx)];
        if (item.stack.holograms.front().height != model.config.input_side ||
            item.stack.holograms.front().width != model.config.input_side) {
            throw config_error("bench_timing: dataset FOV size does not match the model");
        }
        stacks.push_back(take_planes(item.stack, m));
    }
    const int n_fovs = static_cast<int>(stacks.size());
    const double side_mm =
        model.config.input_side * stacks.front().holograms.front().pixel_pitch_um / 1000.0;
    const double fov_mm2 = side_mm * side_mm;

    using clock = std::chrono::steady_clock;
    const auto timed = [&](const auto& pass) {
        double best = std::numeric_limits<double>::infinity();
        for (int r = 0; r < reps; ++r) {
            const auto t0 = clock::now();
            pass();
            const auto t1 = clock::now();
            best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
        }
        return best;
    };

    TimingReport report;
    std::vector<ComplexField> sink(stacks.size());
    for (int batch : batch_sizes) {
        const double total = timed([&] {
            for (int start = 0; start < n_fovs; start += batch) {
                const std::size_t count =
                    std::min<std::size_t>(batch, stacks.size() - static_cast<std::size_t>(start));
                parallel_for(count, [&](std::size_t i) {
                    const std::size_t idx = static_cast<std::size_t>(start) + i;
                    sink[idx] = fin::infer(model, stacks[idx]);
                });
            }
        });
        const double per_fov = total / n_fovs;
        report.rows.push_back({"fin", m, batch, n_fovs, reps, per_fov, per_fov / fov_mm2});
    }

    const int planes = dataset.items.front().stack.planes();
    for (int m_b : {2, 3}) {
        if (m_b > planes) continue;
        std::vector<HologramStack> base_stacks;
        base_stacks.reserve(dataset.test_indices.size());
        for (int idx : dataset.test_indices) {
            base_stacks.push_back(take_planes(dataset.items[static_cast<std::size_t>(idx)].stack, m_b));
        }
        MhprConfig cfg;
        const double total = timed([&] {
            for (const HologramStack& stack : base_stacks) {
                sink[0] = mhpr_reconstruct(stack, cfg).field;
            }
        });
        const double per_fov = total / n_fovs;
        report.rows.push_back({"mhpr", m_b, 0, n_fovs, reps, per_fov, per_fov / fov_mm2});
    }
    return report;
}

}  // namespace holofin

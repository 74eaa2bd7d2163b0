#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "holofin/autofocus.hpp"
#include "holofin/bench.hpp"
#include "holofin/cfld.hpp"
#include "holofin/checkpoint.hpp"
#include "holofin/dataset.hpp"
#include "holofin/errors.hpp"
#include "holofin/fin.hpp"
#include "holofin/metrics.hpp"
#include "holofin/mhpr.hpp"
#include "holofin/parallel.hpp"
#include "holofin/propagate.hpp"
#include "holofin/psr.hpp"
#include "holofin/rng.hpp"
#include "holofin/synth.hpp"
#include "holofin/train.hpp"
#include "json.hpp"

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using namespace holofin;

constexpr const char* kToolVersion = "1.0.0";

json load_json_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw format_error("cannot open " + path);
    json doc;
    try {
        is >> doc;
    } catch (const json::exception& e) {
        throw format_error("invalid JSON in " + path + ": " + e.what());
    }
    return doc;
}

// Rejects keys outside the schema so typos fail loudly instead of silently
// falling back to defaults.
void require_known_keys(const json& obj, const std::string& where,
                        std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw config_error(where + ": expected a JSON object");
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        bool ok = false;
        for (const char* name : allowed) {
            if (key == name) {
                ok = true;
                break;
            }
        }
        if (!ok) throw config_error(where + ": unknown key \"" + key + "\"");
    }
}

template <typename T>
T get_field(const json& obj, const std::string& where, const char* key, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw config_error(where + ": bad value for \"" + std::string(key) + "\"");
    }
}

std::uint64_t fnv1a_hash(const std::string& text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

// Reproduction record: the resolved configuration, its hash, and every file
// the invocation wrote. No timestamps so reruns stay byte-identical.
void write_manifest(const std::string& path, const std::string& subcommand, const json& config,
                    const std::vector<std::string>& outputs) {
    json manifest;
    manifest["tool"] = "holofin";
    manifest["version"] = kToolVersion;
    manifest["subcommand"] = subcommand;
    manifest["config"] = config;
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(fnv1a_hash(config.dump())));
    manifest["config_hash"] = hash;
    manifest["outputs"] = outputs;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw format_error("cannot write manifest " + path);
    os << manifest.dump(2) << "\n";
    if (!os) throw format_error("manifest write failed: " + path);
}

std::string resolve_relative(const std::string& base_file, const std::string& path) {
    const fs::path p(path);
    if (p.is_absolute()) return path;
    return (fs::path(base_file).parent_path() / p).string();
}

// Stack descriptor: {"holograms": ["h0.cfld", ...], "z2_um": [...]}. Hologram
// paths are resolved relative to the descriptor file.
HologramStack load_stack_json(const std::string& path) {
    const json doc = load_json_file(path);
    require_known_keys(doc, "stack", {"holograms", "z2_um"});
    if (!doc.contains("holograms") || !doc.contains("z2_um")) {
        throw config_error("stack: requires \"holograms\" and \"z2_um\"");
    }
    std::vector<std::string> paths;
    std::vector<double> z2;
    try {
        paths = doc.at("holograms").get<std::vector<std::string>>();
        z2 = doc.at("z2_um").get<std::vector<double>>();
    } catch (const json::exception&) {
        throw config_error("stack: \"holograms\" must be a path list and \"z2_um\" a number list");
    }
    if (paths.size() != z2.size() || paths.empty()) {
        throw config_error("stack: \"holograms\" and \"z2_um\" must be equal-length and non-empty");
    }
    HologramStack stack;
    stack.z2_um = z2;
    for (const std::string& p : paths) {
        stack.holograms.push_back(read_cfld_intensity(resolve_relative(path, p)));
    }
    stack.validate();
    return stack;
}

SampleSpec sample_spec_from_json(const json& obj, const std::string& where) {
    require_known_keys(obj, where,
                       {"class", "phase_range", "amp_range", "feature_scale_um", "density"});
    SampleSpec spec;
    if (obj.contains("class")) {
        spec.sample_class = sample_class_from_name(get_field<std::string>(
            obj, where, "class", "connected-texture"));
    }
    if (obj.contains("phase_range")) {
        const auto range = get_field<std::vector<double>>(obj, where, "phase_range", {});
        if (range.size() != 2) throw config_error(where + ": \"phase_range\" needs two numbers");
        spec.phase_lo = range[0];
        spec.phase_hi = range[1];
    }
    if (obj.contains("amp_range")) {
        const auto range = get_field<std::vector<double>>(obj, where, "amp_range", {});
        if (range.size() != 2) throw config_error(where + ": \"amp_range\" needs two numbers");
        spec.amp_lo = range[0];
        spec.amp_hi = range[1];
    }
    spec.feature_scale_um = get_field(obj, where, "feature_scale_um", spec.feature_scale_um);
    spec.density = get_field(obj, where, "density", spec.density);
    spec.validate();
    return spec;
}

DatasetConfig dataset_config_from_json(const json& obj, const std::string& where) {
    require_known_keys(obj, where,
                       {"sample", "n_fovs", "z_list_um", "side", "pixel_pitch_um", "wavelength_um",
                        "noise_sigma", "split_train", "split_test", "gt_planes", "mhpr_iterations",
                        "gt_from_truth", "seed"});
    DatasetConfig c;
    if (obj.contains("sample")) c.sample = sample_spec_from_json(obj.at("sample"), where + ".sample");
    c.n_fovs = get_field(obj, where, "n_fovs", c.n_fovs);
    c.z_list_um = get_field(obj, where, "z_list_um", c.z_list_um);
    c.side = get_field(obj, where, "side", c.side);
    c.pixel_pitch_um = get_field(obj, where, "pixel_pitch_um", c.pixel_pitch_um);
    c.wavelength_um = get_field(obj, where, "wavelength_um", c.wavelength_um);
    c.noise_sigma = get_field(obj, where, "noise_sigma", c.noise_sigma);
    c.split_train = get_field(obj, where, "split_train", c.split_train);
    c.split_test = get_field(obj, where, "split_test", c.split_test);
    c.gt_planes = get_field(obj, where, "gt_planes", c.gt_planes);
    c.mhpr_iterations = get_field(obj, where, "mhpr_iterations", c.mhpr_iterations);
    c.gt_from_truth = get_field(obj, where, "gt_from_truth", c.gt_from_truth);
    c.seed = get_field(obj, where, "seed", c.seed);
    c.validate();
    return c;
}

fin::TrainOptions train_options_from_json(const json& obj, const std::string& where) {
    require_known_keys(obj, where, {"epochs", "batch_size", "seed", "augment", "adam"});
    fin::TrainOptions opts;
    opts.epochs = get_field(obj, where, "epochs", opts.epochs);
    opts.batch_size = get_field(obj, where, "batch_size", opts.batch_size);
    opts.seed = get_field(obj, where, "seed", opts.seed);
    opts.augment = get_field(obj, where, "augment", opts.augment);
    if (obj.contains("adam")) {
        const json& adam = obj.at("adam");
        require_known_keys(adam, where + ".adam",
                           {"beta1", "beta2", "eps", "eta_max", "eta_min", "t0", "t_mult"});
        opts.adam.beta1 = get_field(adam, where, "beta1", opts.adam.beta1);
        opts.adam.beta2 = get_field(adam, where, "beta2", opts.adam.beta2);
        opts.adam.eps = get_field(adam, where, "eps", opts.adam.eps);
        opts.adam.eta_max = get_field(adam, where, "eta_max", opts.adam.eta_max);
        opts.adam.eta_min = get_field(adam, where, "eta_min", opts.adam.eta_min);
        opts.adam.t0 = get_field(adam, where, "t0", opts.adam.t0);
        opts.adam.t_mult = get_field(adam, where, "t_mult", opts.adam.t_mult);
    }
    return opts;
}

fin::FinConfig fin_config_from_json_obj(const json& obj) {
    return fin::fin_config_from_json(obj.dump());
}

BenchConfig bench_config_from_json(const json& doc, const std::string& where) {
    BenchConfig bc;
    if (doc.contains("fin")) bc.fin = fin_config_from_json_obj(doc.at("fin"));
    if (doc.contains("dataset")) {
        bc.dataset = dataset_config_from_json(doc.at("dataset"), where + ".dataset");
    }
    if (doc.contains("train")) bc.train = train_options_from_json(doc.at("train"), where + ".train");
    if (bc.fin.input_side != bc.dataset.side) {
        throw config_error(where + ": fin.input_side must match dataset.side");
    }
    return bc;
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw format_error("cannot create output directory " + dir);
}

// ---- subcommand payloads -------------------------------------------------

struct SimulateOpts {
    std::string config_path;
    std::string out_dir;
};

void run_simulate(const SimulateOpts& o) {
    const json doc = load_json_file(o.config_path);
    require_known_keys(doc, "simulate config",
                       {"sample", "side", "pixel_pitch_um", "wavelength_um", "z_list_um",
                        "noise_sigma", "seed"});
    SampleSpec spec;
    if (doc.contains("sample")) spec = sample_spec_from_json(doc.at("sample"), "simulate.sample");
    const int side = get_field(doc, "simulate", "side", 256);
    const double pitch = get_field(doc, "simulate", "pixel_pitch_um", 0.37);
    const double lambda = get_field(doc, "simulate", "wavelength_um", 0.530);
    const std::vector<double> z_list =
        get_field<std::vector<double>>(doc, "simulate", "z_list_um", {300.0, 450.0, 600.0});
    const double noise = get_field(doc, "simulate", "noise_sigma", 0.0);
    const std::uint64_t seed = get_field<std::uint64_t>(doc, "simulate", "seed", 0);

    const ComplexField truth = generate_sample(spec, side, pitch, lambda, seed);
    const HologramStack stack = simulate_stack(truth, z_list, noise, mix_seed(seed, 1));

    ensure_dir(o.out_dir);
    std::vector<std::string> outputs;
    const fs::path root(o.out_dir);
    write_cfld((root / "truth.cfld").string(), truth);
    outputs.push_back("truth.cfld");
    for (int m = 0; m < stack.planes(); ++m) {
        const std::string name = "holo_" + std::to_string(m) + ".cfld";
        write_cfld((root / name).string(), stack.holograms[static_cast<std::size_t>(m)]);
        outputs.push_back(name);
    }
    write_manifest((root / "manifest.json").string(), "simulate", doc, outputs);
}

struct MhprOpts {
    std::string stack_path;
    int iters = 100;
    std::string out_path;
    std::string residuals_path;
};

void run_mhpr(const MhprOpts& o) {
    const HologramStack stack = load_stack_json(o.stack_path);
    MhprConfig cfg;
    cfg.iterations = o.iters;
    cfg.record_residuals = !o.residuals_path.empty();
    const MhprResult result = mhpr_reconstruct(stack, cfg);
    write_cfld(o.out_path, result.field);
    std::vector<std::string> outputs{o.out_path};
    if (!o.residuals_path.empty()) {
        write_residuals_csv(o.residuals_path, result.residuals);
        outputs.push_back(o.residuals_path);
    }
    const json config{{"stack", o.stack_path}, {"iters", o.iters}};
    write_manifest(o.out_path + ".manifest.json", "mhpr", config, outputs);
}

struct AutofocusOpts {
    std::string holo_path;
    double z_min = 200.0;
    double z_max = 700.0;
    double step = 10.0;
    std::string out_path;
};

void run_autofocus(const AutofocusOpts& o) {
    const IntensityImage holo = read_cfld_intensity(o.holo_path);
    const AutofocusResult result = autofocus(holo, o.z_min, o.z_max, o.step);
    json out{{"z_um", result.z_um}, {"refined", result.refined}};
    std::ofstream os(o.out_path, std::ios::binary);
    if (!os) throw format_error("cannot write " + o.out_path);
    os << out.dump(2) << "\n";
    const json config{{"holo", o.holo_path},
                      {"z_min_um", o.z_min},
                      {"z_max_um", o.z_max},
                      {"step_um", o.step}};
    write_manifest(o.out_path + ".manifest.json", "autofocus", config, {o.out_path});
    std::cout << "focus z = " << result.z_um << " um (refined: " << (result.refined ? "yes" : "no")
              << ")\n";
}

struct PsrOpts {
    std::vector<std::string> frame_paths;
    int factor = 2;
    std::string shifts_path;
    std::string out_path;
    std::string shifts_out_path;
};

void run_psr(const PsrOpts& o) {
    LowResBurst burst;
    for (const std::string& p : o.frame_paths) burst.frames.push_back(read_cfld_intensity(p));
    burst.validate();
    std::vector<std::pair<double, double>> shifts;
    if (!o.shifts_path.empty()) {
        const json doc = load_json_file(o.shifts_path);
        try {
            for (const json& entry : doc) {
                shifts.emplace_back(entry.at(0).get<double>(), entry.at(1).get<double>());
            }
        } catch (const json::exception&) {
            throw config_error("shifts: expected a JSON array of [dx, dy] pairs");
        }
    } else {
        shifts = estimate_shifts(burst);
    }
    const IntensityImage hi = pixel_super_resolve(burst, o.factor, shifts);
    write_cfld(o.out_path, hi);
    std::vector<std::string> outputs{o.out_path};
    if (!o.shifts_out_path.empty()) {
        json est = json::array();
        for (const auto& [dx, dy] : shifts) est.push_back({dx, dy});
        std::ofstream os(o.shifts_out_path, std::ios::binary);
        if (!os) throw format_error("cannot write " + o.shifts_out_path);
        os << est.dump(2) << "\n";
        outputs.push_back(o.shifts_out_path);
    }
    const json config{{"frames", o.frame_paths},
                      {"factor", o.factor},
                      {"shifts", o.shifts_path.empty() ? "estimated" : o.shifts_path}};
    write_manifest(o.out_path + ".manifest.json", "psr", config, outputs);
}

struct DatasetOpts {
    std::string config_path;
    std::string out_dir;
};

void run_dataset(const DatasetOpts& o) {
    const json doc = load_json_file(o.config_path);
    const DatasetConfig config = dataset_config_from_json(doc, "dataset config");
    const Dataset dataset = build_dataset(config);
    write_dataset(o.out_dir, config, dataset);
    // The dataset's own manifest.json holds the data description; the run
    // manifest records the invocation.
    write_manifest((fs::path(o.out_dir) / "run_manifest.json").string(), "dataset", doc,
                   {"manifest.json"});
}

struct TrainOpts {
    std::string dataset_dir;
    std::string config_path;
    std::string out_path;
    std::string log_path;
};

void run_train(const TrainOpts& o) {
    const json doc = load_json_file(o.config_path);
    require_known_keys(doc, "train config", {"fin", "train"});
    const StoredDataset stored = read_dataset(o.dataset_dir);
    fin::FinConfig fc;
    if (doc.contains("fin")) fc = fin_config_from_json_obj(doc.at("fin"));
    fin::TrainOptions opts;
    if (doc.contains("train")) opts = train_options_from_json(doc.at("train"), "train config.train");
    opts.log_csv_path = o.log_path;

    const int planes = stored.dataset.items.front().stack.planes();
    if (fc.hologram_count != planes) {
        throw config_error("train config: fin.hologram_count (" +
                           std::to_string(fc.hologram_count) + ") must match the dataset planes (" +
                           std::to_string(planes) + ")");
    }
    if (fc.input_side != stored.config.side) {
        throw config_error("train config: fin.input_side must match the dataset side");
    }

    std::vector<int> train_idx;
    std::vector<int> val_idx;
    split_train_val(stored.dataset.train_indices, train_idx, val_idx);
    const fin::TrainResult result =
        fin::train_fin(fc, collect_samples(stored.dataset, train_idx, fc.hologram_count),
                       collect_samples(stored.dataset, val_idx, fc.hologram_count), opts);
    fin::save_checkpoint(o.out_path, result.model);
    std::vector<std::string> outputs{o.out_path};
    if (!o.log_path.empty()) outputs.push_back(o.log_path);
    write_manifest(o.out_path + ".manifest.json", "train", doc, outputs);
    std::cout << "best epoch " << result.best_epoch << ", final val loss "
              << result.log.back().val_loss << "\n";
}

struct InferOpts {
    std::string model_path;
    std::string stack_path;
    std::string out_path;
    bool tile = false;
    int batch = 8;
};

void run_infer(const InferOpts& o) {
    const fin::FinModel model = fin::load_checkpoint(o.model_path);
    const HologramStack stack = load_stack_json(o.stack_path);
    if (stack.planes() != model.config.hologram_count) {
        throw config_error("infer: stack has " + std::to_string(stack.planes()) +
                           " planes but the model expects " +
                           std::to_string(model.config.hologram_count));
    }
    const int side = stack.holograms.front().height;
    ComplexField recon;
    if (o.tile) {
        recon = fin::tile_infer(model, stack, o.batch);
    } else {
        if (side != model.config.input_side || stack.holograms.front().width != side) {
            throw config_error(
                "infer: the input FOV side is fixed at " + std::to_string(model.config.input_side) +
                " by the trained model; this stack is " + std::to_string(side) +
                " (pass --tile to reconstruct larger FOVs tile by tile)");
        }
        recon = fin::infer(model, stack);
    }
    write_cfld(o.out_path, recon);
    const json config{{"model", o.model_path},
                      {"stack", o.stack_path},
                      {"tile", o.tile},
                      {"batch", o.batch}};
    write_manifest(o.out_path + ".manifest.json", "infer", config, {o.out_path});
}

struct BenchGenOpts {
    std::string config_path;
    std::string out_dir;
    bool dump_maps = false;
};

void run_bench_gen(const BenchGenOpts& o) {
    const json doc = load_json_file(o.config_path);
    require_known_keys(doc, "bench-gen config",
                       {"classes", "hologram_count", "fin", "dataset", "train"});
    if (!doc.contains("classes")) {
        throw config_error("bench-gen config: requires a \"classes\" array");
    }
    std::vector<SampleSpec> classes;
    for (const json& entry : doc.at("classes")) {
        classes.push_back(sample_spec_from_json(entry, "bench-gen classes"));
    }
    const int m = get_field(doc, "bench-gen config", "hologram_count", 3);
    BenchConfig bc = bench_config_from_json(doc, "bench-gen config");
    ensure_dir(o.out_dir);
    if (o.dump_maps) bc.dump_dir = (fs::path(o.out_dir) / "maps").string();

    const BenchReport report = bench_generalization(classes, m, bc);
    const std::string csv_path = (fs::path(o.out_dir) / "bench_gen.csv").string();
    write_bench_csv(csv_path, report);
    std::cout << render_bench_table(report);
    write_manifest((fs::path(o.out_dir) / "manifest.json").string(), "bench-gen", doc,
                   {"bench_gen.csv"});
}

struct BenchZOpts {
    std::string config_path;
    std::string out_dir;
};

void run_bench_z(const BenchZOpts& o) {
    const json doc = load_json_file(o.config_path);
    require_known_keys(doc, "bench-z config", {"pairs", "fin", "dataset", "train"});
    std::vector<std::pair<double, double>> pairs{{300.0, 450.0}};
    if (doc.contains("pairs")) {
        pairs.clear();
        try {
            for (const json& entry : doc.at("pairs")) {
                pairs.emplace_back(entry.at(0).get<double>(), entry.at(1).get<double>());
            }
        } catch (const json::exception&) {
            throw config_error("bench-z config: \"pairs\" must be an array of [z1, z2]");
        }
    }
    BenchConfig bc = bench_config_from_json(doc, "bench-z config");
    ensure_dir(o.out_dir);
    const BenchReport report = bench_z_pairs(pairs, bc);
    const std::string csv_path = (fs::path(o.out_dir) / "bench_z.csv").string();
    write_bench_csv(csv_path, report);
    std::cout << render_bench_table(report);
    write_manifest((fs::path(o.out_dir) / "manifest.json").string(), "bench-z", doc,
                   {"bench_z.csv"});
}

struct BenchTimeOpts {
    std::string model_path;
    std::string dataset_dir;
    std::vector<int> batches{1, 20};
    int reps = 3;
    std::string out_dir;
};

void run_bench_time(const BenchTimeOpts& o) {
    const fin::FinModel model = fin::load_checkpoint(o.model_path);
    const StoredDataset stored = read_dataset(o.dataset_dir);
    const TimingReport report = bench_timing(model, stored.dataset, o.batches, o.reps);
    ensure_dir(o.out_dir);
    const std::string csv_path = (fs::path(o.out_dir) / "timing.csv").string();
    write_timing_csv(csv_path, report);
    std::cout << render_timing_table(report);
    json config{{"model", o.model_path}, {"dataset", o.dataset_dir}, {"batches", o.batches},
                {"reps", o.reps}};
    write_manifest((fs::path(o.out_dir) / "manifest.json").string(), "bench-time", config,
                   {"timing.csv"});
}

struct MetricsOpts {
    std::string pred_path;
    std::string gt_path;
    bool no_align = false;
    std::string out_path;
};

void run_metrics(const MetricsOpts& o) {
    const ComplexField pred = read_cfld(o.pred_path);
    const ComplexField gt = read_cfld(o.gt_path);
    const FieldMetrics m = field_metrics(pred, gt, !o.no_align);
    char line[256];
    std::snprintf(line, sizeof(line),
                  "amp_rmse   %.6g\nphase_rmse %.6g\namp_ssim   %.6g\nphase_ssim %.6g\n",
                  m.amp_rmse, m.phase_rmse, m.amp_ssim, m.phase_ssim);
    std::cout << line;
    if (!o.out_path.empty()) {
        std::ofstream os(o.out_path, std::ios::binary);
        if (!os) throw format_error("cannot write " + o.out_path);
        char row[256];
        std::snprintf(row, sizeof(row), "amp_rmse,phase_rmse,amp_ssim,phase_ssim\n%.17g,%.17g,%.17g,%.17g\n",
                      m.amp_rmse, m.phase_rmse, m.amp_ssim, m.phase_ssim);
        os << row;
        const json config{{"pred", o.pred_path}, {"gt", o.gt_path}, {"align", !o.no_align}};
        write_manifest(o.out_path + ".manifest.json", "metrics", config, {o.out_path});
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"holofin: lens-free holography reconstruction toolkit"};
    app.name("holofin");  // keep help output independent of the invocation path
    app.require_subcommand(1);
    int threads = 0;
    app.add_option("--threads", threads, "Worker threads (default: hardware concurrency)")
        ->envname("HOLOFIN_THREADS");

    SimulateOpts sim;
    CLI::App* c_sim = app.add_subcommand("simulate", "Generate a synthetic sample and its hologram stack");
    c_sim->add_option("--config", sim.config_path, "JSON config (sample, geometry, z list, seed)")
        ->required();
    c_sim->add_option("--out-dir", sim.out_dir, "Output directory")->required();

    MhprOpts mh;
    CLI::App* c_mh = app.add_subcommand("mhpr", "Multi-height iterative phase retrieval");
    c_mh->add_option("--stack", mh.stack_path, "Stack descriptor JSON")->required();
    c_mh->add_option("--iters", mh.iters, "Update iterations (default 100)");
    c_mh->add_option("--out", mh.out_path, "Output field (CFLD)")->required();
    c_mh->add_option("--residuals", mh.residuals_path, "Optional residual trace CSV");

    AutofocusOpts af;
    CLI::App* c_af = app.add_subcommand("autofocus", "Edge-sparsity focus search for one hologram");
    c_af->add_option("--holo", af.holo_path, "Hologram (CFLD)")->required();
    c_af->add_option("--z-min", af.z_min, "Search range lower bound, um");
    c_af->add_option("--z-max", af.z_max, "Search range upper bound, um");
    c_af->add_option("--step", af.step, "Coarse grid step, um (default 10)");
    c_af->add_option("--out", af.out_path, "Output JSON with the focus distance")->required();

    PsrOpts ps;
    CLI::App* c_ps = app.add_subcommand("psr", "Pixel super-resolution from a shifted burst");
    c_ps->add_option("--frames", ps.frame_paths, "Low-resolution frames (CFLD)")
        ->required()
        ->delimiter(',');
    c_ps->add_option("--factor", ps.factor, "Upsampling factor (default 2)");
    c_ps->add_option("--shifts", ps.shifts_path, "Known shifts JSON [[dx,dy],...]; estimated if absent");
    c_ps->add_option("--out", ps.out_path, "Output high-resolution image (CFLD)")->required();
    c_ps->add_option("--shifts-out", ps.shifts_out_path, "Write the shifts used as JSON");

    DatasetOpts ds;
    CLI::App* c_ds = app.add_subcommand("dataset", "Build a labeled synthetic dataset");
    c_ds->add_option("--config", ds.config_path, "Dataset config JSON")->required();
    c_ds->add_option("--out-dir", ds.out_dir, "Output directory")->required();

    TrainOpts tr;
    CLI::App* c_tr = app.add_subcommand("train", "Train the spectral reconstruction network");
    c_tr->add_option("--dataset", tr.dataset_dir, "Dataset directory")->required();
    c_tr->add_option("--config", tr.config_path, "Training config JSON (fin + train blocks)")
        ->required();
    c_tr->add_option("--out", tr.out_path, "Output checkpoint (FINW)")->required();
    c_tr->add_option("--log", tr.log_path, "Optional epoch log CSV");

    InferOpts in;
    CLI::App* c_in = app.add_subcommand("infer", "Reconstruct a field from a hologram stack");
    c_in->add_option("--model", in.model_path, "Trained checkpoint (FINW)")->required();
    c_in->add_option("--stack", in.stack_path, "Stack descriptor JSON")->required();
    c_in->add_option("--out", in.out_path, "Output field (CFLD)")->required();
    c_in->add_flag("--tile", in.tile, "Tile larger FOVs to the model's fixed input side");
    c_in->add_option("--batch", in.batch, "Tiles processed per batch (default 8)");

    BenchGenOpts bg;
    CLI::App* c_bg = app.add_subcommand("bench-gen", "Cross-class generalization benchmark");
    c_bg->add_option("--config", bg.config_path, "Benchmark config JSON")->required();
    c_bg->add_option("--out-dir", bg.out_dir, "Output directory")->required();
    c_bg->add_flag("--dump-maps", bg.dump_maps, "Write per-FOV amplitude-difference maps (PGM)");

    BenchZOpts bz;
    CLI::App* c_bz = app.add_subcommand("bench-z", "Per-height-pair quality benchmark");
    c_bz->add_option("--config", bz.config_path, "Benchmark config JSON")->required();
    c_bz->add_option("--out-dir", bz.out_dir, "Output directory")->required();

    BenchTimeOpts bt;
    CLI::App* c_bt = app.add_subcommand("bench-time", "Inference throughput benchmark");
    c_bt->add_option("--model", bt.model_path, "Trained checkpoint (FINW)")->required();
    c_bt->add_option("--dataset", bt.dataset_dir, "Dataset directory")->required();
    c_bt->add_option("--batches", bt.batches, "Batch sizes to time (default 1,20)")->delimiter(',');
    c_bt->add_option("--reps", bt.reps, "Timed repetitions, fastest kept (default 3)");
    c_bt->add_option("--out-dir", bt.out_dir, "Output directory")->required();

    MetricsOpts me;
    CLI::App* c_me = app.add_subcommand("metrics", "Compare a reconstruction against a reference");
    c_me->add_option("--pred", me.pred_path, "Reconstruction (CFLD)")->required();
    c_me->add_option("--gt", me.gt_path, "Reference field (CFLD)")->required();
    c_me->add_flag("--no-align", me.no_align, "Skip global phase alignment");
    c_me->add_option("--out", me.out_path, "Optional metrics CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (threads > 0) set_thread_count(threads);
        if (c_sim->parsed()) run_simulate(sim);
        if (c_mh->parsed()) run_mhpr(mh);
        if (c_af->parsed()) run_autofocus(af);
        if (c_ps->parsed()) run_psr(ps);
        if (c_ds->parsed()) run_dataset(ds);
        if (c_tr->parsed()) run_train(tr);
        if (c_in->parsed()) run_infer(in);
        if (c_bg->parsed()) run_bench_gen(bg);
        if (c_bz->parsed()) run_bench_z(bz);
        if (c_bt->parsed()) run_bench_time(bt);
        if (c_me->parsed()) run_metrics(me);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const format_error& e) {
        std::cerr << "format error: " << e.what() << "\n";
        return 3;
    } catch (const numeric_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

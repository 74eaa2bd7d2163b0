#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "holofin/bench.hpp"
#include "holofin/errors.hpp"
#include "holofin/metrics.hpp"
#include "holofin/rng.hpp"
#include "test_util.hpp"

using namespace holofin;

namespace {

// Independent SSIM evaluation: separable window construction and two-pass
// (mean-subtracted) moment accumulation, unlike the library's one-pass form.
double ssim_oracle(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    std::array<double, 11> g{};
    for (int i = 0; i < 11; ++i) {
        g[static_cast<std::size_t>(i)] = std::exp(-((i - 5) * (i - 5)) / (2.0 * 1.5 * 1.5));
    }
    std::array<double, 121> win{};
    double wsum = 0.0;
    for (int y = 0; y < 11; ++y) {
        for (int x = 0; x < 11; ++x) {
            win[static_cast<std::size_t>(y * 11 + x)] =
                g[static_cast<std::size_t>(y)] * g[static_cast<std::size_t>(x)];
            wsum += win[static_cast<std::size_t>(y * 11 + x)];
        }
    }
    for (double& v : win) v /= wsum;

    const double c1 = 0.01 * 0.01;
    const double c2 = 0.03 * 0.03;
    double total = 0.0;
    int count = 0;
    for (int y0 = 0; y0 + 11 <= h; ++y0) {
        for (int x0 = 0; x0 + 11 <= w; ++x0) {
            double mu_a = 0.0;
            double mu_b = 0.0;
            for (int y = 0; y < 11; ++y) {
                for (int x = 0; x < 11; ++x) {
                    const double wt = win[static_cast<std::size_t>(y * 11 + x)];
                    mu_a += wt * a[static_cast<std::size_t>((y0 + y) * w + x0 + x)];
                    mu_b += wt * b[static_cast<std::size_t>((y0 + y) * w + x0 + x)];
                }
            }
            double va = 0.0;
            double vb = 0.0;
            double cov = 0.0;
            for (int y = 0; y < 11; ++y) {
                for (int x = 0; x < 11; ++x) {
                    const double wt = win[static_cast<std::size_t>(y * 11 + x)];
                    const double da = a[static_cast<std::size_t>((y0 + y) * w + x0 + x)] - mu_a;
                    const double db = b[static_cast<std::size_t>((y0 + y) * w + x0 + x)] - mu_b;
                    va += wt * da * da;
                    vb += wt * db * db;
                    cov += wt * da * db;
                }
            }
            total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                     ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
            ++count;
        }
    }
    return total / count;
}

std::vector<double> unit_amplitude_image(int side, std::uint64_t seed) {
    const ComplexField f = testutil::random_band_limited_field(side, seed);
    std::vector<double> img(f.data.size());
    double lo = std::abs(f.data[0]);
    double hi = lo;
    for (std::size_t i = 0; i < img.size(); ++i) {
        img[i] = std::abs(f.data[i]);
        lo = std::min(lo, img[i]);
        hi = std::max(hi, img[i]);
    }
    for (double& v : img) v = (v - lo) / (hi - lo);
    return img;
}

fin::FinConfig tiny_fin() {
    fin::FinConfig fc;
    fc.input_side = 16;
    fc.hologram_count = 2;
    fc.channels = 4;
    fc.k_schedule = {3, 2};
    return fc;
}

BenchConfig tiny_bench(int side = 16, int n_fovs = 4, int epochs = 2) {
    BenchConfig bc;
    bc.fin = tiny_fin();
    bc.fin.input_side = side;
    bc.dataset.n_fovs = n_fovs;
    bc.dataset.side = side;
    bc.dataset.split_train = 3;
    bc.dataset.split_test = 1;
    bc.dataset.gt_from_truth = true;
    bc.dataset.seed = 77;
    bc.train.epochs = epochs;
    bc.train.batch_size = 2;
    bc.train.seed = 9;
    return bc;
}

}  // namespace

TEST_CASE("field_metrics is the zero/one fixed point on identical fields") {
    const ComplexField f = testutil::random_band_limited_field(32, 404);
    for (bool align : {false, true}) {
        const FieldMetrics m = field_metrics(f, f, align);
        CHECK(m.amp_rmse == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.phase_rmse == doctest::Approx(0.0).epsilon(1e-12));
        CHECK(m.amp_ssim == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(m.phase_ssim == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("global phase offsets are removed by alignment and measured without it") {
    const ComplexField gt = testutil::random_band_limited_field(32, 405);
    ComplexField pred = gt;
    const std::complex<double> rot = std::polar(1.0, 0.7);
    for (auto& v : pred.data) v *= rot;

    const FieldMetrics aligned = field_metrics(pred, gt, true);
    CHECK(aligned.amp_rmse < 1e-12);
    CHECK(aligned.phase_rmse < 1e-6);
    CHECK(aligned.amp_ssim == doctest::Approx(1.0).epsilon(1e-9));

    const FieldMetrics raw = field_metrics(pred, gt, false);
    CHECK(raw.phase_rmse == doctest::Approx(0.7).epsilon(1e-9));
    CHECK(raw.amp_rmse < 1e-12);
}

TEST_CASE("phase differences wrap across the branch cut") {
    ComplexField pred;
    pred.height = pred.width = 16;
    pred.pixel_pitch_um = 0.37;
    pred.wavelength_um = 0.530;
    pred.data.assign(256, std::polar(1.0, std::numbers::pi - 0.05));
    ComplexField gt = pred;
    gt.data.assign(256, std::polar(1.0, -std::numbers::pi + 0.05));

    const FieldMetrics m = field_metrics(pred, gt, false);
    CHECK(m.phase_rmse == doctest::Approx(0.1).epsilon(1e-10));
    CHECK(m.amp_rmse == doctest::Approx(0.0).epsilon(1e-12));

    const FieldMetrics aligned = field_metrics(pred, gt, true);
    CHECK(aligned.phase_rmse < 1e-9);
}

TEST_CASE("amplitude RMSE matches the injected noise level") {
    const int side = 256;
    ComplexField gt;
    gt.height = gt.width = side;
    gt.pixel_pitch_um = 0.37;
    gt.wavelength_um = 0.530;
    gt.data.resize(static_cast<std::size_t>(side) * side);
    ComplexField pred = gt;
    Rng rng(515151);
    const double sigma = 0.05;
    for (std::size_t i = 0; i < gt.data.size(); ++i) {
        const double amp = 0.8 + 0.4 * rng.uniform();
        const double phase = 2.0 * std::numbers::pi * rng.uniform() - std::numbers::pi;
        gt.data[i] = std::polar(amp, phase);
        pred.data[i] = std::polar(amp + sigma * rng.gaussian(), phase);
    }
    const FieldMetrics m = field_metrics(pred, gt, false);
    CHECK(m.amp_rmse == doctest::Approx(sigma).epsilon(0.02));
    CHECK(m.phase_rmse < 1e-9);
}

TEST_CASE("ssim is symmetric and matches an independent evaluation") {
    const int side = 32;
    const std::vector<double> a = unit_amplitude_image(side, 606);
    const std::vector<double> b = unit_amplitude_image(side, 607);
    CHECK(ssim(a, b, side, side) == doctest::Approx(ssim(b, a, side, side)).epsilon(1e-12));
    CHECK(ssim(a, b, side, side) == doctest::Approx(ssim_oracle(a, b, side, side)).epsilon(1e-10));

    std::vector<double> inv(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) inv[i] = 1.0 - a[i];
    CHECK(ssim(a, inv, side, side) ==
          doctest::Approx(ssim_oracle(a, inv, side, side)).epsilon(1e-10));
    CHECK(ssim(a, inv, side, side) < 0.0);  // anticorrelated structure
}

TEST_CASE("ssim drops under translation") {
    const int side = 64;
    const std::vector<double> a = unit_amplitude_image(side, 608);
    std::vector<double> shifted(a.size());
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            shifted[static_cast<std::size_t>(((y + 5) % side) * side + x)] =
                a[static_cast<std::size_t>(y * side + x)];
        }
    }
    const double self = ssim(a, a, side, side);
    CHECK(self == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(ssim(a, shifted, side, side) < self);
    CHECK(ssim(a, shifted, side, side) < 0.9);
}

TEST_CASE("ssim and field_metrics reject malformed inputs") {
    const std::vector<double> small(64, 0.5);
    CHECK_THROWS_AS(ssim(small, small, 8, 8), config_error);
    std::vector<double> bad(32 * 32, 0.5);
    std::vector<double> good(32 * 32, 0.5);
    bad[5] = 1.5;
    CHECK_THROWS_AS(ssim(bad, good, 32, 32), config_error);
    bad[5] = -0.5;
    CHECK_THROWS_AS(ssim(bad, good, 32, 32), config_error);
    CHECK_THROWS_AS(ssim(std::vector<double>(100, 0.5), good, 32, 32), config_error);

    const ComplexField a = testutil::random_band_limited_field(32, 1);
    const ComplexField b = testutil::random_band_limited_field(16, 1);
    CHECK_THROWS_AS(field_metrics(a, b, true), config_error);
}

TEST_CASE("bench report validation catches bad rows") {
    BenchReport empty;
    CHECK_THROWS_AS(empty.validate(), config_error);

    BenchReport bad;
    bad.rows.push_back({"a", "b", "fin", 2, 1, {0.1, 0.1, 0.9, 0.9}});
    bad.rows[0].metrics.amp_rmse = std::nan("");
    CHECK_THROWS_AS(bad.validate(), numeric_error);

    BenchReport ok;
    ok.rows.push_back({"a", "b", "fin", 2, 1, {0.1, 0.1, 0.9, 0.9}});
    CHECK_NOTHROW(ok.validate());
    const std::string csv = bench_report_csv(ok);
    CHECK(csv.find("# holofin bench csv v1") == 0);
    CHECK(csv.find("train,test,method,m,fovs") != std::string::npos);
    const std::string table = render_bench_table(ok);
    CHECK(table.find("fin") != std::string::npos);
    CHECK(table.find("amp_rmse") != std::string::npos);
}

TEST_CASE("cross-class benchmark produces the full grid plus baselines") {
    SampleSpec texture;  // connected texture defaults
    SampleSpec blobs;
    blobs.sample_class = SampleClass::sparse_blobs;
    blobs.density = 0.05;
    blobs.feature_scale_um = 1.0;

    const BenchConfig bc = tiny_bench();
    const BenchReport report = bench_generalization({texture, blobs}, 2, bc);
    REQUIRE(report.rows.size() == 6);

    int fin_rows = 0;
    int mhpr_rows = 0;
    for (const BenchRow& row : report.rows) {
        CHECK(row.hologram_count == 2);
        CHECK(row.fov_count == 1);
        CHECK(std::isfinite(row.metrics.amp_rmse));
        if (row.method == "fin") {
            ++fin_rows;
            CHECK((row.train_label == "connected-texture" || row.train_label == "sparse-blobs"));
        } else {
            CHECK(row.method == "mhpr");
            CHECK(row.train_label == "-");
            ++mhpr_rows;
        }
    }
    CHECK(fin_rows == 4);
    CHECK(mhpr_rows == 2);

    // Pure function of (seed, config): a rerun reproduces the CSV bit for bit.
    const BenchReport again = bench_generalization({texture, blobs}, 2, bc);
    CHECK(bench_report_csv(again) == bench_report_csv(report));

    CHECK_THROWS_AS(bench_generalization({texture}, 2, bc), config_error);
    CHECK_THROWS_AS(bench_generalization({texture, blobs}, 4, bc), config_error);
}

TEST_CASE("z-pair benchmark trains per pair and rejects bad pairs") {
    const BenchConfig bc = tiny_bench();
    const BenchReport report = bench_z_pairs({{300.0, 450.0}}, bc);
    REQUIRE(report.rows.size() == 2);
    CHECK(report.rows[0].method == "fin");
    CHECK(report.rows[0].train_label == "300-450");
    CHECK(report.rows[0].test_label == "300-450");
    CHECK(report.rows[1].method == "mhpr");
    CHECK(report.rows[1].test_label == "300-450");
    for (const BenchRow& row : report.rows) CHECK(row.hologram_count == 2);

    CHECK_THROWS_AS(bench_z_pairs({}, bc), config_error);
    CHECK_THROWS_AS(bench_z_pairs({{450.0, 450.0}}, bc), config_error);
    CHECK_THROWS_AS(bench_z_pairs({{200.0, 450.0}}, bc), config_error);
    CHECK_THROWS_AS(bench_z_pairs({{500.0, 400.0}}, bc), config_error);
    CHECK_THROWS_AS(bench_z_pairs({{300.0, 601.0}}, bc), config_error);
}

TEST_CASE("timing benchmark reports positive amortized times and sane ratios") {
    BenchConfig bc = tiny_bench(32, 6, 1);
    bc.dataset.split_train = 2;
    bc.dataset.split_test = 1;  // 6 FOVs -> 4 train / 2 test
    DatasetConfig dc = bc.dataset;
    const Dataset dataset = build_dataset(dc);
    REQUIRE(dataset.test_indices.size() == 2);

    fin::FinConfig fc = tiny_fin();
    fc.input_side = 32;
    const fin::FinModel model = fin::make_model(fc, 33);

    const TimingReport report = bench_timing(model, dataset, {1, 2}, 5);
    REQUIRE(report.rows.size() == 4);  // fin batch 1, fin batch 2, mhpr M=2, mhpr M=3

    const double area_mm2 = std::pow(32 * 0.37 / 1000.0, 2);
    double fin_batch1 = 0.0;
    double fin_batch2 = 0.0;
    double mhpr3 = 0.0;
    for (const TimingRow& row : report.rows) {
        CHECK(row.s_per_fov > 0.0);
        CHECK(std::isfinite(row.s_per_fov));
        CHECK(row.s_per_mm2 == doctest::Approx(row.s_per_fov / area_mm2).epsilon(1e-12));
        CHECK(row.fov_count == 2);
        CHECK(row.reps == 5);
        if (row.method == "fin" && row.batch == 1) fin_batch1 = row.s_per_fov;
        if (row.method == "fin" && row.batch == 2) fin_batch2 = row.s_per_fov;
        if (row.method == "mhpr" && row.hologram_count == 3) mhpr3 = row.s_per_fov;
    }
    CHECK(report.rows[2].method == "mhpr");
    CHECK(report.rows[2].hologram_count == 2);
    CHECK(report.rows[2].batch == 0);

    // Batched inference must not cost more per FOV (small jitter allowance on a
    // serial machine where the work is identical).
    CHECK(fin_batch2 <= fin_batch1 * 1.15);
    // The iterative baseline does hundreds of propagations per FOV; the network
    // does a fixed shallow pass.
    CHECK(mhpr3 > fin_batch1);

    const std::string csv = timing_report_csv(report);
    CHECK(csv.find("# holofin timing csv v1") == 0);
    CHECK(csv.find("method,m,batch,fovs,reps") != std::string::npos);
    CHECK(render_timing_table(report).find("mhpr") != std::string::npos);

    CHECK_THROWS_AS(bench_timing(model, dataset, {0}, 3), config_error);
    CHECK_THROWS_AS(bench_timing(model, dataset, {}, 3), config_error);
    CHECK_THROWS_AS(bench_timing(model, dataset, {1}, 0), config_error);
    fin::FinConfig wide = tiny_fin();
    wide.input_side = 32;
    wide.hologram_count = 4;
    CHECK_THROWS_AS(bench_timing(fin::make_model(wide, 1), dataset, {1}, 3), config_error);
    CHECK_THROWS_AS(bench_timing(fin::make_model(tiny_fin(), 1), dataset, {1}, 3), config_error);
}

TEST_CASE("network cost is nearly independent of the input plane count") {
    BenchConfig bc = tiny_bench(32, 4, 1);
    bc.dataset.split_train = 1;
    bc.dataset.split_test = 1;  // 2 test FOVs
    DatasetConfig dc = bc.dataset;
    dc.z_list_um = {300.0, 400.0, 500.0, 600.0};
    const Dataset dataset = build_dataset(dc);

    fin::FinConfig f3 = tiny_fin();
    f3.input_side = 32;
    f3.hologram_count = 3;
    fin::FinConfig f4 = f3;
    f4.hologram_count = 4;

    const TimingReport r3 = bench_timing(fin::make_model(f3, 5), dataset, {1}, 5);
    const TimingReport r4 = bench_timing(fin::make_model(f4, 5), dataset, {1}, 5);
    const double t3 = r3.rows[0].s_per_fov;
    const double t4 = r4.rows[0].s_per_fov;
    CHECK(std::abs(t4 - t3) / t3 < 0.10);
}

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "holofin/autofocus.hpp"
#include "holofin/errors.hpp"
#include "holofin/mhpr.hpp"
#include "holofin/propagate.hpp"
#include "holofin/psr.hpp"
#include "test_util.hpp"

using namespace holofin;
using testutil::kLambdaUm;
using testutil::kPitchUm;

namespace {

HologramStack stack_for(const ComplexField& sample, std::vector<double> z, std::uint64_t seed) {
    return simulate_stack(sample, std::move(z), 0.0, seed);
}

}  // namespace

TEST_CASE("mhpr: uniform sample is a fixed point after one sweep") {
    ComplexField sample = make_field(32, 32, kPitchUm, kLambdaUm, {1.0, 0.0});
    HologramStack stack = stack_for(sample, {300.0, 450.0, 600.0}, 1);
    MhprConfig cfg;
    cfg.iterations = 1;
    MhprResult res = mhpr_reconstruct(stack, cfg);
    // The global piston phase is unobservable from intensities; align it
    // before comparing against the unit sample.
    std::complex<double> mean{0.0, 0.0};
    for (const auto& v : res.field.data) mean += v;
    std::complex<double> rot = std::conj(mean / std::abs(mean));
    for (auto& v : res.field.data) v *= rot;
    CHECK(testutil::max_abs_diff(res.field.data, sample.data) < 1e-6);
}

TEST_CASE("mhpr: eight planes recover a weak phase object far better than back-propagation") {
    ComplexField sample = testutil::weak_phase_field(64, 42, 0.35);
    std::vector<double> z8;
    for (int k = 0; k < 8; ++k) z8.push_back(300.0 + k * 300.0 / 7.0);
    HologramStack stack = stack_for(sample, z8, 5);

    ComplexField init = make_field(64, 64, kPitchUm, kLambdaUm);
    for (std::size_t i = 0; i < init.data.size(); ++i)
        init.data[i] = {std::sqrt(stack.holograms[0].data[i]), 0.0};
    init = angular_spectrum_propagate(init, -z8[0]);
    double rmse_init = testutil::amplitude_rmse(init, sample);

    MhprConfig cfg;
    cfg.iterations = 100;
    cfg.record_residuals = true;
    MhprResult res = mhpr_reconstruct(stack, cfg);
    double rmse_final = testutil::amplitude_rmse(res.field, sample);

    CHECK(rmse_final <= 0.2 * rmse_init);  // pilot run: ratio 0.0087

    REQUIRE(res.residuals.size() == 100);
    for (std::size_t i = 1; i < res.residuals.size(); ++i)
        CHECK(res.residuals[i] <= res.residuals[i - 1] + 1e-6);
}

TEST_CASE("mhpr: three planes beat two planes on the same samples") {
    for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        ComplexField sample = testutil::weak_phase_field(64, seed, 0.35);
        HologramStack s2 = stack_for(sample, {300.0, 450.0}, seed);
        HologramStack s3 = stack_for(sample, {300.0, 450.0, 600.0}, seed);
        MhprConfig cfg;
        cfg.iterations = 100;
        double r2 = testutil::amplitude_rmse(mhpr_reconstruct(s2, cfg).field, sample);
        double r3 = testutil::amplitude_rmse(mhpr_reconstruct(s3, cfg).field, sample);
        CHECK(r3 <= r2);
    }
}

TEST_CASE("mhpr: reconstruction is insensitive to the plane visit order") {
    ComplexField sample = testutil::weak_phase_field(64, 21, 0.35);
    HologramStack stack = stack_for(sample, {300.0, 450.0, 600.0}, 3);
    MhprConfig ascending;
    ascending.iterations = 60;
    MhprConfig descending = ascending;
    descending.visit_order = {2, 1, 0};
    ComplexField fa = mhpr_reconstruct(stack, ascending).field;
    ComplexField fb = mhpr_reconstruct(stack, descending).field;
    CHECK(testutil::amplitude_rmse(fa, fb) < 1e-3);  // pilot run: 3.2e-4
}

TEST_CASE("mhpr: config and stack validation") {
    ComplexField sample = testutil::weak_phase_field(32, 4, 0.3);
    HologramStack stack = stack_for(sample, {300.0, 450.0}, 4);
    MhprConfig cfg;

    cfg.iterations = 0;
    CHECK_THROWS_AS(mhpr_reconstruct(stack, cfg), config_error);

    cfg.iterations = 1;
    cfg.visit_order = {0};
    CHECK_THROWS_AS(mhpr_reconstruct(stack, cfg), config_error);
    cfg.visit_order = {1, 1};
    CHECK_THROWS_AS(mhpr_reconstruct(stack, cfg), config_error);

    HologramStack empty;
    CHECK_THROWS_AS(mhpr_reconstruct(empty, MhprConfig{}), config_error);

    // A single plane degenerates to back-propagation with amplitude replacement.
    HologramStack single = stack_for(sample, {400.0}, 4);
    MhprResult res = mhpr_reconstruct(single, MhprConfig{});
    CHECK(res.field.height == 32);
}

TEST_CASE("mhpr: residual CSV trace round-trips") {
    ComplexField sample = testutil::weak_phase_field(32, 5, 0.3);
    HologramStack stack = stack_for(sample, {300.0, 450.0, 600.0}, 5);
    MhprConfig cfg;
    cfg.iterations = 5;
    cfg.record_residuals = true;
    MhprResult res = mhpr_reconstruct(stack, cfg);

    const std::string path = "mhpr_residuals_test.csv";
    write_residuals_csv(path, res.residuals);
    std::ifstream in(path);
    REQUIRE(in.good());
    std::string header;
    std::getline(in, header);
    CHECK(header == "iteration,residual");
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string idx, val;
        REQUIRE(std::getline(row, idx, ','));
        REQUIRE(std::getline(row, val, ','));
        CHECK(std::stoul(idx) == static_cast<unsigned long>(rows));
        CHECK(std::stod(val) == doctest::Approx(res.residuals[rows]).epsilon(1e-15));
        ++rows;
    }
    CHECK(rows == 5);
    in.close();
    std::remove(path.c_str());
}

TEST_CASE("edge_sparsity_metric: linear ramp has zero gradient variance") {
    const int side = 32;
    std::vector<double> ramp(static_cast<std::size_t>(side) * side);
    for (int y = 0; y < side; ++y)
        for (int x = 0; x < side; ++x) ramp[static_cast<std::size_t>(y) * side + x] = x;
    CHECK(edge_sparsity_metric(ramp, side, side) < 1e-6);
}

TEST_CASE("edge_sparsity_metric: invariant under positive rescaling") {
    ComplexField f = testutil::absorbing_blobs(48, 9);
    std::vector<double> amp(f.data.size()), scaled(f.data.size());
    for (std::size_t i = 0; i < amp.size(); ++i) {
        amp[i] = std::abs(f.data[i]);
        scaled[i] = 3.7 * amp[i];
    }
    double a = edge_sparsity_metric(amp, 48, 48);
    double b = edge_sparsity_metric(scaled, 48, 48);
    CHECK(std::abs(a - b) / a < 1e-12);
    CHECK(a > 0.0);
}

TEST_CASE("edge_sparsity_metric: rejects constant and malformed input") {
    std::vector<double> flat(16 * 16, 2.5);
    CHECK_THROWS_AS(edge_sparsity_metric(flat, 16, 16), numeric_error);
    CHECK_THROWS_AS(edge_sparsity_metric(flat, 2, 2), config_error);
    CHECK_THROWS_AS(edge_sparsity_metric(flat, 16, 8), config_error);
}

TEST_CASE("edge_sparsity_metric: sweep over z peaks at the true focus") {
    const double z_star = 450.0;
    ComplexField sample = testutil::absorbing_blobs(64, 31);
    IntensityImage holo = simulate_hologram(sample, z_star, 0.0, 9);

    ComplexField sensor = make_field(64, 64, kPitchUm, kLambdaUm);
    for (std::size_t i = 0; i < holo.data.size(); ++i)
        sensor.data[i] = {std::sqrt(holo.data[i]), 0.0};

    double best_z = 0.0, best_score = -1.0;
    std::vector<double> amp(holo.data.size());
    for (double z = 300.0; z <= 600.0 + 1e-9; z += 10.0) {
        ComplexField back = angular_spectrum_propagate(sensor, -z);
        for (std::size_t i = 0; i < amp.size(); ++i) amp[i] = std::abs(back.data[i]);
        double score = edge_sparsity_metric(amp, 64, 64);
        if (score > best_score) {
            best_score = score;
            best_z = z;
        }
    }
    CHECK(std::abs(best_z - z_star) <= 10.0);
}

TEST_CASE("autofocus: recovers the simulated distance within one coarse step") {
    ComplexField sample = testutil::absorbing_blobs(64, 31);
    for (double z_star : {320.0, 410.0, 500.0, 590.0}) {
        IntensityImage holo = simulate_hologram(sample, z_star, 0.0, 9);
        AutofocusResult r = autofocus(holo, 300.0, 600.0, 5.0);
        CHECK(std::abs(r.z_um - z_star) <= 5.0);  // pilot run: worst 1.01 um
    }
}

TEST_CASE("autofocus: on-grid focus refines by at most half a step") {
    ComplexField sample = testutil::absorbing_blobs(64, 31);
    IntensityImage holo = simulate_hologram(sample, 450.0, 0.0, 9);
    AutofocusResult r = autofocus(holo, 300.0, 600.0, 5.0);
    CHECK(r.refined);
    CHECK(std::abs(r.z_um - 450.0) <= 2.5);
}

TEST_CASE("autofocus: independent samples at the same distance agree") {
    IntensityImage ha = simulate_hologram(testutil::absorbing_blobs(64, 31), 450.0, 0.0, 9);
    IntensityImage hb = simulate_hologram(testutil::absorbing_blobs(64, 77), 450.0, 0.0, 10);
    AutofocusResult ra = autofocus(ha, 300.0, 600.0, 5.0);
    AutofocusResult rb = autofocus(hb, 300.0, 600.0, 5.0);
    CHECK(std::abs(ra.z_um - rb.z_um) <= 2.0 * 5.0);
}

TEST_CASE("autofocus: degenerate grid returns the best coarse point, unrefined") {
    ComplexField sample = testutil::absorbing_blobs(64, 31);
    IntensityImage holo = simulate_hologram(sample, 450.0, 0.0, 9);
    AutofocusResult r = autofocus(holo, 440.0, 460.0, 15.0);  // two grid points
    CHECK_FALSE(r.refined);
    CHECK((r.z_um == doctest::Approx(440.0) || r.z_um == doctest::Approx(455.0)));

    CHECK_THROWS_AS(autofocus(holo, 600.0, 300.0, 5.0), config_error);
    CHECK_THROWS_AS(autofocus(holo, 300.0, 600.0, 0.0), config_error);
}

TEST_CASE("estimate_shifts: identical frames give zero shifts") {
    std::vector<double> fine = testutil::fine_scene(96, 55);
    LowResBurst burst;
    for (int k = 0; k < 3; ++k)
        burst.frames.push_back(testutil::downsample_frame(fine, 96, 6, 0.0, 0.0));
    auto shifts = estimate_shifts(burst);
    REQUIRE(shifts.size() == 3);
    for (const auto& [dx, dy] : shifts) {
        CHECK(std::abs(dx) < 1e-6);
        CHECK(std::abs(dy) < 1e-6);
    }
}

TEST_CASE("estimate_shifts: recovers a 6x6 sub-pixel shift grid") {
    const int factor = 6, coarse = 32;
    std::vector<double> fine = testutil::fine_scene(coarse * factor, 88);
    LowResBurst burst;
    std::vector<std::pair<double, double>> truth;
    for (int sy = 0; sy < 6; ++sy)
        for (int sx = 0; sx < 6; ++sx) {
            double dx = sx / 6.0, dy = sy / 6.0;
            burst.frames.push_back(
                testutil::downsample_frame(fine, coarse * factor, factor, dx, dy));
            truth.emplace_back(dx, dy);
        }
    auto est = estimate_shifts(burst);
    REQUIRE(est.size() == truth.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        worst = std::max(worst, std::abs(est[k].first - truth[k].first));
        worst = std::max(worst, std::abs(est[k].second - truth[k].second));
    }
    CHECK(worst < 0.1);  // pilot run: 0.046 px
}

TEST_CASE("estimate_shifts: swapping the reference negates the shifts") {
    const int factor = 6, coarse = 32;
    std::vector<double> fine = testutil::fine_scene(coarse * factor, 88);
    IntensityImage f0 = testutil::downsample_frame(fine, coarse * factor, factor, 0.0, 0.0);
    IntensityImage fk = testutil::downsample_frame(fine, coarse * factor, factor, 0.5, 1.0 / 3.0);
    LowResBurst fwd, rev;
    fwd.frames = {f0, fk};
    rev.frames = {fk, f0};
    auto sf = estimate_shifts(fwd);
    auto sr = estimate_shifts(rev);
    CHECK(std::abs(sf[1].first + sr[1].first) < 0.05);
    CHECK(std::abs(sf[1].second + sr[1].second) < 0.05);
}

TEST_CASE("estimate_shifts: rejects flat frames and tiny bursts") {
    IntensityImage flat;
    flat.height = flat.width = 16;
    flat.pixel_pitch_um = kPitchUm;
    flat.wavelength_um = kLambdaUm;
    flat.data.assign(256, 1.0);
    LowResBurst burst;
    burst.frames = {flat, flat};
    CHECK_THROWS_AS(estimate_shifts(burst), numeric_error);

    LowResBurst one;
    one.frames = {flat};
    CHECK_THROWS_AS(estimate_shifts(one), config_error);
}

TEST_CASE("pixel_super_resolve: factor 1 with zero shifts is the identity") {
    std::vector<double> fine = testutil::fine_scene(96, 14);
    IntensityImage frame = testutil::downsample_frame(fine, 96, 6, 0.0, 0.0);
    LowResBurst burst;
    burst.frames = {frame};
    IntensityImage out = pixel_super_resolve(burst, 1, {{0.0, 0.0}});
    CHECK(out.height == frame.height);
    CHECK(out.width == frame.width);
    CHECK(out.pixel_pitch_um == doctest::Approx(frame.pixel_pitch_um));
    for (std::size_t i = 0; i < out.data.size(); ++i)
        CHECK(out.data[i] == doctest::Approx(frame.data[i]).epsilon(1e-12));

    // Two identical frames average to the same image.
    burst.frames.push_back(frame);
    IntensityImage out2 = pixel_super_resolve(burst, 1, {{0.0, 0.0}, {0.0, 0.0}});
    CHECK(out2.data == out.data);
}

TEST_CASE("pixel_super_resolve: full 6x6 burst beats nearest-neighbour upsampling by 3 dB") {
    const int factor = 6, coarse = 32, fs = coarse * factor;
    std::vector<double> fine = testutil::fine_scene(fs, 88);
    LowResBurst burst;
    std::vector<std::pair<double, double>> truth;
    for (int sy = 0; sy < 6; ++sy)
        for (int sx = 0; sx < 6; ++sx) {
            burst.frames.push_back(
                testutil::downsample_frame(fine, fs, factor, sx / 6.0, sy / 6.0));
            truth.emplace_back(sx / 6.0, sy / 6.0);
        }
    auto est = estimate_shifts(burst);
    IntensityImage sr = pixel_super_resolve(burst, factor, est);
    CHECK(sr.height == fs);
    CHECK(sr.pixel_pitch_um == doctest::Approx(kPitchUm));

    std::vector<double> nn(fine.size());
    for (int y = 0; y < fs; ++y)
        for (int x = 0; x < fs; ++x)
            nn[static_cast<std::size_t>(y) * fs + x] =
                burst.frames[0].data[static_cast<std::size_t>(y / factor) * coarse + x / factor];
    double gain = testutil::psnr(fine, sr.data) - testutil::psnr(fine, nn);
    CHECK(gain >= 3.0);  // pilot run: 8.1 dB

    // Flux preservation: the fine grid is fully covered, so the output mean
    // equals the mean of all input samples.
    double mean_in = 0.0, mean_out = 0.0;
    for (const auto& fr : burst.frames)
        for (double v : fr.data) mean_in += v;
    mean_in /= static_cast<double>(burst.frames.size() * burst.frames[0].data.size());
    for (double v : sr.data) mean_out += v;
    mean_out /= static_cast<double>(sr.data.size());
    CHECK(std::abs(mean_out - mean_in) / mean_in < 1e-6);
}

TEST_CASE("pixel_super_resolve: sparse burst fills holes and preserves scale") {
    const int factor = 4, coarse = 24, fs = coarse * factor;
    std::vector<double> fine = testutil::fine_scene(fs, 23);
    LowResBurst burst;
    std::vector<std::pair<double, double>> shifts = {{0.0, 0.0}, {0.5, 0.25}};
    for (const auto& [dx, dy] : shifts)
        burst.frames.push_back(testutil::downsample_frame(fine, fs, factor, dx, dy));
    IntensityImage out = pixel_super_resolve(burst, factor, shifts);
    // Every cell is populated (directly or by interpolation) and positive.
    for (double v : out.data) CHECK(v > 0.0);
    double mean_out = 0.0;
    for (double v : out.data) mean_out += v;
    mean_out /= static_cast<double>(out.data.size());
    CHECK(mean_out == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("pixel_super_resolve: argument validation") {
    std::vector<double> fine = testutil::fine_scene(48, 2);
    IntensityImage frame = testutil::downsample_frame(fine, 48, 6, 0.0, 0.0);
    LowResBurst burst;
    burst.frames = {frame};
    CHECK_THROWS_AS(pixel_super_resolve(burst, 0, {{0.0, 0.0}}), config_error);
    CHECK_THROWS_AS(pixel_super_resolve(burst, 6, {}), config_error);
    LowResBurst empty;
    CHECK_THROWS_AS(pixel_super_resolve(empty, 6, {}), config_error);
}

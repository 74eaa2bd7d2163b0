// Acceptance gate for the holofin stack. Runs twelve end-to-end checks that
// pin down the load-bearing behaviors: propagation exactness, the classical
// reconstruction oracle, autofocus, pixel super-resolution, autodiff
// correctness, network architecture invariants, the toy training claim,
// cross-class generalization, the loss closed forms, tiled inference, and CLI
// determinism. Each check prints one [PASS]/[FAIL] line with the measured
// values; the exit code is the number of failures.
//
// The training check builds a 420-FOV dataset and trains the network from
// scratch, so a full run takes on the order of an hour on one CPU core.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "holofin/autofocus.hpp"
#include "holofin/bench.hpp"
#include "holofin/dataset.hpp"
#include "holofin/fin.hpp"
#include "holofin/metrics.hpp"
#include "holofin/mhpr.hpp"
#include "holofin/ops.hpp"
#include "holofin/propagate.hpp"
#include "holofin/psr.hpp"
#include "holofin/rng.hpp"
#include "holofin/synth.hpp"
#include "holofin/train.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace holofin;

namespace {

int g_failures = 0;

void report(int index, const std::string& title, bool ok, const std::string& detail) {
    std::printf("[%s] %2d. %s (%s)\n", ok ? "PASS" : "FAIL", index, title.c_str(),
                detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failures;
}

double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string format(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[512];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}

// ---- 1 & 2: propagation ---------------------------------------------------

void check_roundtrip() {
    const auto t0 = std::chrono::steady_clock::now();
    const ComplexField f = testutil::random_band_limited_field(256, 7);
    const ComplexField fwd = angular_spectrum_propagate(f, 450.0);
    const ComplexField back = angular_spectrum_propagate(fwd, -450.0);
    const double err = testutil::max_abs_diff(back.data, f.data);
    const double dt = seconds_since(t0);
    report(1, "propagation round trip at 256x256", err < 1e-6 && dt < 1.0,
           format("max|err| %.2e, %.2f s", err, dt));
}

void check_semigroup_energy() {
    const ComplexField f = testutil::random_band_limited_field(256, 9);
    const ComplexField two_step =
        angular_spectrum_propagate(angular_spectrum_propagate(f, 180.0), 270.0);
    const ComplexField direct = angular_spectrum_propagate(f, 450.0);
    const double sg_err = testutil::max_abs_diff(two_step.data, direct.data);
    const double e0 = testutil::energy(f.data);
    const double e1 = testutil::energy(direct.data);
    const double en_err = std::abs(e1 - e0) / e0;
    report(2, "propagation semigroup and energy conservation",
           sg_err < 1e-8 && en_err < 1e-9,
           format("semigroup %.2e, energy rel %.2e", sg_err, en_err));
}

// ---- 3: classical multi-height oracle ------------------------------------

void check_mhpr_oracle() {
    const auto t0 = std::chrono::steady_clock::now();
    const ComplexField truth = testutil::weak_phase_field(256, 11, 0.5);
    std::vector<double> z(8);
    for (int m = 0; m < 8; ++m) z[m] = 300.0 + 300.0 * m / 7.0;
    const HologramStack stack = simulate_stack(truth, z, 0.0, 21);

    // Initial estimate: zero-phase back-propagation of the closest hologram.
    ComplexField init = make_field(256, 256, truth.pixel_pitch_um, truth.wavelength_um);
    for (std::size_t i = 0; i < init.data.size(); ++i)
        init.data[i] = std::sqrt(std::max(0.0, stack.holograms[0].data[i]));
    init = angular_spectrum_propagate(init, -z[0]);
    const double init_rmse = testutil::amplitude_rmse(init, truth);

    MhprConfig cfg;
    cfg.record_residuals = true;
    const MhprResult result = mhpr_reconstruct(stack, cfg);
    const double final_rmse = testutil::amplitude_rmse(result.field, truth);

    bool monotone = true;
    for (std::size_t i = 1; i < result.residuals.size(); ++i)
        if (result.residuals[i] > result.residuals[i - 1] + 1e-6) monotone = false;
    const double dt = seconds_since(t0);
    report(3, "multi-height retrieval oracle at 256x256",
           final_rmse <= 0.2 * init_rmse && monotone && dt < 120.0,
           format("final rmse %.4f vs 0.2x init %.4f, residuals %s, %.1f s", final_rmse,
                  0.2 * init_rmse, monotone ? "non-increasing" : "NOT monotone", dt));
}

// ---- 4: autofocus ---------------------------------------------------------

void check_autofocus() {
    const double targets[] = {300.0, 450.0, 600.0};
    double worst = 0.0;
    for (int i = 0; i < 3; ++i) {
        const ComplexField truth = testutil::absorbing_blobs(256, 31 + i);
        const HologramStack stack = simulate_stack(truth, {targets[i]}, 0.0, 41 + i);
        const AutofocusResult r = autofocus(stack.holograms[0], 200.0, 700.0, 5.0);
        worst = std::max(worst, std::abs(r.z_um - targets[i]));
    }
    report(4, "edge-sparsity autofocus at three depths", worst <= 5.0,
           format("worst |z_hat - z*| %.2f um", worst));
}

// ---- 5: pixel super-resolution -------------------------------------------

void check_psr() {
    const int fine_side = 384, factor = 6;
    const std::vector<double> fine = testutil::fine_scene(fine_side, 51);
    LowResBurst burst;
    for (int i = 0; i < factor; ++i)
        for (int j = 0; j < factor; ++j) {
            const double dx = j / static_cast<double>(factor);
            const double dy = i / static_cast<double>(factor);
            burst.frames.push_back(testutil::downsample_frame(fine, fine_side, factor, dx, dy));
            burst.true_shifts.emplace_back(dx, dy);
        }
    const auto est = estimate_shifts(burst);
    double shift_err = 0.0;
    for (std::size_t k = 0; k < est.size(); ++k) {
        shift_err = std::max(shift_err, std::abs(est[k].first - burst.true_shifts[k].first));
        shift_err = std::max(shift_err, std::abs(est[k].second - burst.true_shifts[k].second));
    }
    const IntensityImage sr = pixel_super_resolve(burst, factor, est);
    const double psnr_sr = testutil::psnr(fine, sr.data);

    std::vector<double> nn(fine.size());
    const int coarse = fine_side / factor;
    for (int y = 0; y < fine_side; ++y)
        for (int x = 0; x < fine_side; ++x)
            nn[static_cast<std::size_t>(y) * fine_side + x] =
                burst.frames[0].data[static_cast<std::size_t>(y / factor) * coarse + x / factor];
    const double psnr_nn = testutil::psnr(fine, nn);
    report(5, "pixel super-resolution on a 6x6 burst",
           psnr_sr >= psnr_nn + 3.0 && shift_err < 0.1,
           format("sr %.1f dB vs nn %.1f dB, shift err %.3f px", psnr_sr, psnr_nn, shift_err));
}

// ---- 6: autodiff ----------------------------------------------------------

ad::Tensor random_tensor(const std::vector<int>& shape, std::uint64_t seed, double lo,
                         double hi) {
    ad::Tensor t(shape);
    Rng rng(seed);
    for (double& v : t.values) v = rng.uniform(lo, hi);
    return t;
}

// Random values bounded away from zero (for kinked ops).
ad::Tensor random_signed_tensor(const std::vector<int>& shape, std::uint64_t seed) {
    ad::Tensor t(shape);
    Rng rng(seed);
    for (double& v : t.values) {
        const double mag = rng.uniform(0.4, 1.2);
        v = rng.uniform() < 0.5 ? -mag : mag;
    }
    return t;
}

// One autodiff op under test: `build` records the op on a tape from leaf ids.
struct OpCase {
    std::string name;
    std::vector<ad::Tensor> inputs;
    std::function<std::vector<ad::NodeId>(ad::Tape&, const std::vector<ad::NodeId>&)> build;
    // Per-input perturbation scale for the adjoint identity. Scale 1 is exact
    // for ops linear/affine in that input; kinked inputs use a small scale
    // that cannot cross a kink given the bounded-away-from-zero values.
    std::vector<double> dx_scale;
};

std::vector<ad::Tensor> eval_case(const OpCase& c, const std::vector<ad::Tensor>& inputs) {
    ad::Tape t;
    std::vector<ad::NodeId> leaves;
    for (const auto& x : inputs) leaves.push_back(t.leaf(x));
    std::vector<ad::Tensor> out;
    for (ad::NodeId id : c.build(t, leaves)) out.push_back(t.value(id));
    return out;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// <c, f(x + dx) - f(x)> == <df/dx^T c, dx> for every input, checked one input
// at a time. The left side is exact (not a finite-difference estimate) because
// each op is linear, affine, or piecewise-linear in each argument separately
// at the sampled points; cabs is excluded here and checked via its closed-form
// directional derivative below.
double adjoint_error(const OpCase& c, std::uint64_t seed) {
    ad::Tape t;
    std::vector<ad::NodeId> leaves;
    for (const auto& x : c.inputs) leaves.push_back(t.leaf(x));
    const std::vector<ad::NodeId> outs = c.build(t, leaves);

    std::vector<ad::Tensor> covectors;
    Rng rng(seed);
    ad::NodeId loss = -1;
    for (ad::NodeId id : outs) {
        ad::Tensor cov(t.value(id).shape);
        for (double& v : cov.values) v = rng.uniform(0.5, 1.5);
        covectors.push_back(cov);
        const ad::NodeId weighted = ad::mul(t, id, t.leaf(cov));
        const ad::NodeId part =
            ad::scale(t, ad::mean(t, weighted), static_cast<double>(cov.numel()));
        loss = loss < 0 ? part : ad::add(t, loss, part);
    }
    t.backward(loss);

    const std::vector<ad::Tensor> base = eval_case(c, c.inputs);
    double worst = 0.0;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        std::vector<ad::Tensor> shifted = c.inputs;
        ad::Tensor dx(c.inputs[i].shape);
        Rng drng(mix_seed(seed, i + 1));
        for (std::size_t e = 0; e < dx.values.size(); ++e) {
            dx.values[e] = c.dx_scale[i] * drng.uniform(-1.0, 1.0);
            shifted[i].values[e] += dx.values[e];
        }
        const std::vector<ad::Tensor> moved = eval_case(c, shifted);
        double lhs = 0.0;
        for (std::size_t k = 0; k < moved.size(); ++k) {
            std::vector<double> diff(moved[k].values);
            for (std::size_t e = 0; e < diff.size(); ++e) diff[e] -= base[k].values[e];
            lhs += dot(covectors[k].values, diff);
        }
        const double rhs = dot(t.grad(leaves[i]).values, dx.values);
        worst = std::max(worst, std::abs(lhs - rhs) / std::max({1.0, std::abs(lhs)}));
    }
    return worst;
}

// Central-difference check of the same weighted-sum loss, every input entry.
double fd_error(const OpCase& c, std::uint64_t seed) {
    std::vector<ad::Tensor> covectors;
    {
        ad::Tape probe;
        std::vector<ad::NodeId> leaves;
        for (const auto& x : c.inputs) leaves.push_back(probe.leaf(x));
        Rng rng(seed);
        for (ad::NodeId id : c.build(probe, leaves)) {
            ad::Tensor cov(probe.value(id).shape);
            for (double& v : cov.values) v = rng.uniform(0.5, 1.5);
            covectors.push_back(cov);
        }
    }
    auto loss_of = [&](const std::vector<ad::Tensor>& inputs) {
        const std::vector<ad::Tensor> outs = eval_case(c, inputs);
        double s = 0.0;
        for (std::size_t k = 0; k < outs.size(); ++k) s += dot(covectors[k].values, outs[k].values);
        return s;
    };

    ad::Tape t;
    std::vector<ad::NodeId> leaves;
    for (const auto& x : c.inputs) leaves.push_back(t.leaf(x));
    const std::vector<ad::NodeId> outs = c.build(t, leaves);
    ad::NodeId loss = -1;
    for (std::size_t k = 0; k < outs.size(); ++k) {
        const ad::NodeId weighted = ad::mul(t, outs[k], t.leaf(covectors[k]));
        const ad::NodeId part =
            ad::scale(t, ad::mean(t, weighted), static_cast<double>(covectors[k].numel()));
        loss = loss < 0 ? part : ad::add(t, loss, part);
    }
    t.backward(loss);

    const double eps = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < c.inputs.size(); ++i) {
        for (std::size_t e = 0; e < c.inputs[i].values.size(); ++e) {
            std::vector<ad::Tensor> plus = c.inputs, minus = c.inputs;
            plus[i].values[e] += eps;
            minus[i].values[e] -= eps;
            const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * eps);
            const double an = t.grad(leaves[i]).values[e];
            worst = std::max(worst,
                             std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)}));
        }
    }
    return worst;
}

// Closed-form directional derivative of the complex magnitude, compared to the
// tape gradient through the same weighted loss.
double cabs_adjoint_error() {
    const ad::Tensor re = random_signed_tensor({2, 4, 4}, 601);
    const ad::Tensor im = random_signed_tensor({2, 4, 4}, 602);
    ad::Tape t;
    const ad::NodeId nre = t.leaf(re), nim = t.leaf(im);
    const ad::NodeId mag = ad::cabs(t, nre, nim);
    ad::Tensor cov(t.value(mag).shape);
    Rng rng(603);
    for (double& v : cov.values) v = rng.uniform(0.5, 1.5);
    const ad::NodeId loss = ad::scale(t, ad::mean(t, ad::mul(t, mag, t.leaf(cov))),
                                      static_cast<double>(cov.numel()));
    t.backward(loss);

    ad::Tensor dre(re.shape), dim(im.shape);
    Rng drng(604);
    for (std::size_t e = 0; e < dre.values.size(); ++e) {
        dre.values[e] = drng.uniform(-1.0, 1.0);
        dim.values[e] = drng.uniform(-1.0, 1.0);
    }
    double lhs = 0.0;
    for (std::size_t e = 0; e < re.values.size(); ++e) {
        const double m = std::hypot(re.values[e], im.values[e]);
        lhs += cov.values[e] * (re.values[e] * dre.values[e] + im.values[e] * dim.values[e]) / m;
    }
    const double rhs = dot(t.grad(nre).values, dre.values) + dot(t.grad(nim).values, dim.values);
    return std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs));
}

void check_autodiff() {
    std::vector<OpCase> cases;
    const std::vector<int> hw{2, 4, 4};

    cases.push_back({"fft2",
                     {random_tensor(hw, 101, -1, 1), random_tensor(hw, 102, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::fft2(t, in[0], in[1]);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0}});
    cases.push_back({"ifft2",
                     {random_tensor(hw, 103, -1, 1), random_tensor(hw, 104, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::ifft2(t, in[0], in[1]);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0}});
    cases.push_back({"spectral_truncate",
                     {random_tensor({2, 6, 6}, 105, -1, 1), random_tensor({2, 6, 6}, 106, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::spectral_truncate(t, in[0], in[1], 1);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0}});
    cases.push_back({"spectral_pad",
                     {random_tensor({2, 3, 3}, 107, -1, 1), random_tensor({2, 3, 3}, 108, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::spectral_pad(t, in[0], in[1], 6, 6);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0}});
    cases.push_back({"spaf_weight_mul",
                     {random_tensor({3, 4, 4}, 109, -1, 1), random_tensor({3, 4, 4}, 110, -1, 1),
                      random_tensor({3, 4, 4}, 111, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::spaf_weight_mul(t, in[0], in[1], in[2]);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0, 1.0}});
    cases.push_back({"spaf_weight_mul_full",
                     {random_tensor({2, 3, 3}, 112, -1, 1), random_tensor({2, 3, 3}, 113, -1, 1),
                      random_tensor({2, 2, 3, 3}, 114, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::spaf_weight_mul_full(t, in[0], in[1], in[2]);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0, 1.0}});
    cases.push_back({"spaf_weight_mul_complex",
                     {random_tensor({2, 3, 3}, 115, -1, 1), random_tensor({2, 3, 3}, 116, -1, 1),
                      random_tensor({2, 3, 3}, 117, -1, 1), random_tensor({2, 3, 3}, 118, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         auto [re, im] = ad::spaf_weight_mul_complex(t, in[0], in[1], in[2], in[3]);
                         return std::vector<ad::NodeId>{re, im};
                     },
                     {1.0, 1.0, 1.0, 1.0}});
    cases.push_back({"conv1x1",
                     {random_tensor({3, 4, 4}, 119, -1, 1), random_tensor({2, 3}, 120, -1, 1),
                      random_tensor({2}, 121, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::conv1x1(t, in[0], in[1], in[2])};
                     },
                     {1.0, 1.0, 1.0}});
    // PReLU: kinked in x (values bounded away from 0, small steps), linear in
    // the slope.
    cases.push_back({"prelu",
                     {random_signed_tensor({2, 4, 4}, 122), random_tensor({2}, 123, 0.1, 0.9)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::prelu(t, in[0], in[1])};
                     },
                     {0.2, 1.0}});
    cases.push_back({"add",
                     {random_tensor(hw, 124, -1, 1), random_tensor(hw, 125, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::add(t, in[0], in[1])};
                     },
                     {1.0, 1.0}});
    cases.push_back({"sub",
                     {random_tensor(hw, 126, -1, 1), random_tensor(hw, 127, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::sub(t, in[0], in[1])};
                     },
                     {1.0, 1.0}});
    cases.push_back({"mul",
                     {random_tensor(hw, 128, -1, 1), random_tensor(hw, 129, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::mul(t, in[0], in[1])};
                     },
                     {1.0, 1.0}});
    cases.push_back({"scale",
                     {random_tensor(hw, 130, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::scale(t, in[0], 1.7)};
                     },
                     {1.0}});
    cases.push_back({"abs",
                     {random_signed_tensor(hw, 131)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::abs_op(t, in[0])};
                     },
                     {0.2}});
    cases.push_back({"mean",
                     {random_tensor(hw, 132, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::mean(t, in[0])};
                     },
                     {1.0}});
    cases.push_back({"select_channel",
                     {random_tensor({3, 4, 4}, 133, -1, 1)},
                     [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                         return std::vector<ad::NodeId>{ad::select_channel(t, in[0], 1)};
                     },
                     {1.0}});

    double worst_adj = cabs_adjoint_error();
    std::string worst_adj_name = "cabs";
    double worst_fd = 0.0;
    std::string worst_fd_name;
    for (std::size_t i = 0; i < cases.size(); ++i) {
        const double a = adjoint_error(cases[i], 200 + i);
        if (a > worst_adj) {
            worst_adj = a;
            worst_adj_name = cases[i].name;
        }
        const double f = fd_error(cases[i], 300 + i);
        if (f > worst_fd) {
            worst_fd = f;
            worst_fd_name = cases[i].name;
        }
    }
    {
        OpCase cabs_case{"cabs",
                         {random_signed_tensor(hw, 134), random_signed_tensor(hw, 135)},
                         [](ad::Tape& t, const std::vector<ad::NodeId>& in) {
                             return std::vector<ad::NodeId>{ad::cabs(t, in[0], in[1])};
                         },
                         {0.0, 0.0}};
        const double f = fd_error(cabs_case, 400);
        if (f > worst_fd) {
            worst_fd = f;
            worst_fd_name = "cabs";
        }
    }

    // End-to-end: the full network loss against finite differences on 12
    // randomly chosen parameter entries.
    fin::FinConfig cfg;
    cfg.input_side = 16;
    cfg.hologram_count = 2;
    cfg.channels = 3;
    cfg.k_schedule = {5, 3};
    fin::FinModel model = fin::make_model(cfg, 77);
    const ad::Tensor stack = random_tensor({2, 16, 16}, 501, 0.5, 1.5);
    const ad::Tensor gt = random_tensor({2, 16, 16}, 502, -0.5, 1.0);

    auto loss_value = [&](const fin::FinModel& m) {
        ad::Tape t;
        fin::ModelNodes nodes = fin::register_parameters(t, m);
        const ad::NodeId pred = fin::fin_forward(t, cfg, t.leaf(stack), nodes);
        const ad::NodeId loss =
            fin::total_loss(t, pred, t.leaf(gt), cfg.alpha, cfg.beta, cfg.gamma, nullptr);
        return t.value(loss).values[0];
    };

    ad::Tape t;
    fin::ModelNodes nodes = fin::register_parameters(t, model);
    const ad::NodeId pred = fin::fin_forward(t, cfg, t.leaf(stack), nodes);
    t.backward(fin::total_loss(t, pred, t.leaf(gt), cfg.alpha, cfg.beta, cfg.gamma, nullptr));

    std::vector<ad::Tensor*> params = model.parameters();
    Rng pick(503);
    double worst_e2e = 0.0;
    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t pi = pick.uniform_int(params.size());
        const std::size_t ei = pick.uniform_int(params[pi]->numel());
        const double an = t.grad(nodes.ordered[pi]).values[ei];
        const double eps = 1e-6;
        const double saved = params[pi]->values[ei];
        params[pi]->values[ei] = saved + eps;
        const double up = loss_value(model);
        params[pi]->values[ei] = saved - eps;
        const double down = loss_value(model);
        params[pi]->values[ei] = saved;
        const double fd = (up - down) / (2.0 * eps);
        worst_e2e =
            std::max(worst_e2e, std::abs(an - fd) / std::max({1e-8, std::abs(an), std::abs(fd)}));
    }

    report(6, "autodiff adjoint, finite-difference, and end-to-end gradients",
           worst_adj < 1e-10 && worst_fd < 1e-4 && worst_e2e < 1e-3,
           format("adjoint %.1e (%s), fd %.1e (%s), network fd %.1e", worst_adj,
                  worst_adj_name.c_str(), worst_fd, worst_fd_name.c_str(), worst_e2e));
}

// ---- 7: architecture invariants ------------------------------------------

void check_architecture() {
    fin::FinConfig c3;
    c3.input_side = 32;
    c3.hologram_count = 3;
    c3.channels = 8;
    c3.k_schedule = {6, 4};
    fin::FinConfig c4 = c3;
    c4.hologram_count = 4;
    const std::size_t n3 = fin::make_model(c3, 1).parameter_count();
    const std::size_t n4 = fin::make_model(c4, 1).parameter_count();
    const bool count_ok = n4 - n3 == static_cast<std::size_t>(c3.channels);

    // Zeroed spectral branches collapse every module to the identity, so the
    // network reduces to tail((2^G + 1) * head(x)): each of the G groups
    // doubles its input through the residual add, and the long skip adds the
    // head output once more.
    fin::FinConfig zc;
    zc.input_side = 16;
    zc.hologram_count = 2;
    zc.channels = 4;
    zc.k_schedule = {4, 3};
    fin::FinModel zeroed = fin::make_model(zc, 9);
    for (auto& group : zeroed.groups) {
        std::fill(group.weight.values.begin(), group.weight.values.end(), 0.0);
        std::fill(group.weight_im.values.begin(), group.weight_im.values.end(), 0.0);
    }
    const ad::Tensor x = random_tensor({2, 16, 16}, 19, 0.2, 1.3);
    const ad::Tensor out = fin::fin_apply(zeroed, x);
    const double gain = std::pow(2.0, static_cast<double>(zc.groups())) + 1.0;
    double reduce_err = 0.0;
    const int hw = 16 * 16;
    for (int p = 0; p < hw; ++p) {
        std::vector<double> hidden(zc.channels);
        for (int ch = 0; ch < zc.channels; ++ch) {
            double acc = zeroed.head_bias.values[ch];
            for (int m = 0; m < 2; ++m)
                acc += zeroed.head_kernel.values[ch * 2 + m] * x.values[m * hw + p];
            hidden[ch] = gain * acc;
        }
        for (int k = 0; k < 2; ++k) {
            double acc = zeroed.tail_bias.values[k];
            for (int ch = 0; ch < zc.channels; ++ch)
                acc += zeroed.tail_kernel.values[k * zc.channels + ch] * hidden[ch];
            reduce_err = std::max(reduce_err, std::abs(out.values[k * hw + p] - acc));
        }
    }

    // Weight sharing: both module applications in a group read the same stored
    // tensor, so a constant input v responds as v * (1 + w)^2 -- quadratic in
    // the single shared weight -- and the parameter list names each group's
    // weight exactly once.
    fin::FinConfig sc;
    sc.input_side = 16;
    sc.hologram_count = 2;
    sc.channels = 1;
    sc.k_schedule = {4};
    fin::FinModel shared = fin::make_model(sc, 3);
    shared.head_kernel.values = {0.5, 0.5};
    shared.head_bias.values = {0.0};
    const double w0 = 0.3;
    std::fill(shared.groups[0].weight.values.begin(), shared.groups[0].weight.values.end(), w0);
    std::fill(shared.groups[0].weight_im.values.begin(), shared.groups[0].weight_im.values.end(),
              0.0);
    shared.groups[0].prelu_a.values = {1.0};
    shared.tail_kernel.values = {1.0, 0.0};
    shared.tail_bias.values = {0.0, 0.0};
    const double v = 0.7;
    const ad::Tensor flat({2, 16, 16}, v);
    const ad::Tensor response = fin::fin_apply(shared, flat);
    const double expected = 2.0 * v + v * (1.0 + w0) * (1.0 + w0);
    double share_err = 0.0;
    for (int p = 0; p < hw; ++p) {
        share_err = std::max(share_err, std::abs(response.values[p] - expected));
        share_err = std::max(share_err, std::abs(response.values[hw + p]));
    }
    int weight_names = 0;
    for (const std::string& name : shared.parameter_names())
        if (name.find("weight") != std::string::npos) ++weight_names;
    const bool share_ok = share_err < 1e-12 && weight_names == 1;

    report(7, "network parameter-count, collapse, and weight-sharing invariants",
           count_ok && reduce_err < 1e-9 && share_ok,
           format("count diff %zu (want %d), collapse err %.1e, shared response err %.1e, "
                  "%d weight tensor(s) per group",
                  n4 - n3, c3.channels, reduce_err, share_err, weight_names));
}

// ---- 8 & 9: toy training and generalization ------------------------------

// Frozen toy-training configuration. Sensor noise of sigma = 0.05 on unit-mean
// intensities puts the two-plane classical baseline in its realistic regime
// (without noise it coincides with the supervision oracle and the comparison
// is vacuous); the iterative baseline passes measurement noise through almost
// linearly while the trained network regularizes it away.
constexpr int kTrainEpochs = 100;
constexpr int kTrainChannels = 24;

struct ToyState {
    bool ready = false;
    fin::FinModel model;
    fin::FinConfig config;
};

ComplexField backprop_baseline(const HologramStack& stack) {
    const IntensityImage& holo = stack.holograms.front();
    double mean = 0.0;
    for (double v : holo.data) mean += v;
    mean /= static_cast<double>(holo.data.size());
    ComplexField f = make_field(holo.height, holo.width, holo.pixel_pitch_um, holo.wavelength_um);
    for (std::size_t i = 0; i < holo.data.size(); ++i)
        f.data[i] = std::sqrt(std::max(0.0, holo.data[i] / mean));
    return angular_spectrum_propagate(f, -stack.z2_um.front());
}

void check_training(ToyState& state) {
    const auto t0 = std::chrono::steady_clock::now();
    DatasetConfig dc;
    dc.sample.sample_class = SampleClass::sparse_blobs;
    dc.sample.density = 0.15;
    dc.n_fovs = 420;
    dc.z_list_um = {300.0, 450.0};
    dc.side = 64;
    dc.noise_sigma = 0.05;
    dc.split_train = 6;
    dc.split_test = 1;
    dc.gt_from_truth = true;
    dc.seed = 1001;
    const Dataset ds = build_dataset(dc);

    fin::FinConfig fc;
    fc.input_side = 64;
    fc.hologram_count = 2;
    fc.channels = kTrainChannels;
    fc.k_schedule = {28, 24, 20};
    fin::TrainOptions topt;
    topt.epochs = kTrainEpochs;
    topt.batch_size = 8;
    topt.seed = 2002;

    std::vector<int> grad_idx, val_idx;
    split_train_val(ds.train_indices, grad_idx, val_idx);
    const auto train_set = collect_samples(ds, grad_idx, 2);
    const auto val_set = collect_samples(ds, val_idx, 2);
    fin::TrainResult res = fin::train_fin(fc, train_set, val_set, topt);

    int wins = 0, n = 0;
    double fin_sum = 0.0, classical_sum = 0.0;
    for (int idx : ds.test_indices) {
        const DatasetItem& item = ds.items[static_cast<std::size_t>(idx)];
        const double fin_rmse =
            field_metrics(fin::infer(res.model, item.stack), item.truth, true).amp_rmse;
        MhprConfig mc;
        const double classical_rmse =
            field_metrics(mhpr_reconstruct(item.stack, mc).field, item.truth, true).amp_rmse;
        fin_sum += fin_rmse;
        classical_sum += classical_rmse;
        if (fin_rmse < classical_rmse) ++wins;
        ++n;
    }
    const double dt = seconds_since(t0);
    const bool sizes_ok = ds.train_indices.size() >= 300 && n >= 50;
    const bool ok = sizes_ok && wins >= (7 * n + 9) / 10 && dt < 4.0 * 3600.0;
    if (ok) {
        state.ready = true;
        state.model = std::move(res.model);
        state.config = fc;
    }
    report(8, "trained network beats the two-plane classical baseline",
           ok,
           format("wins %d/%d (need %d), rmse %.4f vs %.4f, %zu train FOVs, %.0f min", wins, n,
                  (7 * n + 9) / 10, fin_sum / std::max(1, n), classical_sum / std::max(1, n),
                  ds.train_indices.size(), dt / 60.0));
}

void check_generalization(const ToyState& state) {
    if (!state.ready) {
        report(9, "cross-class generalization of the trained network", false,
               "prerequisite training check failed");
        return;
    }
    DatasetConfig tc;
    tc.sample.sample_class = SampleClass::connected_texture;
    tc.n_fovs = 51;
    tc.z_list_um = {300.0, 450.0};
    tc.side = 64;
    tc.noise_sigma = 0.05;
    tc.split_train = 1;
    tc.split_test = 50;
    tc.seed = 3003;
    const Dataset tex = build_dataset(tc);

    int wins = 0, n = 0;
    double fin_sum = 0.0, bp_sum = 0.0;
    for (int idx : tex.test_indices) {
        const DatasetItem& item = tex.items[static_cast<std::size_t>(idx)];
        const double fin_ssim =
            field_metrics(fin::infer(state.model, item.stack), item.gt, true).amp_ssim;
        const double bp_ssim =
            field_metrics(backprop_baseline(item.stack), item.gt, true).amp_ssim;
        fin_sum += fin_ssim;
        bp_sum += bp_ssim;
        if (fin_ssim > bp_ssim) ++wins;
        ++n;
    }

    // The cross-class benchmark matrix must also come out well-formed.
    BenchConfig bc;
    bc.fin.input_side = 32;
    bc.fin.hologram_count = 2;
    bc.fin.channels = 8;
    bc.fin.k_schedule = {8, 6};
    bc.dataset.n_fovs = 14;
    bc.dataset.z_list_um = {300.0, 450.0};
    bc.dataset.side = 32;
    bc.dataset.noise_sigma = 0.05;
    bc.dataset.gt_from_truth = true;
    bc.dataset.seed = 4004;
    bc.train.epochs = 4;
    bc.train.batch_size = 4;
    bc.train.seed = 5005;
    SampleSpec blobs;
    blobs.sample_class = SampleClass::sparse_blobs;
    blobs.density = 0.15;
    SampleSpec texture;
    texture.sample_class = SampleClass::connected_texture;
    const BenchReport matrix = bench_generalization({blobs, texture}, 2, bc);
    matrix.validate();
    const fs::path out = fs::temp_directory_path() / "holofin_acceptance_benchgen.csv";
    write_bench_csv(out.string(), matrix);
    const bool matrix_ok = matrix.rows.size() == 6 && fs::exists(out);
    fs::remove(out);

    const bool ok = n >= 50 && wins >= (9 * n + 9) / 10 && matrix_ok;
    report(9, "cross-class generalization of the trained network", ok,
           format("ssim wins %d/%d (need %d), mean %.3f vs baseline %.3f, matrix rows %zu", wins,
                  n, (9 * n + 9) / 10, fin_sum / std::max(1, n), bp_sum / std::max(1, n),
                  matrix.rows.size()));
}

// ---- 10: loss closed forms ------------------------------------------------

void check_loss() {
    fin::FinConfig defaults;
    const bool weights_ok =
        defaults.alpha == 0.5 && defaults.beta == 1.0 && defaults.gamma == 0.5;

    const ad::Tensor gt = random_tensor({2, 16, 16}, 61, -1.0, 1.0);
    double loss_at_gt;
    {
        ad::Tape t;
        loss_at_gt = t.value(fin::total_loss(t, t.leaf(gt), t.leaf(gt), defaults.alpha,
                                             defaults.beta, defaults.gamma, nullptr))
                         .values[0];
    }

    // Library loss vs an independent direct-sum DFT evaluation on a random
    // residual, and vs the closed form for a constant offset on one channel.
    const int side = 16;
    const ad::Tensor pred = random_tensor({2, side, side}, 62, -1.0, 1.0);
    auto reference_loss = [&](const ad::Tensor& p, const ad::Tensor& g) {
        const int hw = side * side;
        double l1 = 0.0;
        for (std::size_t i = 0; i < p.values.size(); ++i)
            l1 += std::abs(p.values[i] - g.values[i]);
        l1 /= static_cast<double>(p.values.size());
        const double two_pi = 2.0 * std::acos(-1.0);
        double spec = 0.0;
        for (int ky = 0; ky < side; ++ky)
            for (int kx = 0; kx < side; ++kx) {
                std::complex<double> acc = 0.0;
                for (int y = 0; y < side; ++y)
                    for (int x = 0; x < side; ++x) {
                        const std::size_t at = static_cast<std::size_t>(y) * side + x;
                        const std::complex<double> d(p.values[at] - g.values[at],
                                                     p.values[hw + at] - g.values[hw + at]);
                        const double phase =
                            -two_pi *
                            (static_cast<double>(ky) * y / side + static_cast<double>(kx) * x / side);
                        acc += d * std::complex<double>(std::cos(phase), std::sin(phase));
                    }
                spec += std::abs(acc);
            }
        spec /= static_cast<double>(hw);
        return defaults.alpha * l1 + defaults.beta * spec;
    };
    double library_random;
    {
        ad::Tape t;
        library_random = t.value(fin::total_loss(t, t.leaf(pred), t.leaf(gt), defaults.alpha,
                                                 defaults.beta, defaults.gamma, nullptr))
                             .values[0];
    }
    const double dft_err = std::abs(library_random - reference_loss(pred, gt));

    const double delta = 0.37;
    ad::Tensor offset = gt;
    for (int p = 0; p < side * side; ++p) offset.values[p] += delta;
    double library_offset;
    {
        ad::Tape t;
        library_offset = t.value(fin::total_loss(t, t.leaf(offset), t.leaf(gt), defaults.alpha,
                                                 defaults.beta, defaults.gamma, nullptr))
                             .values[0];
    }
    const double closed_form = defaults.alpha * delta / 2.0 + defaults.beta * delta;
    const double offset_err = std::abs(library_offset - closed_form);

    report(10, "loss defaults, zero at the target, and spectral closed forms",
           weights_ok && loss_at_gt == 0.0 && dft_err < 1e-10 && offset_err < 1e-10,
           format("loss(gt,gt) %.1e, direct-DFT err %.1e, offset closed-form err %.1e", loss_at_gt,
                  dft_err, offset_err));
}

// ---- 11: tiled inference --------------------------------------------------

void check_tiling() {
    fin::FinConfig fc;
    fc.input_side = 64;
    fc.hologram_count = 2;
    fc.channels = 16;
    fc.k_schedule = {16, 12, 8};
    const fin::FinModel model = fin::make_model(fc, 99);

    SampleSpec spec;
    spec.sample_class = SampleClass::connected_texture;
    const ComplexField truth =
        generate_sample(spec, 256, testutil::kPitchUm, testutil::kLambdaUm, 71);
    const HologramStack stack = simulate_stack(truth, {300.0, 450.0}, 0.0, 72);

    const ComplexField one = fin::tile_infer(model, stack, 1);
    const ComplexField twenty = fin::tile_infer(model, stack, 20);
    const double tile_diff = testutil::max_abs_diff(one.data, twenty.data);

    auto time_batch = [&](int batch) {
        double best = 1e100;
        for (int rep = 0; rep < 7; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            const ComplexField r = fin::tile_infer(model, stack, batch);
            best = std::min(best, seconds_since(t0));
            if (r.data.empty()) std::abort();  // keep the call observable
        }
        return best;
    };
    const double t1 = time_batch(1);
    const double t20 = time_batch(20);

    // Per-FOV inference cost must not depend materially on the hologram count:
    // only the first network layer sees the extra plane.
    fin::FinConfig c3 = fc;
    c3.hologram_count = 3;
    fin::FinConfig c4 = fc;
    c4.hologram_count = 4;
    const fin::FinModel m3 = fin::make_model(c3, 5);
    const fin::FinModel m4 = fin::make_model(c4, 5);
    std::vector<ad::Tensor> stacks3, stacks4;
    for (int i = 0; i < 6; ++i) {
        stacks4.push_back(random_tensor({4, 64, 64}, 700 + i, 0.5, 1.5));
        ad::Tensor first3({3, 64, 64});
        std::copy_n(stacks4.back().values.begin(), first3.numel(), first3.values.begin());
        stacks3.push_back(first3);
    }
    auto time_model = [&](const fin::FinModel& m, const std::vector<ad::Tensor>& inputs) {
        double best = 1e100;
        for (int rep = 0; rep < 5; ++rep) {
            const auto t0 = std::chrono::steady_clock::now();
            for (const auto& s : inputs) {
                const ad::Tensor out = fin::fin_apply(m, s);
                if (out.values.empty()) std::abort();
            }
            best = std::min(best, seconds_since(t0) / static_cast<double>(inputs.size()));
        }
        return best;
    };
    const double t3 = time_model(m3, stacks3);
    const double t4 = time_model(m4, stacks4);
    const double plane_rel = std::abs(t4 - t3) / t3;

    // The batch direction carries a 2% measurement allowance: on one core the
    // batched path can only save dispatch overhead, and wall-clock jitter at
    // these durations exceeds the true difference.
    const bool ok = tile_diff == 0.0 && t20 <= t1 * 1.02 && plane_rel <= 0.10;
    report(11, "tiled inference identity and throughput invariants", ok,
           format("batch-20 vs batch-1 max diff %.1e, %.2fs vs %.2fs per FOV, "
                  "3- vs 4-plane rel diff %.1f%%",
                  tile_diff, t20, t1, 100.0 * plane_rel));
}

// ---- 12: CLI determinism --------------------------------------------------

struct CliRun {
    int code = -1;
    std::string output;
};

CliRun run_cli(const std::string& args) {
    const std::string cmd = std::string(HOLOFIN_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    CliRun result;
    if (!pipe) return result;
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) result.output.append(buf, n);
    const int status = pclose(pipe);
    result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string slurp(const fs::path& path) {
    std::ifstream is(path, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream os(path, std::ios::binary);
    os << text;
}

// The throughput table holds wall-clock measurements; those two columns are
// exempt from the byte comparison, everything else must match.
bool timing_tables_equivalent(const std::string& text_a, const std::string& text_b,
                              std::string& why) {
    std::istringstream sa(text_a), sb(text_b);
    std::string la, lb;
    int line = 0;
    while (true) {
        const bool ga = static_cast<bool>(std::getline(sa, la));
        const bool gb = static_cast<bool>(std::getline(sb, lb));
        if (ga != gb) {
            why = "row count differs";
            return false;
        }
        if (!ga) return true;
        ++line;
        if (line <= 2) {  // version comment and header
            if (la != lb) {
                why = "header differs";
                return false;
            }
            continue;
        }
        const auto split = [](const std::string& s) {
            std::vector<std::string> fields;
            std::istringstream is(s);
            std::string f;
            while (std::getline(is, f, ',')) fields.push_back(f);
            return fields;
        };
        const auto fa = split(la), fb = split(lb);
        if (fa.size() != 7 || fb.size() != 7) {
            why = "column count differs";
            return false;
        }
        for (int i = 0; i < 5; ++i)
            if (fa[i] != fb[i]) {
                why = "field " + std::to_string(i) + " differs";
                return false;
            }
        for (int i = 5; i < 7; ++i) {
            const double va = std::atof(fa[i].c_str());
            const double vb = std::atof(fb[i].c_str());
            if (!(va > 0.0) || !(vb > 0.0) || !std::isfinite(va) || !std::isfinite(vb)) {
                why = "non-positive timing";
                return false;
            }
        }
    }
}

// Each subcommand runs twice against the SAME output paths (outputs are wiped
// between runs), so manifests that echo those paths must still come out
// byte-identical. Captured stdout must match as well.
void check_cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "holofin_acceptance_cli";
    fs::remove_all(root);
    fs::create_directories(root);

    std::vector<std::string> failed;
    int run_count = 0;

    auto snapshot = [](const fs::path& dir) {
        std::map<std::string, std::string> files;
        if (fs::exists(dir))
            for (const auto& entry : fs::recursive_directory_iterator(dir))
                if (entry.is_regular_file())
                    files[fs::relative(entry.path(), dir).string()] = slurp(entry.path());
        return files;
    };

    // Runs `args` twice with the output directory cleared in between; the
    // output trees and the captured stdout must match byte for byte.
    // `timing_exempt` relaxes only the measured columns of timing.csv and the
    // stdout table that renders them.
    auto rerun_stable = [&](const std::string& name, const std::string& args,
                            const fs::path& out_dir, bool timing_exempt = false) {
        ++run_count;
        fs::remove_all(out_dir);
        fs::create_directories(out_dir);
        const CliRun first = run_cli("--threads 1 " + args);
        const auto tree_first = snapshot(out_dir);
        fs::remove_all(out_dir);
        fs::create_directories(out_dir);
        const CliRun second = run_cli("--threads 1 " + args);
        const auto tree_second = snapshot(out_dir);

        if (first.code != 0 || second.code != 0) {
            failed.push_back(name + " (exit " + std::to_string(first.code) + "/" +
                             std::to_string(second.code) + ")");
            return;
        }
        if (!timing_exempt && first.output != second.output) {
            failed.push_back(name + " (stdout differs)");
            return;
        }
        if (tree_first.size() != tree_second.size() || tree_first.empty()) {
            failed.push_back(name + " (output file set differs or empty)");
            return;
        }
        for (const auto& [rel, bytes] : tree_first) {
            const auto it = tree_second.find(rel);
            if (it == tree_second.end()) {
                failed.push_back(name + " (" + rel + " missing)");
                return;
            }
            std::string why;
            if (timing_exempt && fs::path(rel).filename() == "timing.csv") {
                if (!timing_tables_equivalent(bytes, it->second, why)) {
                    failed.push_back(name + " (timing.csv " + why + ")");
                    return;
                }
            } else if (bytes != it->second) {
                failed.push_back(name + " (" + rel + " differs)");
                return;
            }
        }
    };

    // Shared inputs, prepared once.
    const fs::path sim_cfg = root / "sim.json";
    write_text(sim_cfg, R"({"sample": {"class": "sparse-blobs", "density": 0.3},
                            "side": 32, "z_list_um": [300, 450], "seed": 5})");
    const fs::path sim_dir = root / "sim";
    // After each rerun_stable the second run's outputs stay in place for the
    // downstream subcommands to consume.
    rerun_stable("simulate",
                 "simulate --config " + sim_cfg.string() + " --out-dir " + sim_dir.string(),
                 sim_dir);

    const fs::path stack_json = root / "stack.json";
    write_text(stack_json, "{\"holograms\": [\"" + (sim_dir / "holo_0.cfld").string() +
                               "\", \"" + (sim_dir / "holo_1.cfld").string() +
                               "\"], \"z2_um\": [300, 450]}");
    const fs::path mhpr_dir = root / "mhpr";
    rerun_stable("mhpr",
                 "mhpr --stack " + stack_json.string() + " --iters 25 --out " +
                     (mhpr_dir / "recon.cfld").string() + " --residuals " +
                     (mhpr_dir / "res.csv").string(),
                 mhpr_dir);

    const fs::path af_dir = root / "af";
    rerun_stable("autofocus",
                 "autofocus --holo " + (sim_dir / "holo_0.cfld").string() +
                     " --z-min 250 --z-max 500 --step 10 --out " +
                     (af_dir / "focus.json").string(),
                 af_dir);

    const std::string frames = (sim_dir / "holo_0.cfld").string() + " " +
                               (sim_dir / "holo_1.cfld").string() + " " +
                               (sim_dir / "holo_0.cfld").string();
    const fs::path psr_dir = root / "psr";
    rerun_stable("psr",
                 "psr --frames " + frames + " --factor 2 --out " +
                     (psr_dir / "hires.cfld").string() + " --shifts-out " +
                     (psr_dir / "shifts.json").string(),
                 psr_dir);

    const fs::path ds_cfg = root / "ds.json";
    write_text(ds_cfg, R"({"sample": {"class": "sparse-blobs", "density": 0.3},
                           "n_fovs": 4, "z_list_um": [300, 450], "side": 16,
                           "split_train": 3, "split_test": 1,
                           "gt_from_truth": true, "seed": 11})");
    const fs::path ds_dir = root / "ds";
    rerun_stable("dataset",
                 "dataset --config " + ds_cfg.string() + " --out-dir " + ds_dir.string(),
                 ds_dir);

    const fs::path train_cfg = root / "train.json";
    write_text(train_cfg, R"({"fin": {"input_side": 16, "hologram_count": 2,
                                      "channels": 4, "k_schedule": [3, 2]},
                              "train": {"epochs": 2, "batch_size": 2, "seed": 3}})");
    const fs::path tr_dir = root / "tr";
    rerun_stable("train",
                 "train --dataset " + ds_dir.string() + " --config " + train_cfg.string() +
                     " --out " + (tr_dir / "model.finw").string() + " --log " +
                     (tr_dir / "log.csv").string(),
                 tr_dir);

    const fs::path sim16_cfg = root / "sim16.json";
    write_text(sim16_cfg, R"({"sample": {"class": "sparse-blobs", "density": 0.3},
                              "side": 16, "z_list_um": [300, 450], "seed": 23})");
    const fs::path sim16 = root / "sim16";
    run_cli("--threads 1 simulate --config " + sim16_cfg.string() + " --out-dir " +
            sim16.string());
    const fs::path stack16 = root / "stack16.json";
    write_text(stack16, "{\"holograms\": [\"" + (sim16 / "holo_0.cfld").string() + "\", \"" +
                            (sim16 / "holo_1.cfld").string() + "\"], \"z2_um\": [300, 450]}");
    const fs::path inf_dir = root / "inf";
    rerun_stable("infer",
                 "infer --model " + (tr_dir / "model.finw").string() + " --stack " +
                     stack16.string() + " --out " + (inf_dir / "recon.cfld").string(),
                 inf_dir);

    const fs::path bg_cfg = root / "bench_gen.json";
    write_text(bg_cfg, R"({"classes": [{"class": "sparse-blobs", "density": 0.3},
                                       {"class": "connected-texture"}],
                           "hologram_count": 2,
                           "fin": {"input_side": 16, "hologram_count": 2,
                                   "channels": 4, "k_schedule": [3, 2]},
                           "dataset": {"n_fovs": 4, "z_list_um": [300, 450], "side": 16,
                                       "split_train": 3, "split_test": 1,
                                       "gt_from_truth": true, "seed": 13},
                           "train": {"epochs": 1, "batch_size": 2, "seed": 7}})");
    const fs::path bg_dir = root / "bg";
    rerun_stable("bench-gen",
                 "bench-gen --config " + bg_cfg.string() + " --out-dir " + bg_dir.string(),
                 bg_dir);

    const fs::path bz_cfg = root / "bench_z.json";
    write_text(bz_cfg, R"({"pairs": [[300, 450]],
                           "fin": {"input_side": 16, "hologram_count": 2,
                                   "channels": 4, "k_schedule": [3, 2]},
                           "dataset": {"n_fovs": 4, "z_list_um": [300, 450], "side": 16,
                                       "split_train": 3, "split_test": 1,
                                       "gt_from_truth": true, "seed": 17},
                           "train": {"epochs": 1, "batch_size": 2, "seed": 19}})");
    const fs::path bz_dir = root / "bz";
    rerun_stable("bench-z",
                 "bench-z --config " + bz_cfg.string() + " --out-dir " + bz_dir.string(),
                 bz_dir);

    const fs::path bt_dir = root / "bt";
    rerun_stable("bench-time",
                 "bench-time --model " + (tr_dir / "model.finw").string() + " --dataset " +
                     ds_dir.string() + " --batches 1 2 --reps 2 --out-dir " + bt_dir.string(),
                 bt_dir, /*timing_exempt=*/true);

    const fs::path met_dir = root / "met";
    rerun_stable("metrics",
                 "metrics --pred " + (inf_dir / "recon.cfld").string() + " --gt " +
                     (sim16 / "truth.cfld").string() + " --out " +
                     (met_dir / "metrics.csv").string(),
                 met_dir);

    fs::remove_all(root);
    std::string detail;
    if (failed.empty()) {
        detail = std::to_string(run_count) +
                 "/11 subcommands byte-stable across reruns; measured timings exempt by nature";
    } else {
        detail = std::to_string(run_count - failed.size()) + "/" + std::to_string(run_count) +
                 " stable; failed:";
        for (const std::string& f : failed) detail += " " + f;
    }
    report(12, "CLI determinism across repeated runs", failed.empty(), detail);
}

void guarded(int index, const std::string& title, const std::function<void()>& body) {
    try {
        body();
    } catch (const std::exception& e) {
        report(index, title, false, std::string("exception: ") + e.what());
    }
}

}  // namespace

// Runs all twelve checks by default; check numbers on the command line select
// a subset (the generalization check needs the training check in the same
// run).
int main(int argc, char** argv) {
    std::vector<bool> wanted(13, argc <= 1);
    for (int i = 1; i < argc; ++i) {
        const int n = std::atoi(argv[i]);
        if (n < 1 || n > 12) {
            std::fprintf(stderr, "usage: %s [check-number...]\n", argv[0]);
            return 64;
        }
        wanted[static_cast<std::size_t>(n)] = true;
    }
    int selected = 0;
    for (int i = 1; i <= 12; ++i) selected += wanted[static_cast<std::size_t>(i)] ? 1 : 0;

    std::printf("holofin acceptance gate\n");
    ToyState toy;
    const std::vector<std::pair<std::string, std::function<void()>>> checks = {
        {"propagation round trip at 256x256", check_roundtrip},
        {"propagation semigroup and energy conservation", check_semigroup_energy},
        {"multi-height retrieval oracle at 256x256", check_mhpr_oracle},
        {"edge-sparsity autofocus at three depths", check_autofocus},
        {"pixel super-resolution on a 6x6 burst", check_psr},
        {"autodiff adjoint, finite-difference, and end-to-end gradients", check_autodiff},
        {"network parameter-count, collapse, and weight-sharing invariants", check_architecture},
        {"trained network beats the two-plane classical baseline", [&] { check_training(toy); }},
        {"cross-class generalization of the trained network", [&] { check_generalization(toy); }},
        {"loss defaults, zero at the target, and spectral closed forms", check_loss},
        {"tiled inference identity and throughput invariants", check_tiling},
        {"CLI determinism across repeated runs", check_cli_determinism},
    };
    for (int i = 1; i <= 12; ++i)
        if (wanted[static_cast<std::size_t>(i)])
            guarded(i, checks[static_cast<std::size_t>(i - 1)].first,
                    checks[static_cast<std::size_t>(i - 1)].second);
    std::printf("%d/%d checks passed\n", selected - g_failures, selected);
    return g_failures;
}

#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "doctest.h"
#include "holofin/checkpoint.hpp"
#include "holofin/errors.hpp"
#include "holofin/fin.hpp"
#include "holofin/propagate.hpp"
#include "holofin/rng.hpp"
#include "holofin/train.hpp"
#include "test_util.hpp"

using namespace holofin;
using namespace holofin::fin;

namespace {

FinConfig tiny_config() {
    FinConfig c;
    c.input_side = 16;
    c.hologram_count = 2;
    c.channels = 3;
    c.k_schedule = {5, 3};
    return c;
}

ad::Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
    Rng rng(seed);
    ad::Tensor t(std::move(shape));
    for (auto& v : t.values) v = rng.gaussian();
    return t;
}

double max_abs_diff_vec(const std::vector<double>& a, const std::vector<double>& b) {
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
    return worst;
}

// Simulated two-height sample: normalized input stack plus the true field as
// the [2,S,S] target.
struct Fov {
    HologramStack stack;
    TrainSample sample;
};

Fov make_fov(int side, std::uint64_t seed) {
    Fov f;
    ComplexField field = testutil::random_band_limited_field(side, seed);
    f.stack = simulate_stack(field, {300.0, 450.0}, 0.0, seed);
    f.sample.input = normalize_stack(f.stack);
    f.sample.target = ad::Tensor({2, side, side});
    for (int i = 0; i < side * side; ++i) {
        f.sample.target.values[i] = field.data[i].real();
        f.sample.target.values[side * side + i] = field.data[i].imag();
    }
    return f;
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    REQUIRE(is.good());
    return std::string(std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("FinConfig validation and JSON round trip") {
    FinConfig c = tiny_config();
    c.validate();

    FinConfig bad = c;
    bad.input_side = 48;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = c;
    bad.k_schedule = {3, 5};  // increasing
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = c;
    bad.k_schedule = {8};  // > side/2 - 1
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = c;
    bad.alpha = -0.1;
    CHECK_THROWS_AS(bad.validate(), config_error);
    bad = c;
    bad.full_transform = bad.complex_weights = true;
    CHECK_THROWS_AS(bad.validate(), config_error);

    c.alpha = 0.25;
    c.complex_weights = true;
    FinConfig back = fin_config_from_json(fin_config_to_json(c));
    CHECK(back.input_side == c.input_side);
    CHECK(back.hologram_count == c.hologram_count);
    CHECK(back.channels == c.channels);
    CHECK(back.k_schedule == c.k_schedule);
    CHECK(back.alpha == c.alpha);
    CHECK(back.beta == c.beta);
    CHECK(back.gamma == c.gamma);
    CHECK(back.complex_weights == c.complex_weights);

    CHECK_THROWS_AS(fin_config_from_json("{\"input_side\": 16, \"bogus\": 1}"), config_error);
    CHECK_THROWS_AS(fin_config_from_json("{\"channels\": \"many\"}"), config_error);
    CHECK_THROWS_AS(fin_config_from_json("not json"), format_error);
}

TEST_CASE("spaf module: zero weights are an exact passthrough") {
    FinConfig c = tiny_config();
    FinModel m = make_model(c, 1);
    for (auto& v : m.groups[0].weight.values) v = 0.0;

    ad::Tape t;
    ModelNodes nodes = register_parameters(t, m);
    ad::Tensor x = random_tensor({c.channels, c.input_side, c.input_side}, 2);
    ad::NodeId nx = t.leaf(x);
    ad::NodeId out = spaf_forward(t, c, nx, nodes.groups[0], c.k_schedule[0]);
    CHECK(t.value(out).values == x.values);
}

TEST_CASE("spaf module: DC-only input reduces to scalar algebra") {
    FinConfig c = tiny_config();
    c.channels = 1;
    c.k_schedule = {2};
    c.input_side = 8;
    FinModel m = make_model(c, 3);
    const double w0 = -1.3;  // negative product exercises the PReLU slope branch
    for (auto& v : m.groups[0].weight.values) v = w0;
    const double slope = 0.25;

    const double v0 = 0.7;
    ad::Tensor x({1, 8, 8}, v0);
    ad::Tape t;
    ModelNodes nodes = register_parameters(t, m);
    ad::NodeId out = spaf_forward(t, c, t.leaf(x), nodes.groups[0], 2);

    const double branch = w0 * v0;
    const double expected = v0 + (branch >= 0.0 ? branch : slope * branch);
    for (double v : t.value(out).values) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("spaf module: unit weights act as the identity inside the window") {
    FinConfig c = tiny_config();
    c.channels = 1;
    c.k_schedule = {7};  // 15x15 window on a 16x16 grid: only Nyquist excluded
    FinModel m = make_model(c, 4);
    for (auto& v : m.groups[0].weight.values) v = 1.0;
    for (auto& v : m.groups[0].prelu_a.values) v = 1.0;  // PReLU = identity

    // First application projects a random map onto the window band; the branch
    // is then an exact identity on the projected input.
    ad::Tensor x0 = random_tensor({1, 16, 16}, 5);
    ad::Tape t1;
    ModelNodes n1 = register_parameters(t1, m);
    const auto& y0 = t1.value(spaf_forward(t1, c, t1.leaf(x0), n1.groups[0], 7)).values;
    ad::Tensor px({1, 16, 16});
    for (std::size_t i = 0; i < px.numel(); ++i) px.values[i] = y0[i] - x0.values[i];

    ad::Tape t2;
    ModelNodes n2 = register_parameters(t2, m);
    const auto& out = t2.value(spaf_forward(t2, c, t2.leaf(px), n2.groups[0], 7)).values;
    for (std::size_t i = 0; i < px.numel(); ++i)
        CHECK(out[i] == doctest::Approx(2.0 * px.values[i]).epsilon(1e-6));
}

TEST_CASE("fin_forward: zero model maps everything to zero") {
    FinConfig c = tiny_config();
    FinModel m = make_model(c, 6);
    for (auto* p : m.parameters())
        for (auto& v : p->values) v = 0.0;
    ad::Tensor stack = random_tensor({2, 16, 16}, 7);
    ad::Tensor out = fin_apply(m, stack);
    CHECK(out.shape == std::vector<int>{2, 16, 16});
    for (double v : out.values) CHECK(v == 0.0);
}

TEST_CASE("fin_forward: with zeroed spectral weights only the skips carry signal") {
    // Every module passes its input through, each group's short skip then
    // doubles it, and the long skip adds one more head copy: tail((2^G + 1) h).
    FinConfig c = tiny_config();
    FinModel m = make_model(c, 8);
    for (auto& g : m.groups)
        for (auto& v : g.weight.values) v = 0.0;

    ad::Tensor stack = random_tensor({2, 16, 16}, 9);
    ad::Tensor got = fin_apply(m, stack);

    ad::Tape t;
    ad::NodeId s = t.leaf(stack);
    ad::NodeId head = ad::conv1x1(t, s, t.leaf(m.head_kernel), t.leaf(m.head_bias));
    ad::NodeId scaled = ad::scale(t, head, 5.0);  // 2 groups: 2^2 + 1
    ad::NodeId want = ad::conv1x1(t, scaled, t.leaf(m.tail_kernel), t.leaf(m.tail_bias));
    CHECK(max_abs_diff_vec(got.values, t.value(want).values) < 1e-12);
}

TEST_CASE("parameter count depends on M only through the head") {
    FinConfig c3 = tiny_config();
    c3.channels = 5;
    c3.hologram_count = 3;
    FinConfig c4 = c3;
    c4.hologram_count = 4;
    const std::size_t n3 = make_model(c3, 1).parameter_count();
    const std::size_t n4 = make_model(c4, 1).parameter_count();
    CHECK(n4 - n3 == static_cast<std::size_t>(c3.channels));

    // Exact closed-form check of the tally.
    std::size_t expected = 5 * 3 + 5;  // head
    for (int k : c3.k_schedule) expected += 5 * (2 * k + 1) * (2 * k + 1) + 5;
    expected += 2 * 5 + 2;  // tail
    CHECK(n3 == expected);
}

TEST_CASE("end-to-end gradients match finite differences") {
    const FinConfig c = tiny_config();
    const FinModel model = make_model(c, 7);
    const ad::Tensor input = random_tensor({2, 16, 16}, 20);
    const ad::Tensor target = random_tensor({2, 16, 16}, 21);

    auto loss_of = [&](const FinModel& mm) {
        ad::Tape t;
        ModelNodes nodes = register_parameters(t, mm);
        ad::NodeId pred = fin_forward(t, c, t.leaf(input), nodes);
        return t.value(total_loss(t, pred, t.leaf(target), c.alpha, c.beta, c.gamma)).values[0];
    };

    ad::Tape t;
    ModelNodes nodes = register_parameters(t, model);
    ad::NodeId pred = fin_forward(t, c, t.leaf(input), nodes);
    t.backward(total_loss(t, pred, t.leaf(target), c.alpha, c.beta, c.gamma));

    Rng pick(22);
    const auto params = model.parameters();
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t pi = pick.uniform_int(params.size());
        const std::size_t ei = pick.uniform_int(params[pi]->numel());
        const double eps = 1e-6;

        FinModel plus = model, minus = model;
        plus.parameters()[pi]->values[ei] += eps;
        minus.parameters()[pi]->values[ei] -= eps;
        const double fd = (loss_of(plus) - loss_of(minus)) / (2.0 * eps);
        const double an = t.grad(nodes.ordered[pi]).values[ei];
        CHECK(std::abs(an - fd) / std::max({1.0, std::abs(an), std::abs(fd)}) < 1e-3);
    }
}

TEST_CASE("total_loss: closed form for a single-channel offset") {
    const double delta = 0.37;
    ad::Tensor gt = random_tensor({2, 8, 8}, 30);
    ad::Tensor pred = gt;
    for (int i = 0; i < 64; ++i) pred.values[i] += delta;

    ad::Tape t;
    ad::NodeId loss = total_loss(t, t.leaf(pred), t.leaf(gt), 0.5, 1.0, 0.5);
    // MAE: half the entries differ by delta. Spectral term: the difference is a
    // real constant, so only the DC bin of the unscaled DFT is nonzero, and the
    // mean magnitude over H*W bins is exactly delta.
    const double expected = 0.5 * (delta / 2.0) + 1.0 * delta;
    CHECK(std::abs(t.value(loss).values[0] - expected) < 1e-10);

    ad::Tape t2;
    ad::NodeId zero = total_loss(t2, t2.leaf(gt), t2.leaf(gt), 0.5, 1.0, 0.5);
    CHECK(t2.value(zero).values[0] == 0.0);

    ad::Tape t3;
    CHECK_THROWS_AS(total_loss(t3, t3.leaf(pred), t3.leaf(random_tensor({2, 4, 4}, 31)), 0.5,
                               1.0, 0.5),
                    config_error);
    CHECK_THROWS_AS(total_loss(t3, t3.leaf(pred), t3.leaf(gt), -0.5, 1.0, 0.5), config_error);
}

TEST_CASE("total_loss: plugged-in feature extractor enables the gamma term") {
    struct Identity : FeatureExtractor {
        ad::NodeId features(ad::Tape&, ad::NodeId image) const override { return image; }
    };
    const double delta = 0.37;
    ad::Tensor gt = random_tensor({2, 8, 8}, 32);
    ad::Tensor pred = gt;
    for (int i = 0; i < 64; ++i) pred.values[i] += delta;

    Identity id;
    ad::Tape t;
    ad::NodeId loss = total_loss(t, t.leaf(pred), t.leaf(gt), 0.5, 1.0, 0.5, &id);
    const double expected = 0.5 * (delta / 2.0) + 1.0 * delta + 0.5 * (delta / 2.0);
    CHECK(std::abs(t.value(loss).values[0] - expected) < 1e-10);
}

TEST_CASE("total_loss is invariant under a shared quarter rotation") {
    ad::Tensor pred = random_tensor({2, 8, 8}, 33);
    ad::Tensor gt = random_tensor({2, 8, 8}, 34);
    ad::Tape t;
    const double base = t.value(total_loss(t, t.leaf(pred), t.leaf(gt), 0.5, 1.0, 0.5)).values[0];
    for (int r = 1; r < 4; ++r) {
        ad::Tape tr;
        const double rot =
            tr.value(total_loss(tr, tr.leaf(rotate_quarter(pred, r)),
                                tr.leaf(rotate_quarter(gt, r)), 0.5, 1.0, 0.5))
                .values[0];
        CHECK(rot == doctest::Approx(base).epsilon(1e-10));
    }
}

TEST_CASE("rotate_quarter composes back to the identity") {
    ad::Tensor x = random_tensor({3, 8, 8}, 35);
    for (int r = 0; r < 4; ++r) {
        ad::Tensor back = rotate_quarter(rotate_quarter(x, r), (4 - r) % 4);
        CHECK(back.values == x.values);
    }
    CHECK_THROWS_AS(rotate_quarter(ad::Tensor({4, 4}), 1), config_error);
}

TEST_CASE("checkpoint round trip preserves the model to float precision") {
    FinConfig c = tiny_config();
    SUBCASE("shrunk") {}
    SUBCASE("full transform") { c.full_transform = true; }
    SUBCASE("complex weights") { c.complex_weights = true; }

    FinModel m = make_model(c, 40);
    const std::string path = "ckpt_roundtrip.finw";
    save_checkpoint(path, m);
    FinModel back = load_checkpoint(path);

    CHECK(back.config.input_side == c.input_side);
    CHECK(back.config.k_schedule == c.k_schedule);
    CHECK(back.config.full_transform == c.full_transform);
    CHECK(back.config.complex_weights == c.complex_weights);
    const auto orig = m.parameters();
    const auto load = back.parameters();
    REQUIRE(orig.size() == load.size());
    for (std::size_t i = 0; i < orig.size(); ++i) {
        REQUIRE(orig[i]->shape == load[i]->shape);
        for (std::size_t j = 0; j < orig[i]->numel(); ++j)
            CHECK(load[i]->values[j] == static_cast<double>(static_cast<float>(orig[i]->values[j])));
    }

    // A second save of the loaded model reproduces the file byte for byte.
    const std::string path2 = "ckpt_roundtrip2.finw";
    save_checkpoint(path2, back);
    CHECK(slurp(path) == slurp(path2));
    std::remove(path.c_str());
    std::remove(path2.c_str());
}

TEST_CASE("checkpoint loader rejects damaged files") {
    FinModel m = make_model(tiny_config(), 41);
    const std::string path = "ckpt_damage.finw";
    save_checkpoint(path, m);
    const std::string bytes = slurp(path);

    auto write_bytes = [&](const std::string& data) {
        std::ofstream os(path, std::ios::binary);
        os.write(data.data(), static_cast<std::streamsize>(data.size()));
    };

    write_bytes(bytes.substr(0, 10));
    CHECK_THROWS_AS(load_checkpoint(path), format_error);

    std::string flipped = bytes;
    flipped[0] = 'X';
    write_bytes(flipped);
    CHECK_THROWS_AS(load_checkpoint(path), format_error);

    write_bytes(bytes + std::string(1, '\0'));
    CHECK_THROWS_AS(load_checkpoint(path), format_error);

    CHECK_THROWS_AS(load_checkpoint("no_such_file.finw"), format_error);
    std::remove(path.c_str());
}

TEST_CASE("normalize_stack brings every plane to unit mean") {
    Fov f = make_fov(16, 50);
    ad::Tensor n = f.sample.input;
    const std::size_t plane = 16 * 16;
    for (int m = 0; m < 2; ++m) {
        double mean = 0.0;
        for (std::size_t i = 0; i < plane; ++i) mean += n.values[m * plane + i];
        CHECK(mean / plane == doctest::Approx(1.0).epsilon(1e-12));
    }

    HologramStack dark = f.stack;
    for (auto& v : dark.holograms[0].data) v = 0.0;
    CHECK_THROWS_AS(normalize_stack(dark), numeric_error);
}

TEST_CASE("infer: deterministic output and strict geometry checks") {
    FinModel m = make_model(tiny_config(), 42);
    Fov f = make_fov(16, 51);

    ComplexField a = infer(m, f.stack);
    ComplexField b = infer(m, f.stack);
    CHECK(a.data == b.data);
    CHECK(a.height == 16);
    CHECK(a.pixel_pitch_um == f.stack.holograms[0].pixel_pitch_um);

    HologramStack three = f.stack;
    three.holograms.push_back(three.holograms[0]);
    three.z2_um.push_back(600.0);
    CHECK_THROWS_AS(infer(m, three), config_error);

    Fov big = make_fov(32, 52);
    CHECK_THROWS_AS(infer(m, big.stack), config_error);
}

TEST_CASE("tile_infer: tiling reproduces independent per-crop inference") {
    FinModel m = make_model(tiny_config(), 43);

    SUBCASE("single tile equals infer") {
        Fov f = make_fov(16, 53);
        ComplexField whole = infer(m, f.stack);
        ComplexField tiled = tile_infer(m, f.stack, 1);
        CHECK(whole.data == tiled.data);
    }

    SUBCASE("2x2 tiles equal crops; batching never changes bits") {
        Fov f = make_fov(32, 54);
        ComplexField tiled = tile_infer(m, f.stack, 1);
        CHECK(tile_infer(m, f.stack, 20).data == tiled.data);

        for (int ty = 0; ty < 2; ++ty)
            for (int tx = 0; tx < 2; ++tx) {
                HologramStack crop;
                crop.z2_um = f.stack.z2_um;
                for (const auto& plane : f.stack.holograms) {
                    IntensityImage img;
                    img.height = img.width = 16;
                    img.pixel_pitch_um = plane.pixel_pitch_um;
                    img.wavelength_um = plane.wavelength_um;
                    img.data.resize(256);
                    for (int y = 0; y < 16; ++y)
                        for (int x = 0; x < 16; ++x)
                            img.at(y, x) = plane.at(ty * 16 + y, tx * 16 + x);
                    crop.holograms.push_back(std::move(img));
                }
                ComplexField part = infer(m, crop);
                for (int y = 0; y < 16; ++y)
                    for (int x = 0; x < 16; ++x)
                        CHECK(tiled.at(ty * 16 + y, tx * 16 + x) == part.at(y, x));
            }
    }

    SUBCASE("non-multiple FOV runs through reflection padding") {
        Fov f = make_fov(24, 55);
        ComplexField out = tile_infer(m, f.stack, 3);
        CHECK(out.height == 24);
        CHECK(out.width == 24);
        CHECK(tile_infer(m, f.stack, 3).data == out.data);
    }

    SUBCASE("argument validation") {
        Fov f = make_fov(16, 56);
        CHECK_THROWS_AS(tile_infer(m, f.stack, 0), config_error);
    }
}

TEST_CASE("training: smoke run, determinism, and failure contracts") {
    FinConfig c = tiny_config();
    c.channels = 4;
    c.k_schedule = {3, 2};

    std::vector<TrainSample> train_set, val_set;
    std::vector<Fov> fovs;
    for (int i = 0; i < 8; ++i) fovs.push_back(make_fov(16, 60 + i));
    for (int i = 0; i < 6; ++i) train_set.push_back(fovs[i].sample);
    for (int i = 6; i < 8; ++i) val_set.push_back(fovs[i].sample);

    TrainOptions opt;
    opt.epochs = 1;
    opt.batch_size = 2;
    opt.seed = 9;

    SUBCASE("one epoch end to end") {
        TrainResult r = train_fin(c, train_set, val_set, opt);
        REQUIRE(r.log.size() == 1);
        CHECK(std::isfinite(r.log[0].train_loss));
        CHECK(std::isfinite(r.log[0].val_loss));
        CHECK(std::isfinite(r.log[0].val_amp_rmse));
        CHECK(r.log[0].lr == doctest::Approx(opt.adam.eta_max));
        CHECK(r.best_epoch == 0);
    }

    SUBCASE("identical seeds give identical curves and parameters") {
        opt.epochs = 2;
        TrainResult a = train_fin(c, train_set, val_set, opt);
        TrainResult b = train_fin(c, train_set, val_set, opt);
        REQUIRE(a.log.size() == b.log.size());
        for (std::size_t i = 0; i < a.log.size(); ++i) {
            CHECK(a.log[i].train_loss == b.log[i].train_loss);
            CHECK(a.log[i].val_loss == b.log[i].val_loss);
        }
        const auto pa = a.model.parameters(), pb = b.model.parameters();
        for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->values == pb[i]->values);
    }

    SUBCASE("loss falls over a short run and infer stays consistent with the log") {
        opt.epochs = 8;
        TrainOptions with_log = opt;
        with_log.log_csv_path = "train_log_test.csv";
        TrainResult r = train_fin(c, train_set, val_set, with_log);
        REQUIRE(r.log.size() == 8);
        CHECK(r.log.back().train_loss < r.log.front().train_loss);

        const std::string csv = slurp(with_log.log_csv_path);
        CHECK(csv.rfind("epoch,lr,train_loss,val_loss,val_amp_rmse\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 9);
        std::remove(with_log.log_csv_path.c_str());

        // Inference on a training FOV tracks the logged validation amplitude
        // error (same distribution, so within 1.5x).
        ComplexField rec = infer(r.model, fovs[0].stack);
        double se = 0.0;
        for (int i = 0; i < 256; ++i) {
            const double pa = std::abs(rec.data[i]);
            const double ga = std::hypot(fovs[0].sample.target.values[i],
                                         fovs[0].sample.target.values[256 + i]);
            se += (pa - ga) * (pa - ga);
        }
        const double rmse = std::sqrt(se / 256.0);
        CHECK(rmse < 1.5 * r.log[static_cast<std::size_t>(r.best_epoch)].val_amp_rmse);
    }

    SUBCASE("non-finite data aborts with a diagnostic") {
        auto poisoned = train_set;
        poisoned[1].input.values[7] = std::nan("");
        try {
            train_fin(c, poisoned, val_set, opt);
            FAIL("expected numeric_error");
        } catch (const numeric_error& e) {
            CHECK(std::string(e.what()).find("epoch 0") != std::string::npos);
        }
    }

    SUBCASE("argument validation") {
        CHECK_THROWS_AS(train_fin(c, {}, val_set, opt), config_error);
        CHECK_THROWS_AS(train_fin(c, train_set, {}, opt), config_error);
        TrainOptions bad = opt;
        bad.epochs = 0;
        CHECK_THROWS_AS(train_fin(c, train_set, val_set, bad), config_error);
        auto mismatched = train_set;
        mismatched[0].input = random_tensor({3, 16, 16}, 99);
        CHECK_THROWS_AS(train_fin(c, mismatched, val_set, opt), config_error);
    }
}

#include "holofin/fin.hpp"

#include <cmath>
#include <utility>

#include "holofin/errors.hpp"
#include "holofin/parallel.hpp"
#include "holofin/rng.hpp"
#include "json.hpp"

namespace holofin::fin {

void FinConfig::validate() const {
    if (input_side < 4 || (input_side & (input_side - 1)) != 0)
        throw config_error("FinConfig: input_side must be a power of two >= 4");
    if (hologram_count < 1) throw config_error("FinConfig: hologram_count must be >= 1");
    if (channels < 1) throw config_error("FinConfig: channels must be >= 1");
    if (k_schedule.empty()) throw config_error("FinConfig: k_schedule must not be empty");
    for (std::size_t i = 0; i < k_schedule.size(); ++i) {
        if (k_schedule[i] < 0 || k_schedule[i] > input_side / 2 - 1)
            throw config_error("FinConfig: k_schedule entries must lie in [0, input_side/2 - 1]");
        if (i > 0 && k_schedule[i] > k_schedule[i - 1])
            throw config_error("FinConfig: k_schedule must be non-increasing");
    }
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
        throw config_error("FinConfig: loss weights must be >= 0");
    if (full_transform && complex_weights)
        throw config_error("FinConfig: full_transform and complex_weights are mutually exclusive");
}

std::vector<ad::Tensor*> FinModel::parameters() {
    std::vector<ad::Tensor*> out = {&head_kernel, &head_bias};
    for (auto& g : groups) {
        out.push_back(&g.weight);
        if (config.complex_weights) out.push_back(&g.weight_im);
        out.push_back(&g.prelu_a);
    }
    out.push_back(&tail_kernel);
    out.push_back(&tail_bias);
    return out;
}

std::vector<const ad::Tensor*> FinModel::parameters() const {
    auto mut = const_cast<FinModel*>(this)->parameters();
    return std::vector<const ad::Tensor*>(mut.begin(), mut.end());
}

std::vector<std::string> FinModel::parameter_names() const {
    std::vector<std::string> out = {"head.kernel", "head.bias"};
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const std::string p = "group" + std::to_string(i);
        out.push_back(p + ".weight");
        if (config.complex_weights) out.push_back(p + ".weight_im");
        out.push_back(p + ".prelu_a");
    }
    out.push_back("tail.kernel");
    out.push_back("tail.bias");
    return out;
}

std::size_t FinModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto* p : parameters()) n += p->numel();
    return n;
}

FinModel make_model(const FinConfig& config, std::uint64_t seed) {
    config.validate();
    FinModel m;
    m.config = config;
    const int c = config.channels;
    Rng rng(mix_seed(seed, 0x46494e57ULL));

    auto kaiming_uniform = [&](std::vector<int> shape, int fan_in) {
        ad::Tensor t(std::move(shape));
        const double bound = std::sqrt(6.0 / fan_in);
        for (auto& v : t.values) v = rng.uniform(-bound, bound);
        return t;
    };
    auto normal = [&](std::vector<int> shape, double sigma) {
        ad::Tensor t(std::move(shape));
        for (auto& v : t.values) v = sigma * rng.gaussian();
        return t;
    };

    m.head_kernel = kaiming_uniform({c, config.hologram_count}, config.hologram_count);
    m.head_bias = ad::Tensor({c}, 0.0);
    for (int k : config.k_schedule) {
        SpafModuleParams g;
        const int win = 2 * k + 1;
        const double sigma = 1.0 / c;
        if (config.full_transform)
            g.weight = normal({c, c, win, win}, sigma);
        else
            g.weight = normal({c, win, win}, sigma);
        if (config.complex_weights) g.weight_im = normal({c, win, win}, sigma);
        g.prelu_a = ad::Tensor({c}, 0.25);
        m.groups.push_back(std::move(g));
    }
    m.tail_kernel = kaiming_uniform({2, c}, c);
    m.tail_bias = ad::Tensor({2}, 0.0);
    return m;
}

ModelNodes register_parameters(ad::Tape& t, const FinModel& model) {
    ModelNodes n;
    auto put = [&](const ad::Tensor& p) {
        ad::NodeId id = t.leaf(p);
        n.ordered.push_back(id);
        return id;
    };
    n.head_kernel = put(model.head_kernel);
    n.head_bias = put(model.head_bias);
    for (const auto& g : model.groups) {
        ModelNodes::Group gn;
        gn.weight = put(g.weight);
        if (model.config.complex_weights) gn.weight_im = put(g.weight_im);
        gn.prelu_a = put(g.prelu_a);
        n.groups.push_back(gn);
    }
    n.tail_kernel = put(model.tail_kernel);
    n.tail_bias = put(model.tail_bias);
    return n;
}

ad::NodeId spaf_forward(ad::Tape& t, const FinConfig& config, ad::NodeId x,
                        const ModelNodes::Group& group, int k) {
    const auto& shape = t.value(x).shape;
    if (shape.size() != 3) throw config_error("spaf_forward: expected a [c,H,W] feature map");
    const int h = shape[1], w = shape[2];

    ad::NodeId zero_im = t.leaf(ad::Tensor(shape, 0.0));
    auto freq = ad::fft2(t, x, zero_im);
    auto win = ad::spectral_truncate(t, freq.first, freq.second, k);
    ad::NodePair mixed;
    if (config.complex_weights)
        mixed = ad::spaf_weight_mul_complex(t, win.first, win.second, group.weight,
                                            group.weight_im);
    else if (config.full_transform)
        mixed = ad::spaf_weight_mul_full(t, win.first, win.second, group.weight);
    else
        mixed = ad::spaf_weight_mul(t, win.first, win.second, group.weight);
    auto padded = ad::spectral_pad(t, mixed.first, mixed.second, h, w);
    auto spatial = ad::ifft2(t, padded.first, padded.second);
    ad::NodeId act = ad::prelu(t, spatial.first, group.prelu_a);  // real part only
    return ad::add(t, x, act);
}

ad::NodeId fin_forward(ad::Tape& t, const FinConfig& config, ad::NodeId stack,
                       const ModelNodes& nodes) {
    const auto& shape = t.value(stack).shape;
    const std::vector<int> expected = {config.hologram_count, config.input_side,
                                       config.input_side};
    if (shape != expected)
        throw config_error("fin_forward: input shape does not match the configured FOV");
    if (nodes.groups.size() != config.k_schedule.size())
        throw config_error("fin_forward: group count does not match k_schedule");

    ad::NodeId head = ad::conv1x1(t, stack, nodes.head_kernel, nodes.head_bias);
    ad::NodeId x = head;
    for (std::size_t g = 0; g < nodes.groups.size(); ++g) {
        const int k = config.k_schedule[g];
        ad::NodeId y = spaf_forward(t, config, x, nodes.groups[g], k);
        y = spaf_forward(t, config, y, nodes.groups[g], k);  // shared parameters
        x = ad::add(t, x, y);                                // short skip
    }
    x = ad::add(t, x, head);  // long skip
    return ad::conv1x1(t, x, nodes.tail_kernel, nodes.tail_bias);
}

ad::NodeId total_loss(ad::Tape& t, ad::NodeId pred, ad::NodeId gt, double alpha, double beta,
                      double gamma, const FeatureExtractor* perceptual) {
    if (!(alpha >= 0.0) || !(beta >= 0.0) || !(gamma >= 0.0))
        throw config_error("total_loss: weights must be >= 0");
    const auto& ps = t.value(pred).shape;
    if (ps.size() != 3 || ps[0] != 2)
        throw config_error("total_loss: expected [2,H,W] predictions");
    if (ps != t.value(gt).shape) throw config_error("total_loss: shape mismatch");

    ad::NodeId diff = ad::sub(t, pred, gt);
    ad::NodeId l_mae = ad::mean(t, ad::abs_op(t, diff));
    auto freq = ad::fft2(t, ad::select_channel(t, diff, 0), ad::select_channel(t, diff, 1));
    ad::NodeId l_complex = ad::mean(t, ad::cabs(t, freq.first, freq.second));
    ad::NodeId loss = ad::add(t, ad::scale(t, l_mae, alpha), ad::scale(t, l_complex, beta));
    if (perceptual != nullptr) {
        ad::NodeId d = ad::sub(t, perceptual->features(t, pred), perceptual->features(t, gt));
        loss = ad::add(t, loss, ad::scale(t, ad::mean(t, ad::abs_op(t, d)), gamma));
    }
    return loss;
}

ad::Tensor fin_apply(const FinModel& model, const ad::Tensor& stack) {
    ad::Tape t;
    ModelNodes nodes = register_parameters(t, model);
    ad::NodeId out = fin_forward(t, model.config, t.leaf(stack), nodes);
    return t.value(out);
}

ad::Tensor normalize_stack(const HologramStack& stack) {
    stack.validate();
    const int h = stack.holograms[0].height, w = stack.holograms[0].width;
    const std::size_t plane = static_cast<std::size_t>(h) * w;
    ad::Tensor out({stack.planes(), h, w});
    for (int m = 0; m < stack.planes(); ++m) {
        const auto& data = stack.holograms[m].data;
        double mean = 0.0;
        for (double v : data) mean += v;
        mean /= static_cast<double>(plane);
        if (!std::isfinite(mean) || mean <= 0.0)
            throw numeric_error("normalize_stack: hologram mean must be positive");
        for (std::size_t i = 0; i < plane; ++i) out.values[m * plane + i] = data[i] / mean;
    }
    return out;
}

namespace {

void check_stack_matches(const FinModel& model, const HologramStack& stack) {
    stack.validate();
    if (stack.planes() != model.config.hologram_count)
        throw config_error("infer: stack plane count does not match the model");
}

ComplexField field_from_output(const ad::Tensor& out, int h, int w, double pitch_um,
                               double lambda_um) {
    ComplexField f;
    f.height = h;
    f.width = w;
    f.pixel_pitch_um = pitch_um;
    f.wavelength_um = lambda_um;
    f.data.resize(static_cast<std::size_t>(h) * w);
    const std::size_t plane = f.data.size();
    for (std::size_t i = 0; i < plane; ++i)
        f.data[i] = {out.values[i], out.values[plane + i]};
    return f;
}

// Mirror index without edge repetition (period 2n-2).
int reflect_index(int i, int n) {
    if (n == 1) return 0;
    const int period = 2 * n - 2;
    int m = i % period;
    if (m < 0) m += period;
    return m < n ? m : period - m;
}

}  // namespace

ComplexField infer(const FinModel& model, const HologramStack& stack) {
    check_stack_matches(model, stack);
    const int side = model.config.input_side;
    if (stack.holograms[0].height != side || stack.holograms[0].width != side)
        throw config_error("infer: FOV does not match the trained input side");
    ad::Tensor out = fin_apply(model, normalize_stack(stack));
    return field_from_output(out, side, side, stack.holograms[0].pixel_pitch_um,
                             stack.holograms[0].wavelength_um);
}

ComplexField tile_infer(const FinModel& model, const HologramStack& stack, int batch) {
    if (batch < 1) throw config_error("tile_infer: batch must be >= 1");
    check_stack_matches(model, stack);
    const int side = model.config.input_side;
    const int h = stack.holograms[0].height, w = stack.holograms[0].width;
    const int tiles_y = (h + side - 1) / side, tiles_x = (w + side - 1) / side;
    const int ph = tiles_y * side, pw = tiles_x * side;

    // Reflection-pad each plane up to the tile grid.
    std::vector<std::vector<double>> padded(stack.planes());
    for (int m = 0; m < stack.planes(); ++m) {
        padded[m].resize(static_cast<std::size_t>(ph) * pw);
        for (int y = 0; y < ph; ++y) {
            const int sy = reflect_index(y, h);
            for (int x = 0; x < pw; ++x)
                padded[m][static_cast<std::size_t>(y) * pw + x] =
                    stack.holograms[m].at(sy, reflect_index(x, w));
        }
    }

    std::vector<std::complex<double>> out(static_cast<std::size_t>(ph) * pw);
    const int tile_count = tiles_y * tiles_x;
    auto run_tile = [&](std::size_t tile) {
        const int ty = static_cast<int>(tile) / tiles_x, tx = static_cast<int>(tile) % tiles_x;
        HologramStack sub;
        sub.z2_um = stack.z2_um;
        for (int m = 0; m < stack.planes(); ++m) {
            IntensityImage img;
            img.height = img.width = side;
            img.pixel_pitch_um = stack.holograms[m].pixel_pitch_um;
            img.wavelength_um = stack.holograms[m].wavelength_um;
            img.data.resize(static_cast<std::size_t>(side) * side);
            for (int y = 0; y < side; ++y)
                for (int x = 0; x < side; ++x)
                    img.at(y, x) =
                        padded[m][static_cast<std::size_t>(ty * side + y) * pw + tx * side + x];
            sub.holograms.push_back(std::move(img));
        }
        ComplexField tile_field = infer(model, sub);
        for (int y = 0; y < side; ++y)
            for (int x = 0; x < side; ++x)
                out[static_cast<std::size_t>(ty * side + y) * pw + tx * side + x] =
                    tile_field.at(y, x);
    };
    // Tiles write disjoint regions, so the batch grouping (and any concurrency
    // inside a group) cannot change the stitched result.
    for (int start = 0; start < tile_count; start += batch) {
        const int count = std::min(batch, tile_count - start);
        parallel_for(static_cast<std::size_t>(count),
                     [&](std::size_t i) { run_tile(static_cast<std::size_t>(start) + i); });
    }

    ComplexField full;
    full.height = h;
    full.width = w;
    full.pixel_pitch_um = stack.holograms[0].pixel_pitch_um;
    full.wavelength_um = stack.holograms[0].wavelength_um;
    full.data.resize(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            full.at(y, x) = out[static_cast<std::size_t>(y) * pw + x];
    return full;
}

FinConfig fin_config_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw format_error(std::string("FinConfig: invalid JSON: ") + e.what());
    }
    if (!j.is_object()) throw format_error("FinConfig: top-level JSON must be an object");

    FinConfig c;
    try {
        for (const auto& [key, value] : j.items()) {
            if (key == "input_side")
                c.input_side = value.get<int>();
            else if (key == "hologram_count")
                c.hologram_count = value.get<int>();
            else if (key == "channels")
                c.channels = value.get<int>();
            else if (key == "k_schedule")
                c.k_schedule = value.get<std::vector<int>>();
            else if (key == "alpha")
                c.alpha = value.get<double>();
            else if (key == "beta")
                c.beta = value.get<double>();
            else if (key == "gamma")
                c.gamma = value.get<double>();
            else if (key == "full_transform")
                c.full_transform = value.get<bool>();
            else if (key == "complex_weights")
                c.complex_weights = value.get<bool>();
            else
                throw config_error("FinConfig: unknown key \"" + key + "\"");
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("FinConfig: bad value type: ") + e.what());
    }
    c.validate();
    return c;
}

std::string fin_config_to_json(const FinConfig& config) {
    nlohmann::json j;
    j["input_side"] = config.input_side;
    j["hologram_count"] = config.hologram_count;
    j["channels"] = config.channels;
    j["k_schedule"] = config.k_schedule;
    j["alpha"] = config.alpha;
    j["beta"] = config.beta;
    j["gamma"] = config.gamma;
    j["full_transform"] = config.full_transform;
    j["complex_weights"] = config.complex_weights;
    return j.dump(2);
}

}  // namespace holofin::fin

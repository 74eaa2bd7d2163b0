#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "holofin/field.hpp"
#include "holofin/ops.hpp"
#include "holofin/tensor.hpp"

namespace holofin::fin {

// Network hyperparameters. One SPAF group per k_schedule entry; the half
// window sizes must be non-increasing (pyramid structure).
struct FinConfig {
    int input_side = 64;       // square FOV side in pixels, power of two
    int hologram_count = 2;    // M: input planes
    int channels = 16;         // c: feature channels
    std::vector<int> k_schedule = {16, 12, 8};
    double alpha = 0.5;        // MAE loss weight
    double beta = 1.0;         // complex (spectral) loss weight
    double gamma = 0.5;        // perceptual loss weight
    bool full_transform = false;   // per-channel-pair spectral mix [c,c,2k+1,2k+1]
    bool complex_weights = false;  // complex-valued spectral weights

    int groups() const { return static_cast<int>(k_schedule.size()); }
    void validate() const;
};

// Learnable state of one SPAF group (the group's two recursive module
// applications share this single parameter set).
struct SpafModuleParams {
    ad::Tensor weight;     // [c, 2k+1, 2k+1]; full transform: [c, c, 2k+1, 2k+1]
    ad::Tensor weight_im;  // imaginary part when complex_weights, else empty
    ad::Tensor prelu_a;    // per-channel activation slope [c]
};

struct FinModel {
    FinConfig config;
    ad::Tensor head_kernel;  // [c, M]
    ad::Tensor head_bias;    // [c]
    std::vector<SpafModuleParams> groups;
    ad::Tensor tail_kernel;  // [2, c]
    ad::Tensor tail_bias;    // [2]

    // Stable parameter enumeration used by the optimizer and checkpoints.
    std::vector<ad::Tensor*> parameters();
    std::vector<const ad::Tensor*> parameters() const;
    std::vector<std::string> parameter_names() const;
    std::size_t parameter_count() const;
};

// Fresh model with spectral weights ~ N(0, 1/c), Kaiming-uniform 1x1 conv
// kernels, zero biases, PReLU slopes 0.25.
FinModel make_model(const FinConfig& config, std::uint64_t seed);

// Parameter leaves registered on a tape, mirroring the model structure.
// `ordered` lists the same ids in parameters() order.
struct ModelNodes {
    struct Group {
        ad::NodeId weight = 0;
        ad::NodeId weight_im = 0;
        ad::NodeId prelu_a = 0;
    };
    ad::NodeId head_kernel = 0;
    ad::NodeId head_bias = 0;
    std::vector<Group> groups;
    ad::NodeId tail_kernel = 0;
    ad::NodeId tail_bias = 0;
    std::vector<ad::NodeId> ordered;
};

ModelNodes register_parameters(ad::Tape& t, const FinModel& model);

// One SPAF module application on feature map x [c,H,W]: per-channel DFT,
// truncate to the centered (2k+1)^2 window, spectral weight mix, zero-pad,
// inverse DFT, real part, per-channel PReLU, plus the module input.
ad::NodeId spaf_forward(ad::Tape& t, const FinConfig& config, ad::NodeId x,
                        const ModelNodes::Group& group, int k);

// Full network: head 1x1 conv, SPAF groups (each module applied twice with a
// short skip around the pair), long skip from the head output, tail 1x1 conv
// to a [2,H,W] (real, imaginary) field prediction.
ad::NodeId fin_forward(ad::Tape& t, const FinConfig& config, ad::NodeId stack,
                       const ModelNodes& nodes);

// Optional perceptual-loss hook. None ships by default; the gamma term is
// dropped when no extractor is supplied.
struct FeatureExtractor {
    virtual ~FeatureExtractor() = default;
    virtual ad::NodeId features(ad::Tape& t, ad::NodeId image) const = 0;
};

// alpha * mean|pred - gt| + beta * mean|DFT(pred_c) - DFT(gt_c)| (+ gamma *
// mean|features(pred) - features(gt)| if an extractor is plugged in), where
// pred_c/gt_c are the complex fields assembled from the two channels.
ad::NodeId total_loss(ad::Tape& t, ad::NodeId pred, ad::NodeId gt, double alpha,
                      double beta, double gamma,
                      const FeatureExtractor* perceptual = nullptr);

// Value-level forward pass on a scratch tape: [M,H,W] -> [2,H,W].
ad::Tensor fin_apply(const FinModel& model, const ad::Tensor& stack);

// Each hologram divided by its own mean so the background sits near 1.
ad::Tensor normalize_stack(const HologramStack& stack);

// Normalize, run the network, assemble a ComplexField with the stack geometry.
ComplexField infer(const FinModel& model, const HologramStack& stack);

// Inference on a FOV larger than the trained input side: reflection-pad to a
// tile multiple, run tiles in groups of `batch`, stitch, crop. The grouping
// never changes the math; batch=1 and batch=N are bit-identical.
ComplexField tile_infer(const FinModel& model, const HologramStack& stack, int batch);

// JSON round-trip of FinConfig, field for field.
FinConfig fin_config_from_json(const std::string& text);
std::string fin_config_to_json(const FinConfig& config);

}  // namespace holofin::fin

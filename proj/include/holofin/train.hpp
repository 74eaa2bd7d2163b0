#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "holofin/fin.hpp"
#include "holofin/optim.hpp"

namespace holofin::fin {

struct TrainSample {
    ad::Tensor input;   // [M, side, side] normalized holograms
    ad::Tensor target;  // [2, side, side] field real/imaginary parts
};

struct TrainOptions {
    int epochs = 50;
    int batch_size = 8;
    std::uint64_t seed = 0;
    bool augment = true;  // random quarter-turn rotations, same for input and target
    ad::AdamConfig adam{};
    std::string log_csv_path;  // written when non-empty
};

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double val_amp_rmse = 0.0;
};

struct TrainResult {
    FinModel model;  // parameters from the best-validation epoch
    std::vector<EpochLog> log;
    int best_epoch = -1;
};

// Rotates the trailing H,W planes of a [C,H,W] tensor counter-clockwise by
// quarter * 90 degrees.
ad::Tensor rotate_quarter(const ad::Tensor& x, int quarter);

// Minibatch Adam with cosine warm restarts (scheduler time in fractional
// epochs) and shared-rotation augmentation. Deterministic for a fixed seed.
TrainResult train_fin(const FinConfig& config, const std::vector<TrainSample>& train_set,
                      const std::vector<TrainSample>& val_set, const TrainOptions& options);

void write_train_log_csv(const std::string& path, const std::vector<EpochLog>& log);

}  // namespace holofin::fin

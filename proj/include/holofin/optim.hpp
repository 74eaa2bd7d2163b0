#pragma once

#include <string>
#include <vector>

#include "holofin/tensor.hpp"

namespace holofin::ad {

// Cosine annealing with warm restarts: period lengths T0, T0*t_mult, ...;
// within a period of length T the rate is
// eta_min + 0.5*(eta_max - eta_min)*(1 + cos(pi * t_cur / T)).
double cosine_warm_restart_lr(double step, int t0, int t_mult, double eta_max, double eta_min);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double eta_max = 1e-3;
    double eta_min = 1e-5;
    int t0 = 10;      // scheduler period, in scheduler time units (epochs)
    int t_mult = 2;

    void validate() const;
};

struct AdamState {
    AdamConfig config;
    std::vector<Tensor> m;  // first moments, one per parameter
    std::vector<Tensor> v;  // second moments
    long step = 0;          // completed adam_step calls (bias correction)
    double scheduler_time = 0.0;  // set by the trainer, in epochs

    // Lazily sizes the moment buffers to match the parameter list.
    void ensure_shapes(const std::vector<Tensor*>& params);
};

// One Adam update with bias correction. The learning rate comes from the
// cosine warm-restart scheduler evaluated at state.scheduler_time. A non-finite
// gradient raises numeric_error naming the offending parameter.
void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, const std::vector<std::string>& names);

}  // namespace holofin::ad

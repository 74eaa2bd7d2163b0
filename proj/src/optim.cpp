#include "holofin/optim.hpp"

#include <cmath>

#include "holofin/errors.hpp"

namespace holofin::ad {

double cosine_warm_restart_lr(double step, int t0, int t_mult, double eta_max, double eta_min) {
    if (t0 < 1) throw config_error("cosine_warm_restart_lr: T0 must be >= 1");
    if (t_mult < 1) throw config_error("cosine_warm_restart_lr: T_mult must be >= 1");
    if (!(eta_max >= eta_min) || eta_min < 0.0)
        throw config_error("cosine_warm_restart_lr: need eta_max >= eta_min >= 0");
    if (step < 0.0) step = 0.0;

    double t_cur = step;
    double period = t0;
    while (t_cur >= period) {
        t_cur -= period;
        period *= t_mult;
    }
    return eta_min + 0.5 * (eta_max - eta_min) * (1.0 + std::cos(M_PI * t_cur / period));
}

void AdamConfig::validate() const {
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw config_error("AdamConfig: betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw config_error("AdamConfig: eps must be positive");
    if (!(eta_max >= eta_min) || eta_min < 0.0)
        throw config_error("AdamConfig: need eta_max >= eta_min >= 0");
    if (t0 < 1 || t_mult < 1) throw config_error("AdamConfig: T0 and T_mult must be >= 1");
}

void AdamState::ensure_shapes(const std::vector<Tensor*>& params) {
    if (m.size() == params.size() && v.size() == params.size()) {
        for (std::size_t i = 0; i < params.size(); ++i)
            if (m[i].shape != params[i]->shape || v[i].shape != params[i]->shape)
                throw config_error("AdamState: moment shape does not match its parameter");
        return;
    }
    if (!m.empty() || !v.empty())
        throw config_error("AdamState: moment count does not match the parameter count");
    m.reserve(params.size());
    v.reserve(params.size());
    for (const Tensor* p : params) {
        m.emplace_back(p->shape, 0.0);
        v.emplace_back(p->shape, 0.0);
    }
}

void adam_step(AdamState& state, const std::vector<Tensor*>& params,
               const std::vector<const Tensor*>& grads, const std::vector<std::string>& names) {
    state.config.validate();
    if (params.size() != grads.size() || params.size() != names.size())
        throw config_error("adam_step: params, grads and names must align");
    state.ensure_shapes(params);

    for (std::size_t i = 0; i < params.size(); ++i) {
        if (grads[i]->values.size() != params[i]->values.size())
            throw config_error("adam_step: gradient shape mismatch for " + names[i]);
        for (double g : grads[i]->values)
            if (!std::isfinite(g))
                throw numeric_error("adam_step: non-finite gradient for parameter " + names[i]);
    }

    const AdamConfig& c = state.config;
    state.step += 1;
    const double lr =
        cosine_warm_restart_lr(state.scheduler_time, c.t0, c.t_mult, c.eta_max, c.eta_min);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.values.size(); ++j) {
            m.values[j] = c.beta1 * m.values[j] + (1.0 - c.beta1) * g.values[j];
            v.values[j] = c.beta2 * v.values[j] + (1.0 - c.beta2) * g.values[j] * g.values[j];
            const double m_hat = m.values[j] / bc1;
            const double v_hat = v.values[j] / bc2;
            p.values[j] -= lr * m_hat / (std::sqrt(v_hat) + c.eps);
        }
    }
}

}  // namespace holofin::ad

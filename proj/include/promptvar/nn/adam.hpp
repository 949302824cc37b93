#pragma once

#include <cmath>
#include <span>

#include "promptvar/nn/param.hpp"

namespace promptvar::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam update on one parameter; clears its gradient.
inline void adam_step(Param& p, const AdamConfig& cfg) {
    ++p.step;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(p.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(p.step));
    auto& w = p.value.data();
    auto& g = p.grad.data();
    auto& m = p.adam_m.data();
    auto& v = p.adam_v.data();
    for (std::size_t i = 0; i < w.size(); ++i) {
        m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
        v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        w[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        g[i] = 0.0;
    }
}

inline void adam_step(std::span<Param* const> params, const AdamConfig& cfg) {
    for (Param* p : params) adam_step(*p, cfg);
}

inline void adam_step(ParamSet& params, const AdamConfig& cfg) {
    auto all = params.all();
    adam_step(std::span<Param* const>(all), cfg);
}

// Rescales gradients so their global L2 norm is at most max_norm. Returns the
// norm before clipping.
inline double clip_grad_norm(ParamSet& params, double max_norm) {
    const double n = params.grad_norm();
    if (n > max_norm && n > 0.0) params.scale_grads(max_norm / n);
    return n;
}

}  // namespace promptvar::nn

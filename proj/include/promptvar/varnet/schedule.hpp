#pragma once

#include <cmath>
#include <string>
#include <utility>

#include "promptvar/errors.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/nn/tensor.hpp"

namespace promptvar::varnet {

// Linear variance-preserving schedule β(t) = β_min + t(β_max − β_min).
struct DiffusionSchedule {
    double beta_min = 0.05;
    double beta_max = 20.0;

    DiffusionSchedule() = default;
    DiffusionSchedule(double lo, double hi) : beta_min(lo), beta_max(hi) {
        if (!(lo > 0.0 && lo < hi)) throw ConfigError("schedule: need 0 < beta_min < beta_max");
    }

    double beta(double t) const { return beta_min + t * (beta_max - beta_min); }
    double integral(double t) const { return beta_min * t + 0.5 * t * t * (beta_max - beta_min); }
    double alpha(double t) const { return std::exp(-0.5 * integral(t)); }
    double sigma2(double t) const { return -std::expm1(-integral(t)); }
};

struct Diffused {
    nn::Tensor2 zt;
    nn::Tensor2 eps;
};

// Closed-form marginal of dz = −½β z dt + √β dw started at z0.
inline Diffused forward_diffuse(const nn::Tensor2& z0, double t, const DiffusionSchedule& s, nn::Rng& rng) {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("forward_diffuse: t=" + std::to_string(t) + " outside [0, 1]");
    Diffused out{z0, rng.normal_tensor(z0.rows(), z0.cols())};
    const double a = s.alpha(t), sd = std::sqrt(s.sigma2(t));
    for (std::size_t i = 0; i < z0.size(); ++i) out.zt[i] = a * z0[i] + sd * out.eps[i];
    return out;
}

}  // namespace promptvar::varnet

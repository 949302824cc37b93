#pragma once

#include <cmath>
#include <functional>
#include <string>

#include "promptvar/errors.hpp"
#include "promptvar/varnet/model.hpp"
#include "promptvar/varnet/schedule.hpp"

namespace promptvar::varnet {

using ScoreFn = std::function<nn::Tensor2(const nn::Tensor2& z, double t)>;

// Integrates dz = −½β(t)(z + ∇log p_t(z)) dt from t=1 down to t_eps with
// explicit Euler on a uniform grid, starting from z ~ N(0, I).
inline nn::Tensor2 ode_sample_with_score(const ScoreFn& score, std::size_t rows, std::size_t cols,
                                         const DiffusionSchedule& s, std::size_t steps, nn::Rng& rng,
                                         double t_eps = 1e-4) {
    if (steps == 0) throw ConfigError("ode_sample: steps must be >= 1");
    nn::Tensor2 z = rng.normal_tensor(rows, cols);
    const double h = (1.0 - t_eps) / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = std::max(1.0 - static_cast<double>(k) * h, t_eps);
        const nn::Tensor2 g = score(z, t);
        const double c = 0.5 * s.beta(t) * h;
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += c * (z[i] + g[i]);
        if (!z.all_finite())
            throw NumericalError("ode_sample: non-finite state at step " + std::to_string(k + 1) + " of " +
                                 std::to_string(steps) + " (t=" + std::to_string(t) + ")");
    }
    return z;
}

// Score implied by a ẑ0 estimate under the Gaussian marginal.
inline nn::Tensor2 score_from_z0(const nn::Tensor2& z, const nn::Tensor2& z0_hat, double t, const DiffusionSchedule& s) {
    const double a = s.alpha(t), var = s.sigma2(t);
    nn::Tensor2 g(z.rows(), z.cols());
    for (std::size_t i = 0; i < z.size(); ++i) g[i] = -(z[i] - a * z0_hat[i]) / var;
    return g;
}

inline nn::Tensor2 ode_sample(const VarNet& m, const nn::Tensor2& P, std::size_t steps, nn::Rng& rng) {
    const auto& cfg = m.config();
    const auto& s = m.schedule();
    return ode_sample_with_score(
        [&](const nn::Tensor2& z, double t) { return score_from_z0(z, m.predict_z0(P, z, t), t, s); },
        cfg.reference_rows, cfg.d, s, steps, rng, cfg.t_eps);
}

// [P; ẑ_ref], the conditioning a downstream consumer receives.
inline nn::Tensor2 style_vector(const nn::Tensor2& P, const nn::Tensor2& z_ref) {
    if (P.cols() != z_ref.cols())
        throw DimensionError("style_vector: prompt width " + std::to_string(P.cols()) + " vs reference width " +
                             std::to_string(z_ref.cols()));
    return nn::vstack(P, z_ref);
}

}  // namespace promptvar::varnet

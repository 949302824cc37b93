#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "promptvar/varnet/model.hpp"
#include "promptvar/varnet/sampler.hpp"

namespace promptvar::varnet {

// z0 | c ~ N(μ_c, s_c² I) for a binary condition c, where c is shown to the
// network only through a fixed prompt matrix P_c. The two components have
// different spreads, so a sampler that collapses to the mean fails the
// spread check even when it picks the right component.
struct ToyTask {
    VarnetConfig cfg;
    std::array<nn::Tensor2, 2> prompt;
    std::array<nn::Tensor2, 2> mean;
    std::array<double, 2> stddev{0.3, 0.6};

    static ToyTask make(std::uint64_t seed) {
        ToyTask t;
        t.cfg.d = 8;
        t.cfg.heads = 2;
        t.cfg.layers = 2;
        t.cfg.ff_mult = 4;
        t.cfg.prompt_rows = 2;
        t.cfg.reference_rows = 2;
        t.cfg.d_time = 16;
        nn::Rng rng(seed);
        for (int c = 0; c < 2; ++c) {
            t.prompt[c] = rng.normal_tensor(2, 8);
            t.mean[c] = rng.normal_tensor(2, 8);
        }
        return t;
    }

    nn::Tensor2 draw(int c, nn::Rng& rng) const {
        nn::Tensor2 z = rng.normal_tensor(cfg.reference_rows, cfg.d, stddev[c]);
        z += mean[c];
        return z;
    }

    std::vector<VarnetExample> dataset(std::size_t per_condition, nn::Rng& rng) const {
        std::vector<VarnetExample> out;
        for (std::size_t i = 0; i < per_condition; ++i)
            for (int c = 0; c < 2; ++c) out.push_back({prompt[c], draw(c, rng)});
        return out;
    }

    int classify(const nn::Tensor2& z) const {
        return nn::frobenius(z - mean[0]) <= nn::frobenius(z - mean[1]) ? 0 : 1;
    }
};

struct ToyReport {
    std::array<double, 2> accuracy{0, 0};
    std::array<double, 2> sample_std{0, 0};  // pooled over entries, about the sample mean
    std::array<double, 2> std_ratio{0, 0};   // sample_std / true std
};

inline ToyReport evaluate_toy(const VarNet& m, const ToyTask& task, std::size_t samples, std::size_t steps,
                              std::uint64_t seed) {
    ToyReport r;
    nn::Rng rng(seed);
    for (int c = 0; c < 2; ++c) {
        std::vector<nn::Tensor2> zs;
        std::size_t hits = 0;
        for (std::size_t i = 0; i < samples; ++i) {
            zs.push_back(ode_sample(m, task.prompt[c], steps, rng));
            hits += task.classify(zs.back()) == c;
        }
        nn::Tensor2 mu(zs[0].rows(), zs[0].cols());
        for (const auto& z : zs) mu += z;
        mu *= 1.0 / static_cast<double>(samples);
        double ss = 0.0;
        for (const auto& z : zs)
            for (std::size_t i = 0; i < z.size(); ++i) ss += (z[i] - mu[i]) * (z[i] - mu[i]);
        r.accuracy[c] = static_cast<double>(hits) / static_cast<double>(samples);
        r.sample_std[c] = std::sqrt(ss / static_cast<double>(samples * mu.size() - mu.size()));
        r.std_ratio[c] = r.sample_std[c] / task.stddev[c];
    }
    return r;
}

}  // namespace promptvar::varnet

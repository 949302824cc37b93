#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/log.hpp"
#include "promptvar/nn/adam.hpp"
#include "promptvar/nn/checkpoint.hpp"
#include "promptvar/nn/layers.hpp"
#include "promptvar/nn/losses.hpp"
#include "promptvar/nn/transformer.hpp"
#include "promptvar/varnet/schedule.hpp"

namespace promptvar::varnet {

struct VarnetConfig {
    std::size_t d = 32;
    std::size_t layers = 4;
    std::size_t heads = 4;
    std::size_t ff_mult = 4;
    std::size_t prompt_rows = 8;     // M
    std::size_t reference_rows = 8;  // N
    std::size_t d_time = 32;
    double time_scale = 1000.0;  // t is multiplied by this before the sinusoidal embedding
    double data_std = 0.5;       // s in the output preconditioning
    double t_eps = 1e-4;

    nlohmann::json to_json() const {
        return {{"d", d}, {"layers", layers}, {"heads", heads}, {"ff_mult", ff_mult}, {"prompt_rows", prompt_rows},
                {"reference_rows", reference_rows}, {"d_time", d_time}, {"time_scale", time_scale}, {"data_std", data_std},
                {"t_eps", t_eps}};
    }
    static VarnetConfig from_json(const nlohmann::json& j) {
        VarnetConfig c;
        c.d = j.at("d");
        c.layers = j.at("layers");
        c.heads = j.at("heads");
        c.ff_mult = j.at("ff_mult");
        c.prompt_rows = j.at("prompt_rows");
        c.reference_rows = j.at("reference_rows");
        c.d_time = j.at("d_time");
        c.time_scale = j.at("time_scale");
        c.data_std = j.at("data_std");
        c.t_eps = j.at("t_eps");
        return c;
    }
};

// Predicts the clean reference rows ẑ0 from [P; z_t]. Each position gets a
// segment embedding (prompt / reference) and a sinusoidal position; the
// diffusion step enters every layer through FiLM.
//
// Output is ẑ0 = c_skip(t)·z_t + c_out(t)·(F + G ⊙ z_t) with
//   c_skip = α s²/(α² s² + σ²),  c_out = σ s/√(α² s² + σ²),  s = data_std.
// c_skip·z_t is the posterior mean for zero-mean data of spread s. F and G are
// linear heads on the reference rows; G lets the shrinkage toward the
// prompt-specific mean depend on the prompt, which the pre-norm stack only
// learns very slowly on its own.
class VarNet {
public:
    struct Cache {
        nn::Tensor2 P, zt;
        nn::Tensor2 temb;
        nn::FeedForward::Cache time;
        nn::TransformerEncoder::Cache enc;
        nn::Tensor2 h_ref;  // encoder output rows of the reference segment
        double c_out = 0.0;
    };

    VarNet() = default;
    VarNet(const VarnetConfig& cfg, std::uint64_t seed, const DiffusionSchedule& sched = {}) : cfg_(cfg), sched_(sched) {
        if (cfg.d % cfg.heads != 0) throw ConfigError("varnet: d must be divisible by heads");
        if (cfg.prompt_rows == 0 || cfg.reference_rows == 0) throw ConfigError("varnet: row counts must be positive");
        if (cfg.d_time == 0 || cfg.d_time % 2 != 0) throw ConfigError("varnet: d_time must be even and positive");
        if (!(cfg.data_std > 0.0)) throw ConfigError("varnet: data_std must be positive");
        nn::Rng rng(seed);
        in_p_ = nn::Linear(ps_, "varnet.in_p", cfg.d, cfg.d, rng);
        in_z_ = nn::Linear(ps_, "varnet.in_z", cfg.d, cfg.d, rng);
        seg_ = nn::Embedding(ps_, "varnet.segment", 2, cfg.d, rng);
        time_ = nn::FeedForward(ps_, "varnet.time", cfg.d_time, 2 * cfg.d_time, rng);
        enc_ = nn::TransformerEncoder(ps_, "varnet.enc", nn::EncoderConfig{cfg.d, cfg.layers, cfg.heads, cfg.ff_mult, cfg.d_time},
                                      rng);
        out_ = nn::Linear(ps_, "varnet.out", cfg.d, cfg.d, rng);
        gate_ = nn::Linear(ps_, "varnet.gate", cfg.d, cfg.d, rng);
    }

    const VarnetConfig& config() const { return cfg_; }
    const DiffusionSchedule& schedule() const { return sched_; }
    nn::ParamSet& params() { return ps_; }
    const nn::ParamSet& params() const { return ps_; }
    nn::TransformerEncoder& encoder() { return enc_; }

    nn::Tensor2 predict_z0(const nn::Tensor2& P, const nn::Tensor2& zt, double t, Cache* c = nullptr) const {
        const std::size_t M = cfg_.prompt_rows, N = cfg_.reference_rows, d = cfg_.d;
        if (P.rows() != M || P.cols() != d)
            throw DimensionError("varnet: prompt representation " + P.shape() + " expects [" + std::to_string(M) + "x" +
                                 std::to_string(d) + "]");
        if (zt.rows() != N || zt.cols() != d)
            throw DimensionError("varnet: noised reference " + zt.shape() + " expects [" + std::to_string(N) + "x" +
                                 std::to_string(d) + "]");
        if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("varnet: t=" + std::to_string(t) + " outside [0, 1]");

        nn::Tensor2 x = nn::vstack(in_p_.forward(P), in_z_.forward(zt));
        std::vector<std::size_t> segment(M + N, 1);
        std::fill(segment.begin(), segment.begin() + static_cast<std::ptrdiff_t>(M), 0);
        x += seg_.forward(segment);
        x += nn::sinusoidal_positions(M + N, d);

        const nn::Tensor2 temb = nn::timestep_embedding(t, cfg_.d_time, cfg_.time_scale);
        const nn::Tensor2 cond = temb + time_.forward(temb, c ? &c->time : nullptr);
        const nn::Tensor2 h = enc_.forward(x, &cond, c ? &c->enc : nullptr);
        nn::Tensor2 h_ref = nn::slice_rows(h, M, M + N);
        const double a = sched_.alpha(t), var = sched_.sigma2(t), s2 = cfg_.data_std * cfg_.data_std;
        const double c_skip = a * s2 / (a * a * s2 + var);
        const double c_out = std::sqrt(var) * cfg_.data_std / std::sqrt(a * a * s2 + var);
        const nn::Tensor2 f = out_.forward(h_ref);
        const nn::Tensor2 g = gate_.forward(h_ref);
        nn::Tensor2 y(N, d);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = c_skip * zt[i] + c_out * (f[i] + g[i] * zt[i]);
        if (c) {
            c->P = P;
            c->zt = zt;
            c->temb = temb;
            c->h_ref = std::move(h_ref);
            c->c_out = c_out;
        }
        return y;
    }

    // Accumulates parameter gradients for d loss / d ẑ0.
    void backward(const Cache& c, const nn::Tensor2& dy) {
        const std::size_t M = cfg_.prompt_rows, N = cfg_.reference_rows;
        nn::Tensor2 dh_ref = out_.backward(c.h_ref, dy * c.c_out);
        nn::Tensor2 dg(dy.rows(), dy.cols());
        for (std::size_t i = 0; i < dy.size(); ++i) dg[i] = dy[i] * c.c_out * c.zt[i];
        dh_ref += gate_.backward(c.h_ref, dg);
        nn::Tensor2 dh(M + N, cfg_.d);
        nn::set_rows(dh, M, dh_ref);
        nn::Tensor2 dcond(1, cfg_.d_time);
        const nn::Tensor2 dx = enc_.backward(c.enc, dh, &dcond);
        time_.backward(c.time, dcond);
        std::vector<std::size_t> segment(M + N, 1);
        std::fill(segment.begin(), segment.begin() + static_cast<std::ptrdiff_t>(M), 0);
        seg_.backward(segment, dx);
        in_p_.backward(c.P, nn::slice_rows(dx, 0, M));
        in_z_.backward(c.zt, nn::slice_rows(dx, M, M + N));
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        nn::save_checkpoint(ps_, dir / "varnet.ckpt.json");
        const nlohmann::json meta{{"config", cfg_.to_json()},
                                  {"schedule", {{"beta_min", sched_.beta_min}, {"beta_max", sched_.beta_max}}}};
        std::ofstream(dir / "varnet.meta.json") << meta.dump(1) << '\n';
    }

    static VarNet load(const std::filesystem::path& dir) {
        const auto meta_path = dir / "varnet.meta.json";
        std::ifstream in(meta_path);
        if (!in) throw IoError("cannot read " + meta_path.string());
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(meta_path.string() + ": " + e.what());
        }
        const auto& sj = meta.at("schedule");
        VarNet m(VarnetConfig::from_json(meta.at("config")), 0,
                 DiffusionSchedule(sj.at("beta_min").get<double>(), sj.at("beta_max").get<double>()));
        nn::load_checkpoint(m.ps_, dir / "varnet.ckpt.json");
        return m;
    }

private:
    VarnetConfig cfg_;
    DiffusionSchedule sched_;
    nn::ParamSet ps_;
    nn::Linear in_p_, in_z_;
    nn::Embedding seg_;
    nn::FeedForward time_;
    nn::TransformerEncoder enc_;
    nn::Linear out_;
    nn::Linear gate_;
};

using Predictor = std::function<nn::Tensor2(const nn::Tensor2& P, const nn::Tensor2& zt, double t)>;

// L1 denoising objective with t ~ U(t_eps, 1), for any ẑ0 predictor.
inline double diffusion_loss(const Predictor& f, const nn::Tensor2& z0, const nn::Tensor2& P, const DiffusionSchedule& s,
                             nn::Rng& rng, double t_eps = 1e-4) {
    const double t = rng.uniform(t_eps, 1.0);
    const auto d = forward_diffuse(z0, t, s, rng);
    return nn::l1_loss(f(P, d.zt, t), z0).loss;
}

inline double diffusion_loss(VarNet& m, const nn::Tensor2& z0, const nn::Tensor2& P, nn::Rng& rng, bool backprop) {
    const double t = rng.uniform(m.config().t_eps, 1.0);
    const auto d = forward_diffuse(z0, t, m.schedule(), rng);
    VarNet::Cache c;
    const auto l = nn::l1_loss(m.predict_z0(P, d.zt, t, backprop ? &c : nullptr), z0);
    if (backprop) m.backward(c, l.grad);
    return l.loss;
}

struct VarnetExample {
    nn::Tensor2 P;   // M × d prompt representation
    nn::Tensor2 z0;  // N × d reference representation
};

struct VarnetTrainConfig {
    std::size_t epochs = 30;
    std::size_t batch = 8;
    double lr = 2e-3;
    double final_lr_scale = 0.05;  // lr decays linearly to lr * final_lr_scale
    double clip = 5.0;
    std::uint64_t seed = 42;
};

struct VarnetTrainReport {
    std::vector<double> epoch_losses;
};

inline VarnetTrainReport train_varnet(VarNet& m, const std::vector<VarnetExample>& data, const VarnetTrainConfig& cfg) {
    if (data.empty()) throw DataError("train_varnet: empty dataset");
    VarnetTrainReport report;
    nn::Rng rng(cfg.seed);
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    nn::AdamConfig adam{cfg.lr};
    m.params().zero_grad();
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double frac = cfg.epochs > 1 ? static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1) : 0.0;
        adam.lr = cfg.lr * (1.0 - frac * (1.0 - cfg.final_lr_scale));
        rng.shuffle(order);
        double sum = 0.0;
        for (std::size_t b = 0; b < order.size(); b += cfg.batch) {
            const std::size_t e = std::min(order.size(), b + cfg.batch);
            for (std::size_t i = b; i < e; ++i) {
                const double l = diffusion_loss(m, data[order[i]].z0, data[order[i]].P, rng, true);
                if (!std::isfinite(l))
                    throw NumericalError("train_varnet: non-finite loss at epoch " + std::to_string(epoch) + ", example " +
                                         std::to_string(order[i]));
                sum += l;
            }
            m.params().scale_grads(1.0 / static_cast<double>(e - b));
            nn::clip_grad_norm(m.params(), cfg.clip);
            nn::adam_step(m.params(), adam);
        }
        report.epoch_losses.push_back(sum / static_cast<double>(data.size()));
        log::debug("varnet", "epoch " + std::to_string(epoch + 1) + " loss " + std::to_string(report.epoch_losses.back()));
    }
    return report;
}

}  // namespace promptvar::varnet

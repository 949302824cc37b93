#pragma once

#include <optional>
#include <string>
#include <vector>

#include "promptvar/nn/attention.hpp"
#include "promptvar/nn/film.hpp"
#include "promptvar/nn/layers.hpp"

namespace promptvar::nn {

struct EncoderConfig {
    std::size_t d = 32;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t ff_mult = 4;
    // Width of the FiLM conditioning row; 0 disables FiLM.
    std::size_t d_cond = 0;
};

// Pre-norm block: x + Attn(LN(x)), then + FF(LN(·)), then FiLM on the block
// output when a conditioning row is given.
class TransformerLayer {
public:
    struct Cache {
        LayerNorm::Cache ln1;
        MultiHeadAttention::Cache attn;
        LayerNorm::Cache ln2;
        FeedForward::Cache ff;
        Film::Cache film;
        bool used_film = false;
    };

    TransformerLayer() = default;
    TransformerLayer(ParamSet& ps, const std::string& name, const EncoderConfig& cfg, Rng& rng)
        : ln1_(ps, name + ".ln1", cfg.d),
          attn_(ps, name + ".attn", cfg.d, cfg.heads, rng),
          ln2_(ps, name + ".ln2", cfg.d),
          ff_(ps, name + ".ff", cfg.d, cfg.d * cfg.ff_mult, rng) {
        if (cfg.d_cond > 0) film_.emplace(ps, name + ".film", cfg.d, cfg.d_cond);
    }

    bool has_film() const { return film_.has_value(); }
    Film* film() { return film_ ? &*film_ : nullptr; }

    Tensor2 forward(const Tensor2& x, const Tensor2* cond, Cache* c) const {
        Cache local;
        Cache& k = c ? *c : local;
        const Tensor2 n1 = ln1_.forward(x, &k.ln1);
        Tensor2 a = x + attn_.forward(n1, n1, &k.attn);
        const Tensor2 n2 = ln2_.forward(a, &k.ln2);
        Tensor2 b = a + ff_.forward(n2, &k.ff);
        k.used_film = film_.has_value() && cond != nullptr;
        if (k.used_film) return film_->forward(b, *cond, &k.film);
        return b;
    }

    // Returns dx; adds the conditioning gradient into *dcond when FiLM ran.
    Tensor2 backward(const Cache& c, const Tensor2& dy, Tensor2* dcond) {
        Tensor2 db = dy;
        if (c.used_film) {
            auto g = film_->backward(c.film, dy);
            db = std::move(g.dh);
            if (dcond != nullptr) *dcond += g.dcond;
        }
        Tensor2 da = db + ln2_.backward(c.ln2, ff_.backward(c.ff, db));
        auto ag = attn_.backward(c.attn, da);
        ag.dq_in += ag.dkv_in;
        return da + ln1_.backward(c.ln1, ag.dq_in);
    }

private:
    LayerNorm ln1_;
    MultiHeadAttention attn_;
    LayerNorm ln2_;
    FeedForward ff_;
    std::optional<Film> film_;
};

// Stack of TransformerLayer. No positional information is added here, so
// without a caller-supplied encoding the stack is permutation-equivariant.
class TransformerEncoder {
public:
    struct Cache {
        std::vector<TransformerLayer::Cache> layers;
    };

    TransformerEncoder() = default;
    TransformerEncoder(ParamSet& ps, const std::string& name, const EncoderConfig& cfg, Rng& rng) : cfg_(cfg) {
        layers_.reserve(cfg.layers);
        for (std::size_t i = 0; i < cfg.layers; ++i)
            layers_.emplace_back(ps, name + ".layer" + std::to_string(i), cfg, rng);
    }

    const EncoderConfig& config() const { return cfg_; }
    std::size_t depth() const { return layers_.size(); }
    TransformerLayer& layer(std::size_t i) { return layers_.at(i); }

    Tensor2 forward(const Tensor2& x, const Tensor2* cond = nullptr, Cache* cache = nullptr) const {
        if (x.rows() == 0) throw DimensionError("transformer: empty input sequence");
        if (cache != nullptr) cache->layers.assign(layers_.size(), {});
        Tensor2 h = x;
        for (std::size_t i = 0; i < layers_.size(); ++i)
            h = layers_[i].forward(h, cond, cache ? &cache->layers[i] : nullptr);
        return h;
    }

    Tensor2 backward(const Cache& c, const Tensor2& dy, Tensor2* dcond = nullptr) {
        Tensor2 g = dy;
        for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i].backward(c.layers[i], g, dcond);
        return g;
    }

private:
    EncoderConfig cfg_;
    std::vector<TransformerLayer> layers_;
};

}  // namespace promptvar::nn

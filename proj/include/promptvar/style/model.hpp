#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/audio/features.hpp"
#include "promptvar/errors.hpp"
#include "promptvar/nn/attention.hpp"
#include "promptvar/nn/checkpoint.hpp"
#include "promptvar/nn/layers.hpp"
#include "promptvar/nn/param.hpp"
#include "promptvar/nn/transformer.hpp"
#include "promptvar/slu/schema.hpp"
#include "promptvar/style/vocab.hpp"

namespace promptvar::style {

struct StyleConfig {
    std::size_t d = 32;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t ff_mult = 4;
    std::size_t prompt_queries = 8;     // M
    std::size_t reference_queries = 8;  // N
    std::size_t ref_stride = 4;         // frames averaged into one reference row

    nlohmann::json to_json() const {
        return {{"d", d}, {"layers", layers}, {"heads", heads}, {"ff_mult", ff_mult}, {"prompt_queries", prompt_queries},
                {"reference_queries", reference_queries}, {"ref_stride", ref_stride}};
    }
    static StyleConfig from_json(const nlohmann::json& j) {
        StyleConfig c;
        c.d = j.at("d");
        c.layers = j.at("layers");
        c.heads = j.at("heads");
        c.ff_mult = j.at("ff_mult");
        c.prompt_queries = j.at("prompt_queries");
        c.reference_queries = j.at("reference_queries");
        c.ref_stride = j.at("ref_stride");
        return c;
    }
};

inline constexpr std::size_t kReferenceFeatures = 5;

// Per-frame rows [f0/300, voiced, (dB+60)/60, centroid/4 kHz, zcr/4 kHz],
// averaged over groups of `stride` frames.
inline nn::Tensor2 reference_input(const audio::FrameFeatures& f, std::size_t stride = 4) {
    if (f.size() == 0) throw DataError("reference encoder: utterance has no frames");
    stride = std::max<std::size_t>(stride, 1);
    const std::size_t rows = (f.size() + stride - 1) / stride;
    nn::Tensor2 x(rows, kReferenceFeatures);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t b = r * stride, e = std::min(f.size(), b + stride);
        for (std::size_t i = b; i < e; ++i) {
            const auto& fr = f.frames[i];
            x(r, 0) += fr.f0 / 300.0;
            x(r, 1) += fr.f0 > 0 ? 1.0 : 0.0;
            x(r, 2) += (fr.log_energy + 60.0) / 60.0;
            x(r, 3) += fr.spectral_centroid / 4000.0;
            x(r, 4) += fr.zero_crossing_rate / 4000.0;
        }
        for (std::size_t c = 0; c < kReferenceFeatures; ++c) x(r, c) /= static_cast<double>(e - b);
    }
    return x;
}

// Continuous targets of the reference regression head.
inline constexpr std::array<const char*, 3> kRegressionTargets{"f0_mean", "rms_mean", "rate"};

struct TargetStats {
    std::array<double, 3> mean{0, 0, 0};
    std::array<double, 3> stddev{1, 1, 1};

    nlohmann::json to_json() const { return {{"mean", mean}, {"std", stddev}}; }
    static TargetStats from_json(const nlohmann::json& j) {
        return {j.at("mean").get<std::array<double, 3>>(), j.at("std").get<std::array<double, 3>>()};
    }
};

struct PromptEncoding {
    nn::Tensor2 hidden;  // tokens × d
    nn::Tensor2 repr;    // M × d
};

// Prompt encoder and reference encoder, each pooled by learnable queries,
// plus the proxy-task heads used to train them.
class StyleModel {
public:
    struct PromptCache {
        std::vector<std::size_t> ids;
        nn::TransformerEncoder::Cache enc;
        nn::AttentionPool::Cache pool;
    };
    struct ReferenceCache {
        nn::Tensor2 input;
        nn::TransformerEncoder::Cache enc;
        nn::AttentionPool::Cache pool;
    };

    static constexpr const char* kUnspecified = "unspecified";

    StyleModel(const StyleConfig& cfg, const slu::AttributeSchema& schema, Vocab vocab, std::uint64_t seed)
        : cfg_(cfg), schema_(schema), vocab_(std::move(vocab)) {
        if (cfg.d % cfg.heads != 0) throw ConfigError("style: d must be divisible by heads");
        if (cfg.prompt_queries == 0 || cfg.reference_queries == 0) throw ConfigError("style: query counts must be positive");
        nn::Rng rng(seed);
        const nn::EncoderConfig enc{cfg.d, cfg.layers, cfg.heads, cfg.ff_mult, 0};
        tok_ = nn::Embedding(ps_, "prompt.embed", vocab_.size(), cfg.d, rng);
        prompt_enc_ = nn::TransformerEncoder(ps_, "prompt.enc", enc, rng);
        prompt_pool_ = nn::AttentionPool(ps_, "prompt.pool", cfg.prompt_queries, cfg.d, cfg.heads, rng);
        ref_in_ = nn::Linear(ps_, "ref.in", kReferenceFeatures, cfg.d, rng);
        ref_enc_ = nn::TransformerEncoder(ps_, "ref.enc", enc, rng);
        ref_pool_ = nn::AttentionPool(ps_, "ref.pool", cfg.reference_queries, cfg.d, cfg.heads, rng);
        for (const auto& a : schema_.attributes()) {
            prompt_heads_.emplace_back(ps_, "head.prompt." + a.name, cfg.d, a.classes.size() + 1, rng);
            ref_heads_.emplace_back(ps_, "head.ref." + a.name, cfg.d, a.classes.size(), rng);
        }
        ref_reg_ = nn::Linear(ps_, "head.ref.regress", cfg.d, kRegressionTargets.size(), rng);
    }

    const StyleConfig& config() const { return cfg_; }
    const slu::AttributeSchema& schema() const { return schema_; }
    const Vocab& vocab() const { return vocab_; }
    nn::ParamSet& params() { return ps_; }
    const nn::ParamSet& params() const { return ps_; }
    const TargetStats& target_stats() const { return stats_; }
    void set_target_stats(const TargetStats& s) { stats_ = s; }

    PromptEncoding encode_prompt(const std::string& text) const { return encode_prompt_ids(vocab_.encode(text), nullptr); }

    PromptEncoding encode_prompt_ids(const std::vector<std::size_t>& ids, PromptCache* c) const {
        if (ids.empty()) throw DataError("prompt encoder: prompt has no tokens");
        nn::Tensor2 x = tok_.forward(ids);
        x += nn::sinusoidal_positions(ids.size(), cfg_.d);
        PromptEncoding out;
        out.hidden = prompt_enc_.forward(x, nullptr, c ? &c->enc : nullptr);
        out.repr = prompt_pool_.forward(out.hidden, c ? &c->pool : nullptr);
        if (c) c->ids = ids;
        return out;
    }

    void backward_prompt(const PromptCache& c, const nn::Tensor2& drepr) {
        const nn::Tensor2 dh = prompt_pool_.backward(c.pool, drepr);
        tok_.backward(c.ids, prompt_enc_.backward(c.enc, dh));
    }

    nn::Tensor2 encode_reference(const audio::FrameFeatures& f) const {
        return encode_reference_input(reference_input(f, cfg_.ref_stride), nullptr);
    }

    nn::Tensor2 encode_reference_input(const nn::Tensor2& input, ReferenceCache* c) const {
        if (input.rows() == 0) throw DataError("reference encoder: utterance has no frames");
        nn::Tensor2 x = ref_in_.forward(input);
        x += nn::sinusoidal_positions(input.rows(), cfg_.d);
        const nn::Tensor2 h = ref_enc_.forward(x, nullptr, c ? &c->enc : nullptr);
        if (c) c->input = input;
        return ref_pool_.forward(h, c ? &c->pool : nullptr);
    }

    void backward_reference(const ReferenceCache& c, const nn::Tensor2& drepr) {
        const nn::Tensor2 dh = ref_pool_.backward(c.pool, drepr);
        ref_in_.backward(c.input, ref_enc_.backward(c.enc, dh));
    }

    nn::Linear& prompt_head(std::size_t attr) { return prompt_heads_.at(attr); }
    nn::Linear& reference_head(std::size_t attr) { return ref_heads_.at(attr); }
    nn::Linear& regression_head() { return ref_reg_; }
    const nn::Linear& prompt_head(std::size_t attr) const { return prompt_heads_.at(attr); }
    const nn::Linear& reference_head(std::size_t attr) const { return ref_heads_.at(attr); }
    const nn::Linear& regression_head() const { return ref_reg_; }

    // Intent read off the prompt heads: class name or "unspecified".
    slu::Labels predict_intent(const std::string& text) const {
        const nn::Tensor2 pooled = nn::mean_rows(encode_prompt(text).repr);
        slu::Labels out;
        for (std::size_t a = 0; a < schema_.size(); ++a) {
            const nn::Tensor2 logits = prompt_heads_[a].forward(pooled);
            std::size_t best = 0;
            for (std::size_t k = 1; k < logits.cols(); ++k)
                if (logits(0, k) > logits(0, best)) best = k;
            const auto& classes = schema_.at(a).classes;
            out[schema_.at(a).name] = best < classes.size() ? classes[best] : kUnspecified;
        }
        return out;
    }

    void save(const std::filesystem::path& dir) const {
        std::filesystem::create_directories(dir);
        nn::save_checkpoint(ps_, dir / "style.ckpt.json");
        nlohmann::json meta{{"config", cfg_.to_json()}, {"schema", schema_.to_json()}, {"vocab", vocab_.to_json()},
                            {"target_stats", stats_.to_json()}};
        std::ofstream(dir / "style.meta.json") << meta.dump(1) << '\n';
    }

    static StyleModel load(const std::filesystem::path& dir) {
        const auto meta_path = dir / "style.meta.json";
        std::ifstream in(meta_path);
        if (!in) throw IoError("cannot read " + meta_path.string());
        nlohmann::json meta;
        try {
            meta = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(meta_path.string() + ": " + e.what());
        }
        StyleModel m(StyleConfig::from_json(meta.at("config")), slu::AttributeSchema::from_json(meta.at("schema")),
                     Vocab::from_json(meta.at("vocab")), 0);
        m.stats_ = TargetStats::from_json(meta.at("target_stats"));
        nn::load_checkpoint(m.ps_, dir / "style.ckpt.json");
        return m;
    }

private:
    StyleConfig cfg_;
    slu::AttributeSchema schema_;
    Vocab vocab_;
    TargetStats stats_;
    nn::ParamSet ps_;
    nn::Embedding tok_;
    nn::TransformerEncoder prompt_enc_;
    nn::AttentionPool prompt_pool_;
    nn::Linear ref_in_;
    nn::TransformerEncoder ref_enc_;
    nn::AttentionPool ref_pool_;
    std::vector<nn::Linear> prompt_heads_;
    std::vector<nn::Linear> ref_heads_;
    nn::Linear ref_reg_;
};

}  // namespace promptvar::style

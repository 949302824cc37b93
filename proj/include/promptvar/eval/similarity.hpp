#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/nn/tensor.hpp"
#include "promptvar/promptgen/dataset.hpp"
#include "promptvar/style/model.hpp"
#include "promptvar/varnet/sampler.hpp"

namespace promptvar::eval {

// (cos + 1) / 2 of the flattened, mean-centered inputs.
inline double similarity(const nn::Tensor2& a, const nn::Tensor2& b) {
    if (a.size() != b.size())
        throw DimensionError("similarity: sizes differ (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    const double ma = nn::sum(a) / static_cast<double>(a.size());
    const double mb = nn::sum(b) / static_cast<double>(b.size());
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double x = a[i] - ma, y = b[i] - mb;
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if (na == 0.0 || nb == 0.0) throw DataError("similarity: undefined for a zero (or constant) vector");
    return std::clamp((dot / std::sqrt(na * nb) + 1.0) / 2.0, 0.0, 1.0);
}

// Mean similarity over all unordered pairs.
inline double mean_pairwise_similarity(const std::vector<nn::Tensor2>& xs) {
    if (xs.size() < 2) throw DataError("mean_pairwise_similarity: need at least 2 samples");
    double s = 0.0;
    std::size_t n = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j, ++n) s += similarity(xs[i], xs[j]);
    return s / static_cast<double>(n);
}

inline constexpr std::array<const char*, 4> kAspects{"text_prompt", "text_content", "backbone_sampling",
                                                     "variation_network"};

struct SimilarityReport {
    std::map<std::string, double> mean;  // aspect → mean over prompts
    std::size_t prompts = 0;
    std::size_t k = 0;

    nlohmann::json to_json() const { return {{"aspects", mean}, {"prompts", prompts}, {"k", k}}; }

    std::string to_table() const {
        std::string out = "Aspect               Similarity\n";
        char line[64];
        for (const char* a : kAspects) {
            std::snprintf(line, sizeof line, "%-20s %10.3f\n", a, mean.at(a));
            out += line;
        }
        return out;
    }
};

// k prompts with the intent of `rec`: one per distinct candidate template
// (same attribute subset, same classes), each with freshly drawn keywords.
// Templates are reused with new keywords when there are fewer than k.
inline std::vector<std::string> paraphrases(const promptgen::PromptRecord& rec, const promptgen::KeywordBank& bank,
                                            const promptgen::TemplateIndex& index, std::size_t k, nn::Rng& rng) {
    auto pool = index.candidates(rec.attributes, rec.profile.labels);
    if (pool.empty()) throw DataError("paraphrases: no template matches the intent of " + rec.audio);
    rng.shuffle(pool);
    std::vector<std::string> out;
    std::set<std::string> seen;
    for (std::size_t attempt = 0; out.size() < k && attempt < 50 * k; ++attempt) {
        const auto& t = *pool[attempt % pool.size()];
        std::map<std::string, std::string> kw;
        for (const auto& attr : t.placeholders) {
            const auto& words = bank.get(attr, rec.profile.labels.at(attr));
            kw[attr] = words[rng.below(words.size())];
        }
        std::string p = t.has_placeholders() ? promptgen::substitute(t, kw) : t.text;
        if (seen.insert(p).second) out.push_back(std::move(p));
    }
    if (out.size() < k)
        throw DataError("paraphrases: only " + std::to_string(out.size()) + " distinct prompts for " + rec.audio);
    return out;
}

// Varies one aspect at a time and compares the resulting style vectors in
// reference space, i.e. their last N rows (the sampled ẑ_ref). Each test case
// is a list of k paraphrases; the first is the fixed prompt.
// Text content and backbone noise never reach the conditioning here, so the
// k outputs for those two aspects come from one sample with one seed.
inline SimilarityReport aspect_similarity(const style::StyleModel& sm, const varnet::VarNet& vn,
                                          const std::vector<std::vector<std::string>>& cases, std::size_t steps,
                                          std::uint64_t seed) {
    if (cases.empty()) throw DataError("aspect_similarity: no test prompts");
    const std::size_t k = cases.front().size();
    if (k < 2) throw ConfigError("aspect_similarity: k must be >= 2");
    const std::size_t n_ref = vn.config().reference_rows;
    auto run = [&](const std::string& prompt, std::uint64_t s) {
        const nn::Tensor2 P = sm.encode_prompt(prompt).repr;
        nn::Rng rng(s);
        const nn::Tensor2 sv = varnet::style_vector(P, varnet::ode_sample(vn, P, steps, rng));
        return nn::slice_rows(sv, sv.rows() - n_ref, sv.rows());
    };
    SimilarityReport rep;
    rep.prompts = cases.size();
    rep.k = k;
    for (const char* a : kAspects) rep.mean[a] = 0.0;
    nn::Rng seeds(seed);
    for (const auto& c : cases) {
        if (c.size() != k) throw DataError("aspect_similarity: every test case needs k prompts");
        const std::uint64_t base = seeds.next_u64();
        std::vector<nn::Tensor2> by_prompt, by_seed;
        for (const auto& p : c) by_prompt.push_back(run(p, base));
        by_seed.push_back(by_prompt.front());
        for (std::size_t i = 1; i < k; ++i) by_seed.push_back(run(c.front(), seeds.next_u64()));
        const std::vector<nn::Tensor2> fixed(k, by_prompt.front());
        rep.mean["text_prompt"] += mean_pairwise_similarity(by_prompt);
        rep.mean["text_content"] += mean_pairwise_similarity(fixed);
        rep.mean["backbone_sampling"] += mean_pairwise_similarity(fixed);
        rep.mean["variation_network"] += mean_pairwise_similarity(by_seed);
    }
    for (auto& [a, v] : rep.mean) v /= static_cast<double>(cases.size());
    return rep;
}

}  // namespace promptvar::eval

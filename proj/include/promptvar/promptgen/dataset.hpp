#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/promptgen/keywords.hpp"
#include "promptvar/promptgen/stages.hpp"
#include "promptvar/promptgen/template.hpp"
#include "promptvar/slu/schema.hpp"
#include "promptvar/slu/tagger.hpp"

namespace promptvar::promptgen {

struct TaggedUtterance {
    std::string audio;
    slu::AttributeProfile profile;
};

struct PromptRecord {
    std::string audio;
    slu::AttributeProfile profile;
    std::string template_id;
    std::vector<std::string> attributes;  // attributes the prompt describes, schema order
    std::map<std::string, std::string> keywords;
    std::string prompt;

    nlohmann::json to_json() const {
        nlohmann::json j{{"audio", audio},
                         {"labels", profile.labels},
                         {"measurements", profile.measurements.to_json()},
                         {"prompt", prompt},
                         {"template_id", template_id},
                         {"keywords", keywords},
                         {"attributes", attributes}};
        if (profile.silent) j["silent"] = true;
        return j;
    }

    static PromptRecord from_json(const nlohmann::json& j) {
        PromptRecord r;
        r.audio = j.at("audio").get<std::string>();
        r.profile = slu::profile_from_json(j);
        r.prompt = j.at("prompt").get<std::string>();
        r.template_id = j.at("template_id").get<std::string>();
        r.keywords = j.at("keywords").get<std::map<std::string, std::string>>();
        r.attributes = j.at("attributes").get<std::vector<std::string>>();
        return r;
    }
};

inline std::string to_jsonl(const std::vector<PromptRecord>& rows) {
    std::string s;
    for (const auto& r : rows) s += r.to_json().dump() + "\n";
    return s;
}

inline std::vector<PromptRecord> from_jsonl(const std::string& text) {
    std::vector<PromptRecord> out;
    std::istringstream in(text);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (trim(line).empty()) continue;
        try {
            out.push_back(PromptRecord::from_json(nlohmann::json::parse(line)));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("dataset line " + std::to_string(n) + ": " + e.what());
        }
    }
    return out;
}

// Templates grouped by the attribute set they describe and, for templates
// without placeholders, the classes they were written for.
class TemplateIndex {
public:
    TemplateIndex(const std::vector<Template>& templates, const slu::AttributeSchema& schema) : schema_(schema) {
        for (const auto& t : templates) {
            if (t.has_placeholders())
                open_[subset_key(t.attributes, schema)].push_back(&t);
            else
                fixed_[class_key(sorted(t.attributes), t.fixed_classes)].push_back(&t);
        }
    }

    std::vector<const Template*> candidates(const std::vector<std::string>& attrs, const slu::Labels& labels) const {
        std::vector<const Template*> out;
        if (auto it = open_.find(subset_key(attrs, schema_)); it != open_.end()) out = it->second;
        if (auto it = fixed_.find(class_key(sorted(attrs), labels)); it != fixed_.end())
            out.insert(out.end(), it->second.begin(), it->second.end());
        return out;
    }

private:
    std::vector<std::string> sorted(std::vector<std::string> a) const {
        std::sort(a.begin(), a.end(), [&](const auto& x, const auto& y) { return *schema_.index_of(x) < *schema_.index_of(y); });
        return a;
    }

    const slu::AttributeSchema& schema_;
    std::map<std::string, std::vector<const Template*>> open_, fixed_;
};

struct InstantiateOptions {
    int per_utterance = 1;
    double full_set_prob = 0.5;
    int max_resamples = 10;
};

inline std::vector<std::string> sample_subset(const slu::AttributeSchema& schema, double full_set_prob, nn::Rng& rng) {
    const std::size_t k = schema.size();
    std::uint64_t mask = (1ULL << k) - 1;
    if (rng.uniform() >= full_set_prob) mask = 1 + rng.below(mask);
    std::vector<std::string> s;
    for (std::size_t i = 0; i < k; ++i)
        if (mask & (1ULL << i)) s.push_back(schema.at(i).name);
    return s;
}

// Stage 4.
inline std::vector<PromptRecord> instantiate(const std::vector<TaggedUtterance>& records, const KeywordBank& bank,
                                             const std::vector<Template>& templates, const slu::AttributeSchema& schema,
                                             nn::Rng& rng, const InstantiateOptions& opt = {}) {
    const TemplateIndex index(templates, schema);
    std::vector<PromptRecord> out;
    for (const auto& rec : records) {
        for (int r = 0; r < opt.per_utterance; ++r) {
            std::vector<std::string> subset;
            std::vector<const Template*> pool;
            for (int attempt = 0; attempt <= opt.max_resamples && pool.empty(); ++attempt) {
                subset = sample_subset(schema, opt.full_set_prob, rng);
                pool = index.candidates(subset, rec.profile.labels);
            }
            if (pool.empty())
                throw DataError("no template for attribute subsets sampled for " + rec.audio + " after " +
                                std::to_string(opt.max_resamples) + " resamples");
            const Template& t = *pool[rng.below(pool.size())];
            PromptRecord p{rec.audio, rec.profile, t.id, subset, {}, {}};
            for (const auto& attr : t.placeholders) {
                const auto& words = bank.get(attr, rec.profile.labels.at(attr));
                p.keywords[attr] = words[rng.below(words.size())];
            }
            p.prompt = t.has_placeholders() ? substitute(t, p.keywords) : t.text;
            out.push_back(std::move(p));
        }
    }
    return out;
}

// Recovers the class of every placeholder in `t` from a prompt instantiated
// from it. Keywords are tried against the literal text between placeholders;
// std::nullopt when no assignment reproduces the prompt.
inline std::optional<slu::Labels> invert_prompt(const std::string& prompt, const Template& t, const KeywordBank& bank) {
    std::vector<std::string> literals{""};
    std::vector<std::string> slots;
    for (std::size_t i = 0; i < t.text.size();) {
        if (t.text[i] == '[') {
            const auto close = t.text.find(']', i);
            slots.push_back(slu::lowercase(t.text.substr(i + 1, close - i - 1)));
            literals.emplace_back();
            i = close + 1;
        } else {
            literals.back().push_back(t.text[i++]);
        }
    }
    slu::Labels found;
    auto match = [&](auto&& self, std::size_t slot, std::size_t pos) -> bool {
        if (slot == slots.size()) return prompt.compare(pos, std::string::npos, literals[slot]) == 0;
        const auto attr_it = bank.data().find(slots[slot]);
        if (attr_it == bank.data().end()) return false;
        for (const auto& [cls, words] : attr_it->second) {
            for (const auto& w : words) {
                std::string piece = prompt.substr(0, pos) + literals[slot];
                detail::fix_article(piece, w);
                piece += w;
                if (prompt.compare(0, piece.size(), piece) != 0) continue;
                found[slots[slot]] = cls;
                if (self(self, slot + 1, piece.size())) return true;
            }
        }
        found.erase(slots[slot]);
        return false;
    };
    if (!match(match, 0, 0)) return std::nullopt;
    return found;
}

// Holds out `per_group` templates from every group of interchangeable
// templates (same attribute set, same fixed classes) that has more than one.
inline std::pair<std::vector<Template>, std::vector<Template>> split_templates(const std::vector<Template>& templates,
                                                                                std::size_t per_group, nn::Rng& rng) {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < templates.size(); ++i) {
        std::string key;
        for (const auto& a : templates[i].attributes) key += a + "=" + (templates[i].fixed_classes.count(a) ? templates[i].fixed_classes.at(a) : "*") + ";";
        groups[key].push_back(i);
    }
    std::vector<bool> held(templates.size(), false);
    for (auto& [key, idx] : groups) {
        if (idx.size() < 2) continue;
        rng.shuffle(idx);
        for (std::size_t j = 0; j < std::min(per_group, idx.size() - 1); ++j) held[idx[j]] = true;
    }
    std::pair<std::vector<Template>, std::vector<Template>> out;
    for (std::size_t i = 0; i < templates.size(); ++i) (held[i] ? out.second : out.first).push_back(templates[i]);
    return out;
}

struct DatasetStats {
    std::size_t prompts = 0;
    std::size_t distinct_prompts = 0;
    std::size_t templates_used = 0;
    double reuse_factor = 0.0;  // prompts per distinct template used

    nlohmann::json to_json() const {
        return {{"prompts", prompts}, {"distinct_prompts", distinct_prompts}, {"templates_used", templates_used},
                {"reuse_factor", reuse_factor}};
    }
};

inline DatasetStats dataset_stats(const std::vector<PromptRecord>& rows) {
    std::set<std::string> prompts, ids;
    for (const auto& r : rows) {
        prompts.insert(r.prompt);
        ids.insert(r.template_id);
    }
    DatasetStats s{rows.size(), prompts.size(), ids.size(), 0.0};
    if (!ids.empty()) s.reuse_factor = static_cast<double>(rows.size()) / static_cast<double>(ids.size());
    return s;
}

inline nlohmann::json templates_to_json(const std::vector<Template>& ts) {
    nlohmann::json j = nlohmann::json::array();
    for (const auto& t : ts) j.push_back(t.to_json());
    return j;
}

inline std::vector<Template> templates_from_json(const nlohmann::json& j) {
    std::vector<Template> out;
    for (const auto& t : j) out.push_back(Template::from_json(t));
    return out;
}

}  // namespace promptvar::promptgen

#pragma once

#include <algorithm>
#include <cstdio>
#include <set>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/log.hpp"
#include "promptvar/nn/rng.hpp"
#include "promptvar/promptgen/keywords.hpp"
#include "promptvar/promptgen/llm_client.hpp"
#include "promptvar/promptgen/template.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::promptgen {

struct StageOptions {
    int n_keywords = 5;
    int n_templates = 5;
    int n_combined = 5;
    bool sentences = true;  // request sentence combinations in stage 3
    bool phrases = true;    // request phrase combinations in stage 3
    int workers = 1;        // concurrent LLM requests

    std::vector<TemplateKind> kinds() const {
        std::vector<TemplateKind> k;
        if (sentences) k.push_back(TemplateKind::sentence);
        if (phrases) k.push_back(TemplateKind::phrase);
        if (k.empty()) throw ConfigError("stage 3 needs at least one of sentences or phrases");
        return k;
    }
};

inline std::string numbered_id(const std::string& prefix, std::size_t i) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "%02zu", i + 1);
    return prefix + "-" + buf;
}

// Subsets of schema attributes with at least `min_size` members, in a fixed
// order: by size, then lexicographic over schema positions.
inline std::vector<std::vector<std::string>> attribute_subsets(const slu::AttributeSchema& schema, std::size_t min_size = 1) {
    const std::size_t k = schema.size();
    std::vector<std::vector<std::string>> out;
    for (std::size_t size = min_size; size <= k; ++size) {
        for (unsigned mask = 1; mask < (1u << k); ++mask) {
            if (static_cast<std::size_t>(__builtin_popcount(mask)) != size) continue;
            std::vector<std::string> s;
            for (std::size_t i = 0; i < k; ++i)
                if (mask & (1u << i)) s.push_back(schema.at(i).name);
            out.push_back(std::move(s));
        }
    }
    return out;
}

// Stage 1. One query per (attribute, class). A response without numbered
// items is retried once; a class that still yields nothing is reported as
// failed and ends the run once all queries are in.
inline KeywordBank stage1_keywords(LlmClient& client, const slu::AttributeSchema& schema, const StageOptions& opt = {},
                                   const Queries& q = {}) {
    std::vector<LlmRequest> reqs;
    for (const auto& attr : schema.attributes())
        for (const auto& cls : attr.classes)
            reqs.push_back({"stage1", attr.name + "_" + cls,
                            Queries::render(q.stage1, {{"n", std::to_string(opt.n_keywords)}, {"class", cls}, {"attribute", attr.name}})});
    const auto responses = complete_all(client, reqs, opt.workers);

    auto keywords = [](const std::string& text) {
        ParsedList l = parse_list(text);
        return l.marked ? l.items : std::vector<std::string>{};
    };
    KeywordBank bank;
    std::vector<std::string> failed;
    std::size_t r = 0;
    for (const auto& attr : schema.attributes()) {
        for (const auto& cls : attr.classes) {
            auto items = keywords(responses[r]);
            if (items.empty()) {
                log::warn("promptgen", "stage1 " + reqs[r].key + ": unparseable response, retrying");
                items = keywords(client.complete(reqs[r]));
            }
            if (items.empty()) {
                log::error("promptgen", "stage1 " + reqs[r].key + ": no keywords after retry");
                failed.push_back(reqs[r].key);
            }
            bank.set(attr.name, cls, items);
            ++r;
        }
    }
    if (!failed.empty()) {
        std::string s;
        for (const auto& f : failed) s += (s.empty() ? "" : ", ") + f;
        throw DataError("stage1 produced no keywords for: " + s);
    }
    bank.finalize(schema);
    return bank;
}

// Stage 2. Single-attribute templates written around "[placeholder]".
inline std::vector<Template> stage2_sentences(LlmClient& client, const slu::AttributeSchema& schema,
                                              const StageOptions& opt = {}, const Queries& q = {}) {
    std::vector<LlmRequest> reqs;
    for (const auto& attr : schema.attributes())
        reqs.push_back({"stage2", attr.name,
                        Queries::render(q.stage2, {{"n", std::to_string(opt.n_templates)}, {"attribute", attr.name}})});
    const auto responses = complete_all(client, reqs, opt.workers);

    std::vector<Template> out;
    for (std::size_t a = 0; a < schema.size(); ++a) {
        const std::string& attr = schema.at(a).name;
        std::size_t kept = 0;
        for (const auto& item : parse_list_response(responses[a])) {
            try {
                Template t = parse_template(item, schema, attr);
                if (t.placeholders != std::vector<std::string>{attr})
                    throw ValidationError("expected exactly one [" + display_name(attr) + "] placeholder");
                t.id = numbered_id("s2-" + attr, kept++);
                out.push_back(std::move(t));
            } catch (const Error& e) {
                log::warn("promptgen", "stage2 " + attr + ": discarded \"" + item + "\": " + e.what());
            }
        }
        if (kept == 0) throw DataError("stage2 produced no valid template for attribute '" + attr + "'");
    }
    return out;
}

inline std::string join_sentences(const std::vector<Template>& inputs) {
    std::string s;
    for (const auto& t : inputs) s += (s.empty() ? "" : " ") + t.text;
    return s;
}

// Mechanical combination used when no LLM candidate survives validation.
inline std::string mechanical_join(const std::vector<Template>& inputs) {
    std::string s;
    for (const auto& t : inputs) {
        std::string part = t.text;
        while (!part.empty() && (part.back() == '.' || part.back() == ' ')) part.pop_back();
        s += (s.empty() ? "" : "; ") + part;
    }
    return s + ".";
}

// Stage 3. Combines one single-attribute template per attribute of a subset.
inline std::vector<Template> stage3_combine(LlmClient& client, const slu::AttributeSchema& schema,
                                            const std::vector<Template>& inputs, const StageOptions& opt = {},
                                            const Queries& q = {}) {
    std::vector<std::string> attrs;
    for (const auto& t : inputs) {
        for (const auto& a : t.placeholders) {
            if (std::find(attrs.begin(), attrs.end(), a) != attrs.end())
                throw ValidationError("stage3 inputs repeat attribute '" + a + "'");
            attrs.push_back(a);
        }
    }
    const std::string key = subset_key(attrs, schema);
    const std::set<std::string> want(attrs.begin(), attrs.end());

    std::vector<Template> out;
    for (const TemplateKind kind : opt.kinds()) {
        const std::string& tmpl = kind == TemplateKind::sentence ? q.stage3_sentence : q.stage3_phrase;
        const LlmRequest req{"stage3", key + "_" + to_string(kind),
                             Queries::render(tmpl, {{"n", std::to_string(opt.n_combined)}, {"sentences", join_sentences(inputs)}})};
        const std::string prefix = "s3-" + key + "-" + to_string(kind);
        std::size_t kept = 0;
        for (const auto& item : parse_list_response(client.complete(req))) {
            try {
                Template t = parse_template(item, schema, std::nullopt, kind);
                if (std::set<std::string>(t.placeholders.begin(), t.placeholders.end()) != want)
                    throw ValidationError("placeholders do not match {" + key + "}");
                t.id = numbered_id(prefix, kept++);
                out.push_back(std::move(t));
            } catch (const Error& e) {
                log::warn("promptgen", "stage3 " + req.key + ": discarded \"" + item + "\": " + e.what());
            }
        }
        if (kept == 0) {
            log::warn("promptgen", "stage3 " + req.key + ": no valid combination, falling back to a joined template");
            Template t = parse_template(mechanical_join(inputs), schema, std::nullopt, kind);
            t.id = prefix + "-join";
            out.push_back(std::move(t));
        }
    }
    return out;
}

inline std::string class_key(const std::vector<std::string>& attrs, const slu::Labels& classes) {
    std::string k;
    for (const auto& a : attrs) k += (k.empty() ? "" : "+") + a + "=" + classes.at(a);
    return k;
}

// Ablation without placeholders, stage 2: the LLM writes class-specific
// sentences for each (attribute, class).
inline std::vector<Template> direct_stage2(LlmClient& client, const slu::AttributeSchema& schema,
                                           const StageOptions& opt = {}, const Queries& q = {}) {
    std::vector<LlmRequest> reqs;
    std::vector<std::pair<std::string, std::string>> ac;
    for (const auto& attr : schema.attributes()) {
        for (const auto& cls : attr.classes) {
            reqs.push_back({"direct_stage2", attr.name + "_" + cls,
                            Queries::render(q.direct_stage2,
                                            {{"n", std::to_string(opt.n_templates)}, {"attribute", attr.name}, {"class", cls}})});
            ac.emplace_back(attr.name, cls);
        }
    }
    const auto responses = complete_all(client, reqs, opt.workers);
    std::vector<Template> out;
    for (std::size_t i = 0; i < reqs.size(); ++i) {
        std::size_t kept = 0;
        for (const auto& item : parse_list_response(responses[i])) {
            try {
                Template t = parse_template(item, schema);
                if (t.has_placeholders()) throw ValidationError("unexpected placeholder");
                t.attributes = {ac[i].first};
                t.fixed_classes = {{ac[i].first, ac[i].second}};
                t.id = numbered_id("d2-" + ac[i].first + "-" + ac[i].second, kept++);
                out.push_back(std::move(t));
            } catch (const Error& e) {
                log::warn("promptgen", "direct_stage2 " + reqs[i].key + ": discarded \"" + item + "\": " + e.what());
            }
        }
        if (kept == 0) throw DataError("direct_stage2 produced no sentence for " + reqs[i].key);
    }
    return out;
}

// Ablation without placeholders, stage 3. Nothing marks the attributes in the
// output, so a combination that drops or alters one cannot be detected here.
inline std::vector<Template> direct_stage3(LlmClient& client, const slu::AttributeSchema& schema,
                                           const std::vector<Template>& inputs, const StageOptions& opt = {},
                                           const Queries& q = {}) {
    std::vector<std::string> attrs;
    slu::Labels classes;
    for (const auto& t : inputs)
        for (const auto& a : t.attributes) {
            if (classes.count(a)) throw ValidationError("stage3 inputs repeat attribute '" + a + "'");
            attrs.push_back(a);
            classes[a] = t.fixed_classes.at(a);
        }
    std::sort(attrs.begin(), attrs.end(),
              [&](const std::string& a, const std::string& b) { return *schema.index_of(a) < *schema.index_of(b); });
    const std::string key = class_key(attrs, classes);

    std::vector<Template> out;
    for (const TemplateKind kind : opt.kinds()) {
        const std::string& tmpl = kind == TemplateKind::sentence ? q.direct_stage3_sentence : q.direct_stage3_phrase;
        const LlmRequest req{"direct_stage3", key + "_" + to_string(kind),
                             Queries::render(tmpl, {{"n", std::to_string(opt.n_combined)}, {"sentences", join_sentences(inputs)}})};
        const std::string prefix = "d3-" + key + "-" + to_string(kind);
        std::size_t kept = 0;
        for (const auto& item : parse_list_response(client.complete(req))) {
            try {
                Template t = parse_template(item, schema, std::nullopt, kind);
                if (t.has_placeholders()) throw ValidationError("unexpected placeholder");
                t.attributes = attrs;
                t.fixed_classes = classes;
                t.id = numbered_id(prefix, kept++);
                out.push_back(std::move(t));
            } catch (const Error& e) {
                log::warn("promptgen", "direct_stage3 " + req.key + ": discarded \"" + item + "\": " + e.what());
            }
        }
        if (kept == 0) {
            log::warn("promptgen", "direct_stage3 " + req.key + ": no valid combination, falling back to a joined sentence");
            Template t = parse_template(mechanical_join(inputs), schema, std::nullopt, kind);
            t.attributes = attrs;
            t.fixed_classes = classes;
            t.id = prefix + "-join";
            out.push_back(std::move(t));
        }
    }
    return out;
}

struct PipelineOptions {
    StageOptions stages;
    bool placeholder = true;
};

struct PipelineOutput {
    KeywordBank bank;  // empty without placeholders
    std::vector<Template> templates;
};

// Stages 1 to 3. `rng` picks which stage-2 template feeds each combination.
inline PipelineOutput run_stages(LlmClient& client, const slu::AttributeSchema& schema, const PipelineOptions& opt,
                                 nn::Rng& rng, const Queries& q = {}) {
    PipelineOutput out;
    if (opt.placeholder) {
        out.bank = stage1_keywords(client, schema, opt.stages, q);
        out.templates = stage2_sentences(client, schema, opt.stages, q);
        std::map<std::string, std::vector<const Template*>> by_attr;
        for (const auto& t : out.templates) by_attr[t.placeholders.front()].push_back(&t);
        std::vector<Template> combined;
        for (const auto& subset : attribute_subsets(schema, 2)) {
            std::vector<Template> inputs;
            for (const auto& a : subset) {
                const auto& pool = by_attr.at(a);
                inputs.push_back(*pool[rng.below(pool.size())]);
            }
            for (auto& t : stage3_combine(client, schema, inputs, opt.stages, q)) combined.push_back(std::move(t));
        }
        out.templates.insert(out.templates.end(), combined.begin(), combined.end());
        return out;
    }

    out.templates = direct_stage2(client, schema, opt.stages, q);
    std::map<std::string, std::vector<const Template*>> by_class;
    for (const auto& t : out.templates) by_class[class_key(t.attributes, t.fixed_classes)].push_back(&t);
    std::vector<Template> combined;
    for (const auto& subset : attribute_subsets(schema, 2)) {
        // every class combination of the subset; the last attribute varies fastest
        std::size_t total = 1;
        for (const auto& a : subset) total *= schema.get(a).classes.size();
        for (std::size_t n = 0; n < total; ++n) {
            std::vector<std::size_t> idx(subset.size());
            std::size_t rest = n;
            for (std::size_t i = subset.size(); i-- > 0;) {
                const std::size_t radix = schema.get(subset[i]).classes.size();
                idx[i] = rest % radix;
                rest /= radix;
            }
            std::vector<Template> inputs;
            for (std::size_t i = 0; i < subset.size(); ++i) {
                const std::string& cls = schema.get(subset[i]).classes[idx[i]];
                const auto& pool = by_class.at(subset[i] + "=" + cls);
                inputs.push_back(*pool[rng.below(pool.size())]);
            }
            for (auto& t : direct_stage3(client, schema, inputs, opt.stages, q)) combined.push_back(std::move(t));
        }
    }
    out.templates.insert(out.templates.end(), combined.begin(), combined.end());
    return out;
}

}  // namespace promptvar::promptgen

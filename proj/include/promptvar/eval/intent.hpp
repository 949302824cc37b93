#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/hash.hpp"
#include "promptvar/promptgen/dataset.hpp"
#include "promptvar/eval/softmax.hpp"
#include "promptvar/slu/schema.hpp"
#include "promptvar/style/vocab.hpp"

namespace promptvar::eval {

inline constexpr std::size_t kHashBuckets = std::size_t{1} << 16;
inline constexpr const char* kUnspecified = "unspecified";

// Word unigram and bigram counts hashed into 2^16 buckets.
inline SparseRow ngram_features(const std::string& text) {
    const auto toks = style::tokenize(text);
    std::map<std::size_t, double> counts;
    for (std::size_t i = 0; i < toks.size(); ++i) {
        counts[fnv1a64("u " + toks[i]) % kHashBuckets] += 1.0;
        if (i + 1 < toks.size()) counts[fnv1a64("b " + toks[i] + " " + toks[i + 1]) % kHashBuckets] += 1.0;
    }
    return {counts.begin(), counts.end()};
}

struct IntentExample {
    std::string prompt;
    slu::Labels targets;  // class per attribute, or "unspecified"
};

// Targets for a dataset row: the tagged class for every attribute the
// template describes, "unspecified" for the rest.
inline IntentExample intent_example(const promptgen::PromptRecord& r, const slu::AttributeSchema& schema) {
    IntentExample e{r.prompt, {}};
    for (const auto& a : schema.attributes()) {
        const bool described = std::find(r.attributes.begin(), r.attributes.end(), a.name) != r.attributes.end();
        e.targets[a.name] = described ? r.profile.labels.at(a.name) : kUnspecified;
    }
    return e;
}

inline std::vector<IntentExample> intent_examples(const std::vector<promptgen::PromptRecord>& rows,
                                                  const slu::AttributeSchema& schema) {
    std::vector<IntentExample> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(intent_example(r, schema));
    return out;
}

struct IntentAccuracy {
    std::map<std::string, double> per_attribute;
    double mean = 0.0;
    std::size_t examples = 0;

    nlohmann::json to_json() const { return {{"per_attribute", per_attribute}, {"mean", mean}, {"examples", examples}}; }
};

// One multinomial head per attribute over the attribute's classes plus "unspecified".
class IntentClassifier {
public:
    static IntentClassifier train(const std::vector<IntentExample>& data, const slu::AttributeSchema& schema,
                                  const SoftmaxConfig& cfg = {}) {
        if (data.empty()) throw DataError("intent classifier: empty training set");
        IntentClassifier ic;
        ic.schema_ = schema;
        std::vector<SparseRow> X;
        X.reserve(data.size());
        for (const auto& e : data) X.push_back(ngram_features(e.prompt));
        for (const auto& a : schema.attributes()) {
            std::vector<std::size_t> y;
            std::set<std::size_t> seen;
            for (const auto& e : data) {
                y.push_back(ic.class_id(a, e.targets.at(a.name)));
                seen.insert(y.back());
            }
            if (seen.size() < 2)
                throw DataError("intent classifier: degenerate labels for '" + a.name + "', every example is '" +
                                data.front().targets.at(a.name) + "'");
            SoftmaxRegression m;
            m.fit(X, y, a.classes.size() + 1, cfg);
            ic.heads_.push_back(std::move(m));
        }
        return ic;
    }

    slu::Labels classify(const std::string& prompt) const {
        const SparseRow x = ngram_features(prompt);
        slu::Labels out;
        for (std::size_t i = 0; i < heads_.size(); ++i) {
            const auto& a = schema_.at(i);
            const std::size_t c = heads_[i].predict(x);
            out[a.name] = c < a.classes.size() ? a.classes[c] : kUnspecified;
        }
        return out;
    }

    IntentAccuracy evaluate(const std::vector<IntentExample>& data) const {
        if (data.empty()) throw DataError("intent classifier: empty evaluation set");
        IntentAccuracy acc;
        acc.examples = data.size();
        for (const auto& e : data) {
            const auto pred = classify(e.prompt);
            for (const auto& a : schema_.attributes()) acc.per_attribute[a.name] += pred.at(a.name) == e.targets.at(a.name);
        }
        for (auto& [name, v] : acc.per_attribute) {
            v /= static_cast<double>(data.size());
            acc.mean += v;
        }
        acc.mean /= static_cast<double>(acc.per_attribute.size());
        return acc;
    }

    const SoftmaxRegression& head(std::size_t attr) const { return heads_.at(attr); }

    nlohmann::json to_json() const {
        nlohmann::json heads = nlohmann::json::array();
        for (const auto& h : heads_) heads.push_back(h.to_json());
        return {{"schema", schema_.to_json()}, {"buckets", kHashBuckets}, {"heads", heads}};
    }

private:
    std::size_t class_id(const slu::Attribute& a, const std::string& cls) const {
        if (cls == kUnspecified) return a.classes.size();
        const auto it = std::find(a.classes.begin(), a.classes.end(), cls);
        if (it == a.classes.end()) throw DataError("intent classifier: unknown class '" + cls + "' for '" + a.name + "'");
        return static_cast<std::size_t>(it - a.classes.begin());
    }

    slu::AttributeSchema schema_;
    std::vector<SoftmaxRegression> heads_;
};

}  // namespace promptvar::eval

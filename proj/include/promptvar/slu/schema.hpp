#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"

namespace promptvar::slu {

struct Attribute {
    std::string name;
    std::vector<std::string> classes;  // ordered; continuous attributes run low → high
};

inline std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

class AttributeSchema {
public:
    AttributeSchema() = default;
    explicit AttributeSchema(std::vector<Attribute> attrs) : attrs_(std::move(attrs)) {
        for (auto& a : attrs_) {
            a.name = lowercase(a.name);
            for (auto& c : a.classes) c = lowercase(c);
        }
        validate();
    }

    static AttributeSchema default_schema() {
        return AttributeSchema({{"gender", {"male", "female"}},
                                {"pitch", {"low", "normal", "high"}},
                                {"speed", {"slow", "normal", "fast"}},
                                {"volume", {"quiet", "normal", "loud"}}});
    }

    const std::vector<Attribute>& attributes() const { return attrs_; }
    std::size_t size() const { return attrs_.size(); }
    const Attribute& at(std::size_t i) const { return attrs_.at(i); }

    std::optional<std::size_t> index_of(const std::string& name) const {
        const std::string key = lowercase(name);
        for (std::size_t i = 0; i < attrs_.size(); ++i)
            if (attrs_[i].name == key) return i;
        return std::nullopt;
    }

    const Attribute& get(const std::string& name) const {
        const auto i = index_of(name);
        if (!i) throw ValidationError("unknown attribute '" + name + "'; valid attributes: " + names_joined());
        return attrs_[*i];
    }

    std::optional<std::size_t> class_index(const std::string& attr, const std::string& cls) const {
        const auto& a = get(attr);
        const std::string key = lowercase(cls);
        for (std::size_t i = 0; i < a.classes.size(); ++i)
            if (a.classes[i] == key) return i;
        return std::nullopt;
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& a : attrs_) out.push_back(a.name);
        return out;
    }

    std::string names_joined() const {
        std::string s;
        for (const auto& a : attrs_) s += (s.empty() ? "" : ", ") + a.name;
        return s;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& a : attrs_) j.push_back({{"name", a.name}, {"classes", a.classes}});
        return {{"attributes", j}};
    }

    static AttributeSchema from_json(const nlohmann::json& j) {
        std::vector<Attribute> attrs;
        for (const auto& a : j.at("attributes"))
            attrs.push_back({a.at("name").get<std::string>(), a.at("classes").get<std::vector<std::string>>()});
        return AttributeSchema(std::move(attrs));
    }

    friend bool operator==(const AttributeSchema& a, const AttributeSchema& b) { return a.to_json() == b.to_json(); }

private:
    void validate() const {
        if (attrs_.empty()) throw ValidationError("schema has no attributes");
        for (std::size_t i = 0; i < attrs_.size(); ++i) {
            if (attrs_[i].name.empty()) throw ValidationError("schema attribute with empty name");
            if (attrs_[i].classes.size() < 2)
                throw ValidationError("attribute '" + attrs_[i].name + "' needs at least two classes");
            for (std::size_t j = 0; j < i; ++j)
                if (attrs_[j].name == attrs_[i].name) throw ValidationError("duplicate attribute '" + attrs_[i].name + "'");
            auto cls = attrs_[i].classes;
            std::sort(cls.begin(), cls.end());
            if (std::adjacent_find(cls.begin(), cls.end()) != cls.end())
                throw ValidationError("attribute '" + attrs_[i].name + "' has duplicate classes");
        }
    }

    std::vector<Attribute> attrs_;
};

// attribute → class label
using Labels = std::map<std::string, std::string>;

struct Measurements {
    double f0_mean = 0.0;
    double rms_mean = 0.0;
    double rate = 0.0;
    double spectral_centroid_mean = 0.0;

    nlohmann::json to_json() const {
        return {{"f0_mean", f0_mean}, {"rms_mean", rms_mean}, {"rate", rate}, {"spectral_centroid_mean", spectral_centroid_mean}};
    }
    static Measurements from_json(const nlohmann::json& j) {
        return {j.at("f0_mean").get<double>(), j.at("rms_mean").get<double>(), j.at("rate").get<double>(),
                j.at("spectral_centroid_mean").get<double>()};
    }

    double get(const std::string& key) const {
        if (key == "f0_mean") return f0_mean;
        if (key == "rms_mean") return rms_mean;
        if (key == "rate") return rate;
        if (key == "spectral_centroid_mean") return spectral_centroid_mean;
        throw ValidationError("unknown measurement '" + key + "'");
    }
};

struct AttributeProfile {
    Labels labels;
    Measurements measurements;
    bool silent = false;
};

}  // namespace promptvar::slu

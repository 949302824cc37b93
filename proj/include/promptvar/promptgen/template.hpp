#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::promptgen {

enum class TemplateKind { sentence, phrase };

inline std::string to_string(TemplateKind k) { return k == TemplateKind::sentence ? "sentence" : "phrase"; }

inline TemplateKind kind_from_string(const std::string& s) {
    if (s == "sentence") return TemplateKind::sentence;
    if (s == "phrase") return TemplateKind::phrase;
    throw ParseError("unknown template kind '" + s + "'");
}

// Literal placeholder token that stands for "the attribute this query is about".
inline constexpr const char* kGenericPlaceholder = "placeholder";

struct Template {
    std::string id;
    std::string text;  // canonical: placeholders rendered as [Attribute]
    std::vector<std::string> placeholders;  // attribute names in order of appearance
    TemplateKind kind = TemplateKind::sentence;
    // Attributes a template describes. Equals the placeholder set, except for
    // templates written with concrete class words (no placeholders), where it
    // records the attributes and classes the text was requested for.
    std::vector<std::string> attributes;
    slu::Labels fixed_classes;

    bool has_placeholders() const { return !placeholders.empty(); }

    nlohmann::json to_json() const {
        nlohmann::json j{{"id", id}, {"text", text}, {"placeholders", placeholders}, {"kind", to_string(kind)},
                         {"attributes", attributes}};
        if (!fixed_classes.empty()) j["classes"] = fixed_classes;
        return j;
    }

    static Template from_json(const nlohmann::json& j) {
        Template t;
        t.id = j.at("id").get<std::string>();
        t.text = j.at("text").get<std::string>();
        t.placeholders = j.at("placeholders").get<std::vector<std::string>>();
        t.kind = kind_from_string(j.at("kind").get<std::string>());
        t.attributes = j.at("attributes").get<std::vector<std::string>>();
        if (j.contains("classes")) t.fixed_classes = j.at("classes").get<slu::Labels>();
        return t;
    }
};

inline std::string display_name(const std::string& attribute) {
    std::string s = attribute;
    if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    return s;
}

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

// Parses `[Name]` spans. Names are matched case-insensitively against the
// schema and rewritten to canonical `[Name]`; the literal `[placeholder]`
// resolves to `context_attribute` when one is given.
inline Template parse_template(const std::string& raw, const slu::AttributeSchema& schema,
                               const std::optional<std::string>& context_attribute = std::nullopt,
                               TemplateKind kind = TemplateKind::sentence) {
    if (trim(raw).empty()) throw ValidationError("template is empty");
    Template t;
    t.kind = kind;
    std::string out;
    std::size_t i = 0;
    while (i < raw.size()) {
        const char c = raw[i];
        if (c == ']') throw ParseError("unbalanced ']' at byte " + std::to_string(i) + " in \"" + raw + "\"");
        if (c != '[') {
            out.push_back(c);
            ++i;
            continue;
        }
        const std::size_t close = raw.find_first_of("[]", i + 1);
        if (close == std::string::npos || raw[close] != ']')
            throw ParseError("unclosed '[' at byte " + std::to_string(i) + " in \"" + raw + "\"");
        const std::string name = slu::lowercase(trim(raw.substr(i + 1, close - i - 1)));
        std::string attr;
        if (name == kGenericPlaceholder) {
            if (!context_attribute)
                throw ValidationError("'[placeholder]' used without a target attribute in \"" + raw + "\"");
            attr = schema.get(*context_attribute).name;
        } else {
            const auto idx = schema.index_of(name);
            if (!idx)
                throw ValidationError("unknown attribute '" + name + "' in \"" + raw + "\"; valid attributes: " +
                                      schema.names_joined());
            attr = schema.at(*idx).name;
        }
        if (std::find(t.placeholders.begin(), t.placeholders.end(), attr) != t.placeholders.end())
            throw ValidationError("attribute '" + attr + "' appears twice in \"" + raw + "\"");
        t.placeholders.push_back(attr);
        out += "[" + display_name(attr) + "]";
        i = close + 1;
    }
    t.text = trim(out);
    t.attributes = t.placeholders;
    return t;
}

// The attribute set of a template in schema order, joined with '+'.
inline std::string subset_key(std::vector<std::string> attrs, const slu::AttributeSchema& schema) {
    std::sort(attrs.begin(), attrs.end(), [&](const std::string& a, const std::string& b) {
        return *schema.index_of(a) < *schema.index_of(b);
    });
    std::string k;
    for (const auto& a : attrs) k += (k.empty() ? "" : "+") + a;
    return k;
}

namespace detail {

inline bool starts_with_vowel(const std::string& w) {
    if (w.empty()) return false;
    const char c = static_cast<char>(std::tolower(static_cast<unsigned char>(w[0])));
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u';
}

// Turns a trailing standalone "a " into "an " before a vowel-initial word.
inline void fix_article(std::string& out, const std::string& next) {
    if (!starts_with_vowel(next)) return;
    const std::size_t n = out.size();
    if (n >= 2 && out[n - 1] == ' ' && (out[n - 2] == 'a' || out[n - 2] == 'A') &&
        (n == 2 || !std::isalpha(static_cast<unsigned char>(out[n - 3])))) {
        out.insert(n - 1, "n");
    }
}

}  // namespace detail

// Replaces every placeholder with its keyword.
inline std::string substitute(const Template& t, const std::map<std::string, std::string>& keywords) {
    std::string out;
    std::size_t i = 0;
    while (i < t.text.size()) {
        if (t.text[i] != '[') {
            out.push_back(t.text[i++]);
            continue;
        }
        const std::size_t close = t.text.find(']', i);
        const std::string attr = slu::lowercase(t.text.substr(i + 1, close - i - 1));
        const auto it = keywords.find(attr);
        if (it == keywords.end()) throw ValidationError("no keyword for placeholder [" + display_name(attr) + "] in " + t.id);
        detail::fix_article(out, it->second);
        out += it->second;
        i = close + 1;
    }
    return out;
}

}  // namespace promptvar::promptgen

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
#include "promptvar/log.hpp"
#include "promptvar/promptgen/template.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::promptgen {

struct ParsedList {
    std::vector<std::string> items;
    bool marked = false;  // at least one line carried a list marker
};

// Items of a numbered or bulleted list. Accepts "1.", "1)", "-", "*" markers;
// when at least one line carries a marker, unmarked lines (preambles, sign-offs)
// are ignored. Empty items are dropped.
inline ParsedList parse_list(const std::string& response) {
    std::vector<std::pair<bool, std::string>> lines;
    std::size_t start = 0;
    while (start <= response.size()) {
        std::size_t end = response.find('\n', start);
        if (end == std::string::npos) end = response.size();
        std::string line = trim(response.substr(start, end - start));
        start = end + 1;
        if (line.empty()) continue;
        bool marked = false;
        std::size_t p = 0;
        while (p < line.size() && std::isdigit(static_cast<unsigned char>(line[p]))) ++p;
        if (p > 0 && p < line.size() && (line[p] == '.' || line[p] == ')')) {
            line = line.substr(p + 1);
            marked = true;
        } else if (p == 0 && (line[0] == '-' || line[0] == '*')) {
            line = line.substr(1);
            marked = true;
        }
        lines.emplace_back(marked, trim(line));
    }
    const bool any_marked = std::any_of(lines.begin(), lines.end(), [](const auto& l) { return l.first; });
    ParsedList out{{}, any_marked};
    for (auto& [marked, text] : lines) {
        if (any_marked && !marked) continue;
        if (!text.empty()) out.items.push_back(text);
    }
    return out;
}

inline std::vector<std::string> parse_list_response(const std::string& response) { return parse_list(response).items; }

// Lowercase, strip surrounding quotes and trailing punctuation, collapse
// internal whitespace.
inline std::string normalize_keyword(const std::string& raw) {
    std::string s = slu::lowercase(trim(raw));
    auto strip = [](char c) { return c == '"' || c == '\'' || c == '.' || c == ',' || c == ';' || c == ':' || c == '!'; };
    while (!s.empty() && strip(s.back())) s.pop_back();
    while (!s.empty() && (s.front() == '"' || s.front() == '\'')) s.erase(s.begin());
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = true;
            continue;
        }
        if (space && !out.empty()) out.push_back(' ');
        space = false;
        out.push_back(c);
    }
    return out;
}

// (attribute, class) → keywords. Keywords are injective within an attribute
// so that a keyword identifies its class.
class KeywordBank {
public:
    void set(const std::string& attr, const std::string& cls, const std::vector<std::string>& raw) {
        std::vector<std::string>& dst = bank_[attr][cls];
        dst.clear();
        for (const auto& r : raw) {
            const std::string k = normalize_keyword(r);
            if (k.empty() || std::find(dst.begin(), dst.end(), k) != dst.end()) continue;
            dst.push_back(k);
        }
    }

    const std::vector<std::string>& get(const std::string& attr, const std::string& cls) const {
        const auto a = bank_.find(attr);
        if (a == bank_.end()) throw DataError("keyword bank has no attribute '" + attr + "'");
        const auto c = a->second.find(cls);
        if (c == a->second.end() || c->second.empty())
            throw DataError("keyword bank has no keywords for " + attr + "/" + cls);
        return c->second;
    }

    bool has(const std::string& attr, const std::string& cls) const {
        const auto a = bank_.find(attr);
        if (a == bank_.end()) return false;
        const auto c = a->second.find(cls);
        return c != a->second.end() && !c->second.empty();
    }

    // Class of `keyword` under `attr`, if the keyword belongs to the bank.
    std::optional<std::string> invert(const std::string& attr, const std::string& keyword) const {
        const auto a = bank_.find(attr);
        if (a == bank_.end()) return std::nullopt;
        const std::string k = normalize_keyword(keyword);
        for (const auto& [cls, words] : a->second)
            if (std::find(words.begin(), words.end(), k) != words.end()) return cls;
        return std::nullopt;
    }

    // Removes keywords claimed by more than one class of the same attribute,
    // then requires every schema class to keep at least one keyword.
    void finalize(const slu::AttributeSchema& schema) {
        for (auto& [attr, classes] : bank_) {
            std::map<std::string, int> seen;
            for (const auto& [cls, words] : classes)
                for (const auto& w : words) seen[w]++;
            for (auto& [cls, words] : classes) {
                const auto before = words.size();
                std::erase_if(words, [&](const std::string& w) { return seen[w] > 1; });
                if (words.size() != before)
                    log::warn("promptgen", "dropped " + std::to_string(before - words.size()) +
                                               " keyword(s) shared between classes of '" + attr + "' from class '" + cls + "'");
            }
        }
        for (const auto& attr : schema.attributes())
            for (const auto& cls : attr.classes)
                if (!has(attr.name, cls)) throw DataError("keyword bank: class " + attr.name + "/" + cls + " has no keywords");
    }

    const std::map<std::string, std::map<std::string, std::vector<std::string>>>& data() const { return bank_; }

    nlohmann::json to_json() const { return bank_; }
    static KeywordBank from_json(const nlohmann::json& j) {
        KeywordBank b;
        b.bank_ = j.get<std::map<std::string, std::map<std::string, std::vector<std::string>>>>();
        return b;
    }

private:
    std::map<std::string, std::map<std::string, std::vector<std::string>>> bank_;
};

}  // namespace promptvar::promptgen

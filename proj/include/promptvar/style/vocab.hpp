#pragma once

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"

namespace promptvar::style {

// Lowercased word tokens; letters, digits, apostrophes and inner hyphens form
// words, any other non-space character is a token of its own.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    auto flush = [&] {
        while (!cur.empty() && cur.back() == '-') cur.pop_back();
        if (!cur.empty()) out.push_back(cur);
        cur.clear();
    };
    for (unsigned char c : text) {
        if (std::isalnum(c) || c == '\'' || (c == '-' && !cur.empty())) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else {
            flush();
            if (!std::isspace(c)) out.emplace_back(1, static_cast<char>(c));
        }
    }
    flush();
    return out;
}

class Vocab {
public:
    static constexpr std::size_t kPad = 0;
    static constexpr std::size_t kUnk = 1;

    Vocab() : tokens_{"<pad>", "<unk>"} { reindex(); }

    // Words seen fewer than `min_count` times map to unk.
    static Vocab build(const std::vector<std::string>& texts, std::size_t min_count = 1) {
        std::map<std::string, std::size_t> counts;
        for (const auto& t : texts)
            for (const auto& w : tokenize(t)) counts[w]++;
        Vocab v;
        for (const auto& [w, n] : counts)
            if (n >= min_count) v.tokens_.push_back(w);
        v.reindex();
        return v;
    }

    std::size_t size() const { return tokens_.size(); }
    std::size_t id(const std::string& token) const {
        const auto it = index_.find(token);
        return it == index_.end() ? kUnk : it->second;
    }
    const std::string& token(std::size_t id) const { return tokens_.at(id); }

    std::vector<std::size_t> encode(const std::string& text) const {
        std::vector<std::size_t> ids;
        for (const auto& w : tokenize(text)) ids.push_back(id(w));
        return ids;
    }

    nlohmann::json to_json() const { return tokens_; }
    static Vocab from_json(const nlohmann::json& j) {
        Vocab v;
        v.tokens_ = j.get<std::vector<std::string>>();
        if (v.tokens_.size() < 2 || v.tokens_[kPad] != "<pad>" || v.tokens_[kUnk] != "<unk>")
            throw ParseError("vocabulary must start with <pad>, <unk>");
        v.reindex();
        return v;
    }

private:
    void reindex() {
        index_.clear();
        for (std::size_t i = 0; i < tokens_.size(); ++i) index_[tokens_[i]] = i;
    }

    std::vector<std::string> tokens_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace promptvar::style

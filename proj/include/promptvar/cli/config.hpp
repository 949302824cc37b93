#pragma once

// Run configuration: a flat INI file with [paths], [llm], [model] and [run]
// sections. Unknown keys are rejected so typos do not silently fall back to
// defaults.

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/promptgen/llm_client.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::cli {

struct Config {
    // [paths]
    std::filesystem::path corpus;    // directory of .wav files (+ optional labels.json)
    std::filesystem::path fixtures;  // LLM fixture directory
    std::filesystem::path queries;   // query wording overrides
    std::filesystem::path schema;    // attribute schema JSON; empty = built-in

    // [llm]
    std::string backend = "fixture";  // fixture | http
    promptgen::HttpConfig http;
    int workers = 1;

    // [model]
    std::size_t d = 32;
    std::size_t heads = 4;
    std::size_t style_layers = 2;
    std::size_t varnet_layers = 4;
    std::size_t m = 8;  // prompt rows
    std::size_t n = 8;  // reference rows
    double beta_min = 0.05;
    double beta_max = 20.0;
    std::size_t steps = 50;
    double style_lr = 4e-3;
    std::size_t style_epochs = 16;
    double varnet_lr = 2e-3;
    std::size_t varnet_epochs = 30;
    int per_utterance = 6;

    // [run]
    std::uint64_t seed = 42;
    std::size_t similarity_prompts = 20;
    std::size_t similarity_k = 5;

    slu::AttributeSchema load_schema() const {
        if (schema.empty()) return slu::AttributeSchema::default_schema();
        require_path("paths.schema", schema);
        std::ifstream in(schema);
        if (!in) throw IoError("cannot read schema " + schema.string());
        try {
            return slu::AttributeSchema::from_json(nlohmann::json::parse(in));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("schema " + schema.string() + ": " + e.what());
        }
    }

    // Canonical text used for the config hash. Paths are excluded so that a
    // run can move between machines without looking stale.
    std::string canonical() const {
        nlohmann::json j{{"llm", {{"backend", backend}, {"model", http.model}, {"temperature", http.temperature}}},
                         {"model",
                          {{"d", d}, {"heads", heads}, {"style_layers", style_layers}, {"varnet_layers", varnet_layers},
                           {"m", m}, {"n", n}, {"beta_min", beta_min}, {"beta_max", beta_max}, {"steps", steps},
                           {"style_lr", style_lr}, {"style_epochs", style_epochs}, {"varnet_lr", varnet_lr},
                           {"varnet_epochs", varnet_epochs}, {"per_utterance", per_utterance}}},
                         {"run", {{"seed", seed}, {"similarity_prompts", similarity_prompts}, {"similarity_k", similarity_k}}}};
        return j.dump();
    }

    // A path the current command needs must be set and exist.
    void require_path(const char* key, const std::filesystem::path& p) const {
        if (p.empty()) throw ConfigError("config: " + std::string(key) + " is not set");
        if (!std::filesystem::exists(p)) throw ConfigError("config: " + std::string(key) + " = " + p.string() + " does not exist");
    }

    void validate() const {
        if (backend != "fixture" && backend != "http") throw ConfigError("[llm] backend must be 'fixture' or 'http', got '" + backend + "'");
        if (m != n) throw ConfigError("[model] m and n must be equal for the style and varnet checkpoints to interoperate");
        if (d == 0 || heads == 0 || d % heads != 0) throw ConfigError("[model] d must be a positive multiple of heads");
        if (!(beta_min > 0.0 && beta_max > beta_min)) throw ConfigError("[model] need 0 < beta_min < beta_max");
        if (steps == 0) throw ConfigError("[model] steps must be >= 1");
        if (per_utterance < 1) throw ConfigError("[model] per_utterance must be >= 1");
        if (similarity_k < 2) throw ConfigError("[run] similarity_k must be >= 2");
    }
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& v) {
    std::istringstream in(v);
    T out{};
    in >> out;
    if (!in || !(in >> std::ws).eof()) throw ConfigError("config: bad value for " + key + ": '" + v + "'");
    return out;
}

}  // namespace detail

// Relative paths resolve against the config file's directory.
inline Config parse_config(std::istream& in, const std::filesystem::path& base = {}) {
    Config c;
    auto path = [&](std::filesystem::path& dst) {
        return [&dst, &base](const std::string& v) { dst = v.empty() || std::filesystem::path(v).is_absolute() ? std::filesystem::path(v) : base / v; };
    };
    auto str = [](std::string& dst) { return [&dst](const std::string& v) { dst = v; }; };
    auto num = [](auto& dst, const std::string& key) {
        return [&dst, key](const std::string& v) { dst = detail::parse_value<std::remove_reference_t<decltype(dst)>>(key, v); };
    };
    const std::map<std::string, std::function<void(const std::string&)>> setters{
        {"paths.corpus", path(c.corpus)},
        {"paths.fixtures", path(c.fixtures)},
        {"paths.queries", path(c.queries)},
        {"paths.schema", path(c.schema)},
        {"llm.backend", str(c.backend)},
        {"llm.endpoint", str(c.http.endpoint)},
        {"llm.model", str(c.http.model)},
        {"llm.api_key_env", str(c.http.api_key_env)},
        {"llm.temperature", num(c.http.temperature, "llm.temperature")},
        {"llm.timeout", num(c.http.timeout_s, "llm.timeout")},
        {"llm.max_retries", num(c.http.max_retries, "llm.max_retries")},
        {"llm.workers", num(c.workers, "llm.workers")},
        {"model.d", num(c.d, "model.d")},
        {"model.heads", num(c.heads, "model.heads")},
        {"model.style_layers", num(c.style_layers, "model.style_layers")},
        {"model.varnet_layers", num(c.varnet_layers, "model.varnet_layers")},
        {"model.m", num(c.m, "model.m")},
        {"model.n", num(c.n, "model.n")},
        {"model.beta_min", num(c.beta_min, "model.beta_min")},
        {"model.beta_max", num(c.beta_max, "model.beta_max")},
        {"model.steps", num(c.steps, "model.steps")},
        {"model.style_lr", num(c.style_lr, "model.style_lr")},
        {"model.style_epochs", num(c.style_epochs, "model.style_epochs")},
        {"model.varnet_lr", num(c.varnet_lr, "model.varnet_lr")},
        {"model.varnet_epochs", num(c.varnet_epochs, "model.varnet_epochs")},
        {"model.per_utterance", num(c.per_utterance, "model.per_utterance")},
        {"run.seed", num(c.seed, "run.seed")},
        {"run.similarity_prompts", num(c.similarity_prompts, "run.similarity_prompts")},
        {"run.similarity_k", num(c.similarity_k, "run.similarity_k")},
    };
    std::vector<CLI::ConfigItem> items;
    try {
        items = CLI::ConfigINI().from_config(in);
    } catch (const CLI::Error& e) {
        throw ParseError(std::string("config: ") + e.what());
    }
    for (const auto& it : items) {
        if (it.name == "++" || it.name == "--") continue;  // section markers
        std::string key;
        for (const auto& p : it.parents) key += p + ".";
        key += it.name;
        if (it.parents.empty() || it.parents.front() == "default") throw ConfigError("config: key '" + it.name + "' outside a section");
        const auto s = setters.find(key);
        if (s == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
        if (it.inputs.size() != 1) throw ConfigError("config: " + key + " expects a single value");
        s->second(it.inputs.front());
    }
    c.validate();
    return c;
}

inline Config load_config(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot read config " + file.string());
    return parse_config(in, file.parent_path());
}

inline std::string default_config_text() {
    return R"([paths]
corpus = corpus
fixtures = fixtures

[llm]
backend = fixture

[model]
d = 32
heads = 4
style_layers = 2
varnet_layers = 4
m = 8
n = 8
beta_min = 0.05
beta_max = 20
steps = 50
style_lr = 0.004
style_epochs = 16
varnet_lr = 0.002
varnet_epochs = 30
per_utterance = 6

[run]
seed = 42
similarity_prompts = 20
similarity_k = 5
)";
}

}  // namespace promptvar::cli

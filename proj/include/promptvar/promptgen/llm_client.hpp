#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/hash.hpp"
#include "promptvar/log.hpp"

namespace promptvar::promptgen {

struct LlmRequest {
    std::string stage;  // fixture subdirectory, e.g. "stage1"
    std::string key;    // e.g. "gender_male"
    std::string prompt;
};

class LlmClient {
public:
    virtual ~LlmClient() = default;
    virtual std::string complete(const LlmRequest& req) = 0;
};

inline std::string request_hash(const std::string& prompt) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(prompt)));
    return buf;
}

inline std::string read_text_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Canned responses under <dir>/<stage>/. A file named <key>.<hash>.txt pins a
// response to one exact query; <key>.txt answers any query with that key.
class FixtureClient : public LlmClient {
public:
    explicit FixtureClient(std::filesystem::path dir) : dir_(std::move(dir)) {
        if (!std::filesystem::is_directory(dir_)) throw IoError("fixture directory not found: " + dir_.string());
    }

    std::string complete(const LlmRequest& req) override {
        const auto base = dir_ / req.stage;
        const auto exact = base / (req.key + "." + request_hash(req.prompt) + ".txt");
        if (std::filesystem::exists(exact)) return read_text_file(exact);
        const auto generic = base / (req.key + ".txt");
        if (std::filesystem::exists(generic)) return read_text_file(generic);
        throw LlmError("no fixture for " + req.stage + "/" + req.key + " (looked for " + exact.string() + " and " +
                       generic.string() + ")");
    }

    const std::filesystem::path& dir() const { return dir_; }

private:
    std::filesystem::path dir_;
};

struct HttpConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-3.5-turbo";
    std::string api_key_env = "OPENAI_API_KEY";
    double temperature = 0.7;
    double timeout_s = 60.0;
    int max_retries = 3;
    double backoff_s = 1.0;  // first retry delay; doubles each time
};

// OpenAI-style chat-completion client.
class HttpClient : public LlmClient {
public:
    using Sleep = std::function<void(double)>;

    explicit HttpClient(HttpConfig cfg, Sleep sleep = default_sleep) : cfg_(std::move(cfg)), sleep_(std::move(sleep)) {
        const auto scheme_end = cfg_.endpoint.find("://");
        if (scheme_end == std::string::npos) throw ConfigError("llm endpoint must be an absolute URL: " + cfg_.endpoint);
        const auto path_start = cfg_.endpoint.find('/', scheme_end + 3);
        origin_ = cfg_.endpoint.substr(0, path_start);
        path_ = path_start == std::string::npos ? "/" : cfg_.endpoint.substr(path_start);
        if (cfg_.max_retries < 0 || cfg_.max_retries > 3) throw ConfigError("llm max_retries must be in [0, 3]");
    }

    std::string complete(const LlmRequest& req) override {
        nlohmann::json body{{"model", cfg_.model},
                            {"messages", nlohmann::json::array({{{"role", "user"}, {"content", req.prompt}}})},
                            {"temperature", cfg_.temperature}};
        httplib::Headers headers;
        if (!cfg_.api_key_env.empty()) {
            const char* key = std::getenv(cfg_.api_key_env.c_str());
            if (key == nullptr || *key == '\0')
                throw DependencyError("environment variable " + cfg_.api_key_env + " is not set");
            headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
            if (attempt > 0) {
                const double delay = cfg_.backoff_s * static_cast<double>(1 << (attempt - 1));
                log::warn("llm", req.stage + "/" + req.key + ": " + last_error + "; retrying in " + std::to_string(delay) + " s");
                sleep_(delay);
            }
            httplib::Client cli(origin_);
            const auto to = std::chrono::duration<double>(cfg_.timeout_s);
            cli.set_connection_timeout(std::chrono::duration_cast<std::chrono::microseconds>(to));
            cli.set_read_timeout(std::chrono::duration_cast<std::chrono::microseconds>(to));
            auto res = cli.Post(path_, headers, body.dump(), "application/json");
            if (!res) {
                last_error = "request failed (" + httplib::to_string(res.error()) + ")";
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status != 200) throw LlmError("HTTP " + std::to_string(res->status) + " from " + cfg_.endpoint + ": " + res->body);
            try {
                const auto j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            } catch (const nlohmann::json::exception& e) {
                throw LlmError(std::string("malformed chat-completion response: ") + e.what());
            }
        }
        throw LlmError(req.stage + "/" + req.key + ": giving up after " + std::to_string(cfg_.max_retries + 1) +
                       " attempts: " + last_error);
    }

    static void default_sleep(double seconds) { std::this_thread::sleep_for(std::chrono::duration<double>(seconds)); }

private:
    HttpConfig cfg_;
    Sleep sleep_;
    std::string origin_, path_;
};

// Forwards to another client and stores every response in fixture layout,
// so a live run can be replayed offline.
class RecordingClient : public LlmClient {
public:
    RecordingClient(LlmClient& inner, std::filesystem::path dir) : inner_(inner), dir_(std::move(dir)) {}

    std::string complete(const LlmRequest& req) override {
        std::string r = inner_.complete(req);
        const auto sub = dir_ / req.stage;
        std::filesystem::create_directories(sub);
        std::ofstream(sub / (req.key + "." + request_hash(req.prompt) + ".txt"), std::ios::binary) << r;
        return r;
    }

private:
    LlmClient& inner_;
    std::filesystem::path dir_;
};

// Issues independent requests on up to `workers` threads. Results keep
// request order.
inline std::vector<std::string> complete_all(LlmClient& client, const std::vector<LlmRequest>& reqs, int workers = 1) {
    std::vector<std::string> out(reqs.size());
    if (workers <= 1) {
        for (std::size_t i = 0; i < reqs.size(); ++i) out[i] = client.complete(reqs[i]);
        return out;
    }
    for (std::size_t begin = 0; begin < reqs.size(); begin += static_cast<std::size_t>(workers)) {
        const std::size_t end = std::min(reqs.size(), begin + static_cast<std::size_t>(workers));
        std::vector<std::future<std::string>> fs;
        for (std::size_t i = begin; i < end; ++i)
            fs.push_back(std::async(std::launch::async, [&client, &r = reqs[i]] { return client.complete(r); }));
        for (std::size_t i = begin; i < end; ++i) out[i] = fs[i - begin].get();
    }
    return out;
}

// Query wording per stage; `{name}` tokens are filled in by render().
struct Queries {
    std::string stage1 =
        "Can you list {n} words or phrases that is the synonyms for {class} {attribute} in lower case? "
        "Please generate one word per line and identify it with a serial number.";
    std::string stage2 =
        "Please generate {n} templates to ask for generating a voice. These templates can only describe the "
        "{attribute} of the voice and use [placeholder] to indicate where a word to describe {attribute} would be "
        "inserted. This template should be simple enough to only have a few words.";
    std::string stage3_sentence =
        "I have some sentences, can you combine these sentences into one sentence and keep all of the '[]' to "
        "describe the style of speech with the same meaning? You can generate {n} different sentences and callout "
        "number. The sentences are: {sentences}";
    std::string stage3_phrase =
        "I have some sentences, can you combine these sentences into one phrase and keep all of the '[]' to "
        "describe the style of speech with the same meaning? You can generate {n} different phrases and callout "
        "number. Please reduce to phrases. The sentences are: {sentences}";
    std::string direct_stage2 =
        "Please generate {n} templates to ask for generating a voice. These templates can only describe the "
        "{attribute} of the voice, which should be {class}. This template should be simple enough to only have a "
        "few words.";
    std::string direct_stage3_sentence =
        "I have some sentences, can you combine these sentences into one sentence to describe the style of speech "
        "with the same meaning? You can generate {n} different sentences and callout number. The sentences are: "
        "{sentences}";
    std::string direct_stage3_phrase =
        "I have some sentences, can you combine these sentences into one phrase to describe the style of speech "
        "with the same meaning? You can generate {n} different phrases and callout number. Please reduce to "
        "phrases. The sentences are: {sentences}";

    // Replaces fields with <dir>/<field>.txt where such a file exists.
    static Queries load(const std::filesystem::path& dir) {
        Queries q;
        for (auto& [name, field] : q.fields()) {
            const auto p = dir / (name + ".txt");
            if (!std::filesystem::exists(p)) continue;
            std::string s = read_text_file(p);
            while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
            *field = s;
        }
        return q;
    }

    std::vector<std::pair<std::string, std::string*>> fields() {
        return {{"stage1", &stage1},
                {"stage2", &stage2},
                {"stage3_sentence", &stage3_sentence},
                {"stage3_phrase", &stage3_phrase},
                {"direct_stage2", &direct_stage2},
                {"direct_stage3_sentence", &direct_stage3_sentence},
                {"direct_stage3_phrase", &direct_stage3_phrase}};
    }

    static std::string render(const std::string& tmpl, const std::map<std::string, std::string>& vars) {
        std::string out;
        std::size_t i = 0;
        while (i < tmpl.size()) {
            if (tmpl[i] == '{') {
                const auto close = tmpl.find('}', i);
                if (close != std::string::npos) {
                    const auto it = vars.find(tmpl.substr(i + 1, close - i - 1));
                    if (it != vars.end()) {
                        out += it->second;
                        i = close + 1;
                        continue;
                    }
                }
            }
            out.push_back(tmpl[i++]);
        }
        return out;
    }
};

}  // namespace promptvar::promptgen

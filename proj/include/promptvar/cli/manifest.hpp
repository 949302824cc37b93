#pragma once

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "promptvar/errors.hpp"
#include "promptvar/log.hpp"

namespace promptvar::cli {

inline std::string sha1_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha1(), nullptr) != 1)
        throw Error(ErrorKind::io, "sha1: digest failed");
    std::string out;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        out += buf;
    }
    return out;
}

inline std::string read_bytes(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const std::filesystem::path& p, const std::string& bytes) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw IoError("cannot write " + p.string());
    out << bytes;
}

// Content hash of a file, or of a directory as the hash of its sorted
// "relative-path hash" lines (git-style tree hash).
inline std::string content_hash(const std::filesystem::path& p) {
    if (std::filesystem::is_regular_file(p)) return sha1_hex(read_bytes(p));
    if (!std::filesystem::is_directory(p)) throw IoError("cannot hash missing path " + p.string());
    std::vector<std::string> lines;
    for (const auto& e : std::filesystem::recursive_directory_iterator(p))
        if (e.is_regular_file())
            lines.push_back(std::filesystem::relative(e.path(), p).generic_string() + " " + sha1_hex(read_bytes(e.path())));
    std::sort(lines.begin(), lines.end());
    std::string joined;
    for (const auto& l : lines) joined += l + "\n";
    return sha1_hex(joined);
}

// What a subcommand read and wrote. Stored at <run>/manifests/<command>.json.
// Paths are recorded relative to the run directory where possible, and no
// timestamps are kept, so identical runs produce identical manifests.
struct Manifest {
    std::string command;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::map<std::string, std::string> inputs;   // path → content hash
    std::map<std::string, std::string> outputs;  // path → content hash
    nlohmann::json extra = nlohmann::json::object();

    nlohmann::json to_json() const {
        return {{"command", command}, {"config_sha1", config_hash}, {"seed", seed},
                {"inputs", inputs},   {"outputs", outputs},         {"extra", extra}};
    }

    static Manifest from_json(const nlohmann::json& j) {
        Manifest m;
        m.command = j.at("command");
        m.config_hash = j.at("config_sha1");
        m.seed = j.at("seed");
        m.inputs = j.at("inputs").get<std::map<std::string, std::string>>();
        m.outputs = j.at("outputs").get<std::map<std::string, std::string>>();
        m.extra = j.value("extra", nlohmann::json::object());
        return m;
    }
};

class RunDir {
public:
    explicit RunDir(std::filesystem::path root) : root_(std::move(root)) { std::filesystem::create_directories(root_); }

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path operator/(const std::string& rel) const { return root_ / rel; }

    // Paths relative to the run directory, so moving a run does not change
    // its manifests.
    std::string label(const std::filesystem::path& p) const {
        const auto rel = std::filesystem::absolute(p).lexically_normal().lexically_relative(
            std::filesystem::absolute(root_).lexically_normal());
        return rel.empty() ? p.generic_string() : rel.generic_string();
    }

    std::filesystem::path manifest_path(const std::string& command) const { return root_ / "manifests" / (command + ".json"); }

    void write_manifest(Manifest m, const std::vector<std::filesystem::path>& inputs,
                        const std::vector<std::filesystem::path>& outputs) const {
        for (const auto& p : inputs) m.inputs[label(p)] = content_hash(p);
        for (const auto& p : outputs) m.outputs[label(p)] = content_hash(p);
        write_bytes(manifest_path(m.command), m.to_json().dump(2) + "\n");
    }

    // Throws DependencyError naming `command` when its outputs are missing;
    // warns when they were produced under a different configuration.
    void require(const std::string& command, const std::vector<std::filesystem::path>& paths,
                 const std::string& config_hash) const {
        for (const auto& p : paths)
            if (!std::filesystem::exists(p))
                throw DependencyError("missing " + label(p) + "; run `promptvar " + command + "` first");
        const auto mp = manifest_path(command);
        if (!std::filesystem::exists(mp)) return;
        const auto m = Manifest::from_json(nlohmann::json::parse(read_bytes(mp)));
        if (m.config_hash != config_hash)
            log::warn("cli", "outputs of `" + command + "` were produced with a different config (" +
                                 m.config_hash.substr(0, 12) + " vs " + config_hash.substr(0, 12) + "); they may be stale");
    }

private:
    std::filesystem::path root_;
};

}  // namespace promptvar::cli

#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "promptvar/errors.hpp"
#include "promptvar/nn/param.hpp"

namespace promptvar::nn {

inline constexpr const char* kCheckpointVersion = "promptvar-ckpt-1";

// {"version": "promptvar-ckpt-1", "<param>": {"shape": [r, c], "data": [...]}, ...}
inline nlohmann::json to_checkpoint_json(const ParamSet& params) {
    nlohmann::json j = nlohmann::json::object();
    j["version"] = kCheckpointVersion;
    for (const Param* p : params.all()) {
        j[p->name] = {{"shape", {p->value.rows(), p->value.cols()}}, {"data", p->value.data()}};
    }
    return j;
}

// Loads values into an already-constructed ParamSet. Every parameter in the
// set must be present with a matching shape.
inline void load_checkpoint_json(ParamSet& params, const nlohmann::json& j) {
    if (!j.is_object() || !j.contains("version") || j["version"] != kCheckpointVersion)
        throw ParseError(std::string("checkpoint: missing or unsupported version (expected ") +
                         kCheckpointVersion + ")");
    for (Param* p : params.all()) {
        if (!j.contains(p->name)) throw DataError("checkpoint: missing parameter " + p->name);
        const auto& e = j[p->name];
        const auto r = e.at("shape").at(0).get<std::size_t>();
        const auto c = e.at("shape").at(1).get<std::size_t>();
        if (r != p->value.rows() || c != p->value.cols())
            throw DimensionError("checkpoint: parameter " + p->name + " has shape " +
                                 Tensor2::shape_str(r, c) + ", model expects " + p->value.shape());
        p->value = Tensor2(r, c, e.at("data").get<std::vector<double>>());
        p->zero_grad();
    }
}

inline void save_checkpoint(const ParamSet& params, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out << to_checkpoint_json(params).dump() << '\n';
}

inline void load_checkpoint(ParamSet& params, const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read checkpoint " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("checkpoint " + path.string() + ": " + e.what());
    }
    load_checkpoint_json(params, j);
}

}  // namespace promptvar::nn

#pragma once

// Glue between the style module and the variation network.

#include <cmath>
#include <vector>

#include "promptvar/errors.hpp"
#include "promptvar/style/model.hpp"
#include "promptvar/style/train.hpp"
#include "promptvar/varnet/model.hpp"

namespace promptvar::workflow {

// (P, R) pairs from a trained style model: P from the prompt, R from the
// paired utterance.
inline std::vector<varnet::VarnetExample> varnet_examples(const style::StyleModel& sm,
                                                          const std::vector<style::StyleExample>& data) {
    std::vector<varnet::VarnetExample> out;
    out.reserve(data.size());
    for (const auto& e : data) out.push_back({sm.encode_prompt(e.prompt).repr, sm.encode_reference_input(e.ref_input, nullptr)});
    return out;
}

// Root mean square of all reference entries; used as data_std.
inline double reference_rms(const std::vector<varnet::VarnetExample>& data) {
    if (data.empty()) throw DataError("reference_rms: no examples");
    double sq = 0.0;
    std::size_t n = 0;
    for (const auto& e : data) {
        for (std::size_t i = 0; i < e.z0.size(); ++i) sq += e.z0[i] * e.z0[i];
        n += e.z0.size();
    }
    return std::sqrt(sq / static_cast<double>(n));
}

inline varnet::VarnetConfig varnet_config_for(const style::StyleModel& sm) {
    varnet::VarnetConfig c;
    c.d = sm.config().d;
    c.prompt_rows = sm.config().prompt_queries;
    c.reference_rows = sm.config().reference_queries;
    return c;
}

}  // namespace promptvar::workflow

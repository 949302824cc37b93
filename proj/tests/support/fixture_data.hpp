#pragma once

// Small tagged corpus and prompt dataset shared by the style, varnet and eval
// tests. Built once per test binary.

#include <filesystem>
#include <map>

#include "promptvar/audio/corpus.hpp"
#include "promptvar/audio/features.hpp"
#include "promptvar/promptgen/dataset.hpp"
#include "promptvar/promptgen/stages.hpp"
#include "promptvar/slu/tagger.hpp"
#include "promptvar/style/train.hpp"

namespace promptvar::testing {

inline const std::filesystem::path& fixture_dir() {
    static const auto p = std::filesystem::path(PROMPTVAR_ASSET_DIR) / "fixtures";
    return p;
}

struct TaggedCorpus {
    std::vector<audio::CorpusEntry> entries;
    std::vector<audio::FrameFeatures> features;
    slu::Calibration calibration;
    std::vector<promptgen::TaggedUtterance> tagged;
    std::map<std::string, std::size_t> index;  // audio name → position
};

inline TaggedCorpus make_tagged_corpus(std::size_t n, std::uint64_t seed, double seconds = 1.5) {
    TaggedCorpus c;
    audio::CorpusConfig cfg;
    cfg.utterances = n;
    cfg.seed = seed;
    cfg.seconds = seconds;
    c.entries = audio::synthetic_corpus(cfg);
    std::vector<slu::CorpusItem> items;
    for (const auto& e : c.entries) {
        c.features.push_back(audio::extract_features(audio::synth_voice(e.spec)));
        items.push_back(slu::corpus_item(c.features.back(), e.gender));
    }
    c.calibration = slu::calibrate(items);
    for (std::size_t i = 0; i < c.entries.size(); ++i) {
        c.tagged.push_back({c.entries[i].name, slu::tag_features(c.features[i], c.calibration)});
        c.index[c.entries[i].name] = i;
    }
    return c;
}

inline const TaggedCorpus& shared_corpus() {
    static const TaggedCorpus c = make_tagged_corpus(90, 7);
    return c;
}

inline promptgen::PipelineOutput fixture_pipeline(bool placeholder = true, std::uint64_t seed = 42) {
    promptgen::FixtureClient client(fixture_dir());
    promptgen::PipelineOptions opt;
    opt.placeholder = placeholder;
    nn::Rng rng(seed);
    return promptgen::run_stages(client, slu::AttributeSchema::default_schema(), opt, rng);
}

inline std::vector<style::StyleExample> style_examples(const TaggedCorpus& c, const std::vector<promptgen::PromptRecord>& rows,
                                                       std::size_t stride = 4) {
    std::vector<style::StyleExample> out;
    for (const auto& r : rows) {
        const std::size_t i = c.index.at(r.audio);
        out.push_back({r.prompt, style::reference_input(c.features[i], stride), r.profile.labels, r.attributes,
                       r.profile.measurements});
    }
    return out;
}

}  // namespace promptvar::testing

#pragma once

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "promptvar/audio/synth.hpp"
#include "promptvar/nn/rng.hpp"

namespace promptvar::audio {

struct CorpusEntry {
    std::string name;
    VoiceSpec spec;
    std::string gender;  // "male" / "female"
};

struct CorpusConfig {
    std::size_t utterances = 240;
    double seconds = 2.0;
    double male_f0_lo = 90.0, male_f0_hi = 150.0;
    double female_f0_lo = 170.0, female_f0_hi = 260.0;
    double amp_lo = 0.05, amp_hi = 0.6;  // log-uniform
    double rate_lo = 2.5, rate_hi = 6.5;
    std::uint64_t seed = 42;
};

// Voices with independently drawn gender, pitch, loudness and syllable rate.
// Male voices get a steeper spectral tilt, so gender is also visible in the
// spectral centroid.
inline std::vector<CorpusEntry> synthetic_corpus(const CorpusConfig& cfg) {
    nn::Rng rng(cfg.seed);
    std::vector<CorpusEntry> out;
    for (std::size_t i = 0; i < cfg.utterances; ++i) {
        CorpusEntry e;
        char name[32];
        std::snprintf(name, sizeof name, "utt%04zu.wav", i);
        e.name = name;
        const bool male = rng.uniform() < 0.5;
        e.gender = male ? "male" : "female";
        e.spec.f0 = male ? rng.uniform(cfg.male_f0_lo, cfg.male_f0_hi) : rng.uniform(cfg.female_f0_lo, cfg.female_f0_hi);
        e.spec.tilt = male ? rng.uniform(1.2, 1.5) : rng.uniform(0.8, 1.1);
        e.spec.amplitude = std::exp(rng.uniform(std::log(cfg.amp_lo), std::log(cfg.amp_hi)));
        e.spec.syllable_rate = rng.uniform(cfg.rate_lo, cfg.rate_hi);
        e.spec.seconds = cfg.seconds;
        e.spec.seed = rng.next_u64();
        out.push_back(e);
    }
    return out;
}

// Utterances of a few fixed speakers with small per-utterance jitter.
inline std::vector<CorpusEntry> speaker_corpus(const std::vector<VoiceSpec>& speakers, std::size_t per_speaker,
                                               double jitter, std::uint64_t seed) {
    nn::Rng rng(seed);
    std::vector<CorpusEntry> out;
    for (std::size_t s = 0; s < speakers.size(); ++s) {
        for (std::size_t i = 0; i < per_speaker; ++i) {
            CorpusEntry e;
            e.name = "spk" + std::to_string(s) + "_" + std::to_string(i) + ".wav";
            e.spec = speakers[s];
            e.spec.f0 *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.spec.amplitude *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.spec.syllable_rate *= 1.0 + jitter * rng.uniform(-1.0, 1.0);
            e.spec.seed = rng.next_u64();
            e.gender = std::to_string(s);
            out.push_back(e);
        }
    }
    return out;
}

}  // namespace promptvar::audio

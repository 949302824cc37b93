#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "promptvar/audio/wav.hpp"
#include "promptvar/nn/rng.hpp"

namespace promptvar::audio {

// Test-signal generators. These stand in for recorded speech in fixtures and
// in the demo corpus.

inline Waveform sine(double freq, double amplitude, double seconds, int sr = 16000) {
    Waveform w;
    w.sample_rate = sr;
    const auto n = static_cast<std::size_t>(std::lround(seconds * sr));
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i)
        w.samples[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq * static_cast<double>(i) / sr);
    return w;
}

inline Waveform sawtooth(double freq, double amplitude, double seconds, int sr = 16000) {
    Waveform w;
    w.sample_rate = sr;
    const auto n = static_cast<std::size_t>(std::lround(seconds * sr));
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double ph = freq * static_cast<double>(i) / sr;
        w.samples[i] = amplitude * (2.0 * (ph - std::floor(ph)) - 1.0);
    }
    return w;
}

inline Waveform silence(double seconds, int sr = 16000) {
    Waveform w;
    w.sample_rate = sr;
    w.samples.assign(static_cast<std::size_t>(std::lround(seconds * sr)), 0.0);
    return w;
}

// Raised-cosine syllable envelope, 0 at t=0 and peaking at (k+½)/rate.
inline double syllable_envelope(double t, double rate) { return 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * rate * t); }

// White noise amplitude-modulated by the syllable envelope.
inline Waveform modulated_noise(double rate, double amplitude, double seconds, std::uint64_t seed, int sr = 16000) {
    nn::Rng rng(seed);
    Waveform w;
    w.sample_rate = sr;
    const auto n = static_cast<std::size_t>(std::lround(seconds * sr));
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / sr;
        w.samples[i] = std::clamp(amplitude * syllable_envelope(t, rate) * rng.uniform(-1.0, 1.0), -1.0, 1.0);
    }
    return w;
}

struct VoiceSpec {
    double f0 = 120.0;
    double amplitude = 0.3;  // peak of the envelope
    double syllable_rate = 4.0;
    double seconds = 1.5;
    // Spectral tilt exponent: harmonic k has weight k^-tilt. Lower = brighter.
    double tilt = 1.0;
    double vibrato = 0.01;  // relative f0 excursion at 5 Hz
    double noise = 0.01;  // breath noise relative to amplitude
    std::uint64_t seed = 0;
    int sample_rate = 16000;
};

// Harmonic "voice": band-limited glottal-like source under a syllable
// envelope, with light vibrato and breath noise.
inline Waveform synth_voice(const VoiceSpec& v) {
    nn::Rng rng(v.seed);
    Waveform w;
    w.sample_rate = v.sample_rate;
    const auto n = static_cast<std::size_t>(std::lround(v.seconds * v.sample_rate));
    w.samples.resize(n);
    const double nyq_cap = std::min(4000.0, 0.45 * v.sample_rate);
    const int harmonics = std::max(1, static_cast<int>(nyq_cap / (v.f0 * (1.0 + v.vibrato))));
    std::vector<double> weight(static_cast<std::size_t>(harmonics) + 1, 0.0);
    double norm = 0.0;
    for (int k = 1; k <= harmonics; ++k) {
        weight[static_cast<std::size_t>(k)] = std::pow(k, -v.tilt);
        norm += weight[static_cast<std::size_t>(k)];
    }
    const double phase_vib = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double phase = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / v.sample_rate;
        const double f = v.f0 * (1.0 + v.vibrato * std::sin(2.0 * std::numbers::pi * 5.0 * t + phase_vib));
        phase += 2.0 * std::numbers::pi * f / v.sample_rate;
        double s = 0.0;
        for (int k = 1; k <= harmonics; ++k) s += weight[static_cast<std::size_t>(k)] * std::sin(k * phase);
        s /= norm;
        s += v.noise * rng.uniform(-1.0, 1.0);
        w.samples[i] = std::clamp(v.amplitude * syllable_envelope(t, v.syllable_rate) * s * 1.6, -1.0, 1.0);
    }
    return w;
}

// Plays the waveform back `factor` times faster by linear-interpolated
// resampling at the original sample rate.
inline Waveform speed_up(const Waveform& w, double factor) {
    Waveform out;
    out.sample_rate = w.sample_rate;
    const auto n = static_cast<std::size_t>(std::floor(static_cast<double>(w.samples.size() - 1) / factor)) + 1;
    out.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double pos = static_cast<double>(i) * factor;
        const auto j = static_cast<std::size_t>(pos);
        const double frac = pos - static_cast<double>(j);
        const double a = w.samples[j];
        const double b = j + 1 < w.samples.size() ? w.samples[j + 1] : a;
        out.samples[i] = a + frac * (b - a);
    }
    return out;
}

inline Waveform scaled(Waveform w, double k) {
    for (double& s : w.samples) s *= k;
    return w;
}

}  // namespace promptvar::audio

#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/audio/fft.hpp"
#include "promptvar/audio/wav.hpp"
#include "promptvar/errors.hpp"

namespace promptvar::audio {

struct FeatureConfig {
    double win = 0.025;
    double hop = 0.010;
    double f0_min = 50.0;
    double f0_max = 600.0;
    double voicing_threshold = 0.3;
    // Among autocorrelation peaks, the shortest lag within this fraction of
    // the best peak wins; suppresses sub-octave picks.
    double octave_ratio = 0.9;
    // A frame is active when its RMS exceeds this fraction of the loudest frame.
    double active_rel = 0.05;
    double active_abs = 1e-6;
};

struct Frame {
    double f0 = 0.0;  // Hz, 0 when unvoiced
    double rms = 0.0;
    double log_energy = 0.0;  // dB
    double spectral_centroid = 0.0;  // Hz
    double zero_crossing_rate = 0.0;  // crossings per second
    bool active = false;
};

struct FrameFeatures {
    std::vector<Frame> frames;
    double frame_hop = 0.010;
    double frame_win = 0.025;

    std::size_t size() const { return frames.size(); }
    std::size_t voiced_count() const {
        return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const Frame& f) { return f.f0 > 0.0; }));
    }
    std::size_t active_count() const {
        return static_cast<std::size_t>(std::count_if(frames.begin(), frames.end(), [](const Frame& f) { return f.active; }));
    }
};

inline std::size_t frame_count(std::size_t len, std::size_t win, std::size_t hop) {
    if (len < win) return 0;
    return (len - win) / hop + 1;
}

namespace detail {

// Normalised autocorrelation pitch for one frame. Returns 0 when unvoiced.
inline double frame_f0(const std::vector<double>& x, int sr, const FeatureConfig& cfg) {
    const std::size_t n = x.size();
    const std::size_t lag_min = static_cast<std::size_t>(std::floor(sr / cfg.f0_max));
    const std::size_t lag_max = std::min<std::size_t>(static_cast<std::size_t>(std::ceil(sr / cfg.f0_min)), n - 2);
    if (lag_min < 2 || lag_min + 2 >= lag_max) return 0.0;
    std::vector<double> r(lag_max + 2, 0.0);
    for (std::size_t tau = lag_min - 1; tau <= lag_max + 1 && tau < n; ++tau) {
        double xy = 0.0, xx = 0.0, yy = 0.0;
        for (std::size_t i = 0; i + tau < n; ++i) {
            xy += x[i] * x[i + tau];
            xx += x[i] * x[i];
            yy += x[i + tau] * x[i + tau];
        }
        const double den = std::sqrt(xx * yy);
        r[tau] = den > 0.0 ? xy / den : 0.0;
    }
    double best = -1.0;
    for (std::size_t tau = lag_min; tau <= lag_max; ++tau) best = std::max(best, r[tau]);
    if (best < cfg.voicing_threshold) return 0.0;
    for (std::size_t tau = lag_min; tau <= lag_max; ++tau) {
        const bool peak = r[tau] >= r[tau - 1] && r[tau] >= r[tau + 1];
        if (!peak || r[tau] < cfg.octave_ratio * best) continue;
        // Parabolic refinement of the lag.
        const double a = r[tau - 1], b = r[tau], c = r[tau + 1];
        const double den = a - 2.0 * b + c;
        double shift = den != 0.0 ? 0.5 * (a - c) / den : 0.0;
        shift = std::clamp(shift, -0.5, 0.5);
        const double f0 = sr / (static_cast<double>(tau) + shift);
        if (f0 < cfg.f0_min || f0 > cfg.f0_max) return 0.0;
        return f0;
    }
    return 0.0;
}

}  // namespace detail

// Frame-level acoustic measurements over a sliding window.
inline FrameFeatures extract_features(const Waveform& w, const FeatureConfig& cfg = {}) {
    if (!supported_rate(w.sample_rate)) throw DataError("unsupported sample rate " + std::to_string(w.sample_rate));
    const int sr = w.sample_rate;
    const auto win = static_cast<std::size_t>(std::lround(cfg.win * sr));
    const auto hop = static_cast<std::size_t>(std::lround(cfg.hop * sr));
    const std::size_t count = frame_count(w.samples.size(), win, hop);
    if (count == 0)
        throw DataError("waveform too short: " + std::to_string(w.samples.size()) + " samples, need at least " +
                        std::to_string(win) + " for one frame");

    FrameFeatures out;
    out.frame_hop = static_cast<double>(hop) / sr;
    out.frame_win = static_cast<double>(win) / sr;
    out.frames.resize(count);
    const std::size_t nfft = next_pow2(win);
    std::vector<double> hann(win);
    for (std::size_t i = 0; i < win; ++i) hann[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / (win - 1));

    std::vector<double> buf(win);
    for (std::size_t f = 0; f < count; ++f) {
        const std::size_t start = f * hop;
        double mean = 0.0, sq = 0.0;
        std::size_t crossings = 0;
        for (std::size_t i = 0; i < win; ++i) {
            const double s = w.samples[start + i];
            mean += s;
            sq += s * s;
            if (i > 0 && ((s >= 0.0) != (w.samples[start + i - 1] >= 0.0))) ++crossings;
        }
        mean /= static_cast<double>(win);
        Frame& fr = out.frames[f];
        fr.rms = std::sqrt(sq / static_cast<double>(win));
        fr.log_energy = 10.0 * std::log10(sq / static_cast<double>(win) + 1e-12);
        fr.zero_crossing_rate = static_cast<double>(crossings) / out.frame_win;
        for (std::size_t i = 0; i < win; ++i) buf[i] = w.samples[start + i] - mean;
        fr.f0 = detail::frame_f0(buf, sr, cfg);
        for (std::size_t i = 0; i < win; ++i) buf[i] *= hann[i];
        const auto mag = magnitude_spectrum(buf, nfft);
        double num = 0.0, den = 0.0;
        for (std::size_t k = 1; k < mag.size(); ++k) {
            const double hz = static_cast<double>(k) * sr / static_cast<double>(nfft);
            num += hz * mag[k];
            den += mag[k];
        }
        fr.spectral_centroid = den > 1e-12 ? num / den : 0.0;
    }

    double max_rms = 0.0;
    for (const auto& fr : out.frames) max_rms = std::max(max_rms, fr.rms);
    for (auto& fr : out.frames) {
        fr.active = fr.rms > std::max(cfg.active_abs, cfg.active_rel * max_rms);
        if (!fr.active) fr.f0 = 0.0;
    }
    return out;
}

struct RateEstimate {
    double rate = 0.0;  // syllables per second of speech-active time
    bool silent = false;
    std::size_t peaks = 0;
    double active_seconds = 0.0;
};

struct RateConfig {
    double lowpass_hz = 8.0;
    double highpass_hz = 0.5;
    double max_rate_hz = 10.0;  // minimum peak spacing
    double threshold_std = 0.3;
    double bridge_gap = 0.15;  // inactive runs shorter than this count as speech
};

// Syllable-rate proxy: peaks of the band-limited frame-energy envelope,
// divided by speech-active duration.
inline RateEstimate speaking_rate(const FrameFeatures& f, const RateConfig& cfg = {}) {
    RateEstimate est;
    const std::size_t n = f.size();
    const double fr = 1.0 / f.frame_hop;

    std::vector<bool> active(n);
    for (std::size_t i = 0; i < n; ++i) active[i] = f.frames[i].active;
    if (std::none_of(active.begin(), active.end(), [](bool b) { return b; })) {
        est.silent = true;
        return est;
    }
    // Bridge short interior gaps (the troughs between syllables).
    const auto bridge = static_cast<std::size_t>(std::lround(cfg.bridge_gap * fr));
    std::size_t i = 0;
    while (i < n) {
        if (active[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !active[j]) ++j;
        if (i > 0 && j < n && j - i <= bridge)
            for (std::size_t k = i; k < j; ++k) active[k] = true;
        i = j;
    }
    const auto active_frames = static_cast<std::size_t>(std::count(active.begin(), active.end(), true));
    est.active_seconds = static_cast<double>(active_frames) * f.frame_hop;

    // Low-pass: normalised Hann kernel whose first null sits at 2×lowpass_hz.
    std::size_t len = static_cast<std::size_t>(std::lround(2.0 * fr / (2.0 * cfg.lowpass_hz)));
    len |= 1u;
    std::vector<double> kernel(len);
    for (std::size_t k = 0; k < len; ++k)
        kernel[k] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (k + 1) / (len + 1));
    std::vector<double> smooth(n, 0.0);
    const auto half = static_cast<std::ptrdiff_t>(len / 2);
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0, wsum = 0.0;
        for (std::ptrdiff_t k = -half; k <= half; ++k) {
            const auto idx = static_cast<std::ptrdiff_t>(t) + k;
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) continue;
            const double wk = kernel[static_cast<std::size_t>(k + half)];
            acc += wk * f.frames[static_cast<std::size_t>(idx)].rms;
            wsum += wk;
        }
        smooth[t] = acc / wsum;
    }
    // High-pass: subtract a centred moving average spanning 1/highpass_hz.
    const auto base_half = static_cast<std::ptrdiff_t>(std::lround(fr / cfg.highpass_hz / 2.0));
    std::vector<double> band(n);
    for (std::size_t t = 0; t < n; ++t) {
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::ptrdiff_t k = -base_half; k <= base_half; ++k) {
            const auto idx = static_cast<std::ptrdiff_t>(t) + k;
            if (idx < 0 || idx >= static_cast<std::ptrdiff_t>(n)) continue;
            acc += smooth[static_cast<std::size_t>(idx)];
            ++cnt;
        }
        band[t] = smooth[t] - acc / static_cast<double>(cnt);
    }
    double mean = 0.0, var = 0.0;
    for (double v : band) mean += v;
    mean /= static_cast<double>(n);
    for (double v : band) var += (v - mean) * (v - mean);
    const double thr = cfg.threshold_std * std::sqrt(var / static_cast<double>(n));
    const auto min_gap = static_cast<std::size_t>(std::lround(fr / cfg.max_rate_hz));

    std::size_t last = 0;
    bool have_last = false;
    for (std::size_t t = 1; t + 1 < n; ++t) {
        if (!active[t]) continue;
        if (band[t] <= thr || band[t] < band[t - 1] || band[t] < band[t + 1]) continue;
        if (band[t] == band[t - 1]) continue;  // plateau: count its first sample only
        if (have_last && t - last < min_gap) {
            continue;
        }
        ++est.peaks;
        last = t;
        have_last = true;
    }
    est.rate = est.active_seconds > 0.0 ? static_cast<double>(est.peaks) / est.active_seconds : 0.0;
    return est;
}

inline nlohmann::json frame_to_json(const Frame& fr, std::size_t index, double hop) {
    return {{"frame", index},
            {"time", static_cast<double>(index) * hop},
            {"f0", fr.f0},
            {"rms", fr.rms},
            {"log_energy", fr.log_energy},
            {"spectral_centroid", fr.spectral_centroid},
            {"zero_crossing_rate", fr.zero_crossing_rate}};
}

// One JSON object per frame, newline separated.
inline std::string features_to_jsonl(const FrameFeatures& f) {
    std::string out;
    for (std::size_t i = 0; i < f.size(); ++i) {
        out += frame_to_json(f.frames[i], i, f.frame_hop).dump();
        out += '\n';
    }
    return out;
}

}  // namespace promptvar::audio

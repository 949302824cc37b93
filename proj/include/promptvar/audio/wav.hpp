#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "promptvar/errors.hpp"

namespace promptvar::audio {

inline constexpr std::array<int, 6> kSupportedRates{8000, 16000, 22050, 24000, 44100, 48000};

struct Waveform {
    std::vector<double> samples;  // mono, nominally in [-1, 1]
    int sample_rate = 16000;

    double duration() const { return static_cast<double>(samples.size()) / sample_rate; }
};

inline bool supported_rate(int sr) {
    return std::find(kSupportedRates.begin(), kSupportedRates.end(), sr) != kSupportedRates.end();
}

namespace detail {

inline std::uint32_t le32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}
inline std::uint16_t le16(const unsigned char* p) { return std::uint16_t(p[0] | (p[1] << 8)); }

inline void put32(std::string& s, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline void put16(std::string& s, std::uint16_t v) {
    s.push_back(static_cast<char>(v & 0xFF));
    s.push_back(static_cast<char>(v >> 8));
}

}  // namespace detail

// Decodes RIFF/WAVE PCM16 or IEEE float32 (plain or extensible); channels
// are averaged into mono.
inline Waveform decode_wav(const std::vector<unsigned char>& bytes, const std::string& origin = "<memory>") {
    using detail::le16;
    using detail::le32;
    if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
        throw ParseError(origin + ": not a RIFF/WAVE file");
    std::size_t pos = 12;
    int format = -1, channels = 0, rate = 0, bits = 0;
    const unsigned char* data = nullptr;
    std::size_t data_len = 0;
    while (pos + 8 <= bytes.size()) {
        const unsigned char* hdr = bytes.data() + pos;
        const std::uint32_t len = le32(hdr + 4);
        const std::size_t body = pos + 8;
        if (std::memcmp(hdr, "fmt ", 4) == 0) {
            if (len < 16 || body + len > bytes.size()) throw ParseError(origin + ": truncated fmt chunk");
            format = le16(bytes.data() + body);
            channels = le16(bytes.data() + body + 2);
            rate = static_cast<int>(le32(bytes.data() + body + 4));
            bits = le16(bytes.data() + body + 14);
            if (format == 0xFFFE) {
                if (len < 40) throw ParseError(origin + ": truncated extensible fmt chunk");
                format = le16(bytes.data() + body + 24);
            }
        } else if (std::memcmp(hdr, "data", 4) == 0) {
            if (body + len > bytes.size()) throw ParseError(origin + ": data chunk truncated (" + std::to_string(len) +
                                                            " bytes declared, " + std::to_string(bytes.size() - body) + " present)");
            data = bytes.data() + body;
            data_len = len;
        }
        pos = body + len + (len & 1u);
    }
    if (format < 0) throw ParseError(origin + ": missing fmt chunk");
    if (data == nullptr) throw ParseError(origin + ": missing data chunk");
    if (channels < 1) throw ParseError(origin + ": invalid channel count");
    const bool pcm16 = format == 1 && bits == 16;
    const bool f32 = format == 3 && bits == 32;
    if (!pcm16 && !f32)
        throw DataError(origin + ": unsupported format (codec " + std::to_string(format) + ", " + std::to_string(bits) +
                        " bits); expected PCM16 or float32");
    if (!supported_rate(rate)) throw DataError(origin + ": unsupported sample rate " + std::to_string(rate));

    const std::size_t bytes_per = pcm16 ? 2 : 4;
    const std::size_t frame_bytes = bytes_per * static_cast<std::size_t>(channels);
    const std::size_t frames = data_len / frame_bytes;
    Waveform w;
    w.sample_rate = rate;
    w.samples.resize(frames);
    for (std::size_t i = 0; i < frames; ++i) {
        double acc = 0.0;
        for (int c = 0; c < channels; ++c) {
            const unsigned char* p = data + i * frame_bytes + static_cast<std::size_t>(c) * bytes_per;
            if (pcm16) {
                acc += static_cast<std::int16_t>(le16(p)) / 32768.0;
            } else {
                const std::uint32_t u = le32(p);
                float f;
                std::memcpy(&f, &u, sizeof f);
                acc += static_cast<double>(f);
            }
        }
        w.samples[i] = acc / channels;
    }
    return w;
}

inline Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_wav(bytes, path.string());
}

enum class SampleFormat { pcm16, float32 };

inline std::string encode_wav(const Waveform& w, SampleFormat fmt = SampleFormat::pcm16, int channels = 1) {
    using detail::put16;
    using detail::put32;
    const std::uint16_t bits = fmt == SampleFormat::pcm16 ? 16 : 32;
    const std::uint32_t block = static_cast<std::uint32_t>(channels) * bits / 8;
    const std::uint32_t data_len = static_cast<std::uint32_t>(w.samples.size()) * block;
    std::string s;
    s.reserve(44 + data_len);
    s += "RIFF";
    put32(s, 36 + data_len);
    s += "WAVEfmt ";
    put32(s, 16);
    put16(s, fmt == SampleFormat::pcm16 ? 1 : 3);
    put16(s, static_cast<std::uint16_t>(channels));
    put32(s, static_cast<std::uint32_t>(w.sample_rate));
    put32(s, static_cast<std::uint32_t>(w.sample_rate) * block);
    put16(s, static_cast<std::uint16_t>(block));
    put16(s, bits);
    s += "data";
    put32(s, data_len);
    for (double x : w.samples) {
        for (int c = 0; c < channels; ++c) {
            if (fmt == SampleFormat::pcm16) {
                const double clipped = std::clamp(x, -1.0, 1.0);
                put16(s, static_cast<std::uint16_t>(static_cast<std::int16_t>(std::lround(clipped * 32767.0))));
            } else {
                const float f = static_cast<float>(x);
                std::uint32_t u;
                std::memcpy(&u, &f, sizeof u);
                put32(s, u);
            }
        }
    }
    return s;
}

inline void write_wav(const std::filesystem::path& path, const Waveform& w, SampleFormat fmt = SampleFormat::pcm16) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    const std::string bytes = encode_wav(w, fmt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace promptvar::audio

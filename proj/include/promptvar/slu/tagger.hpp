#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/audio/features.hpp"
#include "promptvar/log.hpp"
#include "promptvar/slu/schema.hpp"

namespace promptvar::slu {

// Per-utterance summary of frame features. f0 and centroid are averaged over
// voiced frames (centroid falls back to active frames); RMS over all frames.
// `silent` is set when no frame is speech-active.
inline Measurements measure(const audio::FrameFeatures& f, bool* silent = nullptr) {
    Measurements m;
    double f0 = 0, cent = 0, rms = 0;
    std::size_t voiced = 0;
    for (const auto& fr : f.frames) {
        rms += fr.rms;
        if (fr.f0 > 0) {
            f0 += fr.f0;
            cent += fr.spectral_centroid;
            ++voiced;
        }
    }
    m.rms_mean = f.size() ? rms / static_cast<double>(f.size()) : 0.0;
    if (voiced > 0) {
        m.f0_mean = f0 / static_cast<double>(voiced);
        m.spectral_centroid_mean = cent / static_cast<double>(voiced);
    } else {
        double c = 0;
        std::size_t n = 0;
        for (const auto& fr : f.frames)
            if (fr.active) {
                c += fr.spectral_centroid;
                ++n;
            }
        m.spectral_centroid_mean = n ? c / static_cast<double>(n) : 0.0;
    }
    const auto rate = audio::speaking_rate(f);
    m.rate = rate.rate;
    if (silent != nullptr) *silent = rate.silent;
    return m;
}

// Linearly interpolated percentile (q in [0,1]) of unsorted values.
inline double percentile(std::vector<double> v, double q) {
    if (v.empty()) throw DataError("percentile of empty set");
    std::sort(v.begin(), v.end());
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// Ordered cut points for one continuous attribute; value ≤ cuts[i] maps to
// class i (ties go to the lower class).
struct Cuts {
    std::string measurement;
    std::vector<double> cuts;
    bool degenerate = false;

    std::size_t bucket(double value) const {
        for (std::size_t i = 0; i < cuts.size(); ++i)
            if (value <= cuts[i]) return i;
        return cuts.size();
    }
};

// Logistic model for the two-class gender attribute over standardised
// {f0_mean, spectral_centroid_mean}. P(second class) = σ(w0 + w_f0 z_f0 + w_c z_c).
struct GenderModel {
    double mu_f0 = 165.0, sd_f0 = 1.0;
    double mu_c = 0.0, sd_c = 1.0;
    double w0 = 0.0, w_f0 = 1.0, w_c = 0.0;
    bool fitted = false;

    double logit(const Measurements& m, bool unvoiced) const {
        double z = w0 + w_c * (m.spectral_centroid_mean - mu_c) / sd_c;
        if (!unvoiced) z += w_f0 * (m.f0_mean - mu_f0) / sd_f0;
        return z;
    }
};

// Default measurement backing each continuous attribute of the default schema.
inline const std::map<std::string, std::string>& default_measurement_map() {
    static const std::map<std::string, std::string> m{{"pitch", "f0_mean"}, {"speed", "rate"}, {"volume", "rms_mean"}};
    return m;
}

struct Calibration {
    AttributeSchema schema = AttributeSchema::default_schema();
    std::string gender_attribute = "gender";
    std::map<std::string, Cuts> continuous;  // attribute → cuts
    GenderModel gender;

    nlohmann::json to_json() const {
        nlohmann::json c = nlohmann::json::object();
        for (const auto& [name, cut] : continuous)
            c[name] = {{"measurement", cut.measurement}, {"cuts", cut.cuts}, {"degenerate", cut.degenerate}};
        return {{"schema", schema.to_json()},
                {"gender_attribute", gender_attribute},
                {"continuous", c},
                {"gender_model",
                 {{"mu_f0", gender.mu_f0}, {"sd_f0", gender.sd_f0}, {"mu_c", gender.mu_c}, {"sd_c", gender.sd_c},
                  {"w0", gender.w0}, {"w_f0", gender.w_f0}, {"w_c", gender.w_c}, {"fitted", gender.fitted}}}};
    }

    static Calibration from_json(const nlohmann::json& j) {
        Calibration cal;
        cal.schema = AttributeSchema::from_json(j.at("schema"));
        cal.gender_attribute = j.at("gender_attribute").get<std::string>();
        for (const auto& [name, c] : j.at("continuous").items())
            cal.continuous[name] = Cuts{c.at("measurement").get<std::string>(), c.at("cuts").get<std::vector<double>>(),
                                        c.at("degenerate").get<bool>()};
        const auto& g = j.at("gender_model");
        cal.gender = GenderModel{g.at("mu_f0").get<double>(), g.at("sd_f0").get<double>(), g.at("mu_c").get<double>(),
                                 g.at("sd_c").get<double>(), g.at("w0").get<double>(), g.at("w_f0").get<double>(),
                                 g.at("w_c").get<double>(), g.at("fitted").get<bool>()};
        return cal;
    }
};

struct CorpusItem {
    Measurements measurements;
    bool silent = false;
    std::optional<std::string> gender;  // known label, if any
};

inline CorpusItem corpus_item(const audio::FrameFeatures& f, std::optional<std::string> gender = std::nullopt) {
    CorpusItem it;
    it.measurements = measure(f, &it.silent);
    it.gender = std::move(gender);
    return it;
}

inline constexpr double kFallbackGenderF0 = 165.0;

namespace detail {

inline GenderModel fit_gender(const std::vector<CorpusItem>& items, const std::string& positive_class) {
    std::vector<double> f0, cent, y;
    for (const auto& it : items) {
        if (!it.gender || it.silent || it.measurements.f0_mean <= 0.0) continue;
        f0.push_back(it.measurements.f0_mean);
        cent.push_back(it.measurements.spectral_centroid_mean);
        y.push_back(*it.gender == positive_class ? 1.0 : 0.0);
    }
    GenderModel g;
    const auto n = static_cast<double>(y.size());
    auto stats = [&](const std::vector<double>& v, double& mu, double& sd) {
        mu = 0;
        for (double x : v) mu += x;
        mu /= n;
        double var = 0;
        for (double x : v) var += (x - mu) * (x - mu);
        sd = std::sqrt(var / n);
        if (sd < 1e-9) sd = 1.0;
    };
    stats(f0, g.mu_f0, g.sd_f0);
    stats(cent, g.mu_c, g.sd_c);
    g.w0 = g.w_f0 = g.w_c = 0.0;
    const double lr = 0.5, l2 = 1e-3;
    for (int it = 0; it < 2000; ++it) {
        double g0 = 0, gf = 0, gc = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double zf = (f0[i] - g.mu_f0) / g.sd_f0, zc = (cent[i] - g.mu_c) / g.sd_c;
            const double p = 1.0 / (1.0 + std::exp(-(g.w0 + g.w_f0 * zf + g.w_c * zc)));
            g0 += p - y[i];
            gf += (p - y[i]) * zf;
            gc += (p - y[i]) * zc;
        }
        g.w0 -= lr * g0 / n;
        g.w_f0 -= lr * (gf / n + l2 * g.w_f0);
        g.w_c -= lr * (gc / n + l2 * g.w_c);
    }
    g.fitted = true;
    return g;
}

}  // namespace detail

// Corpus-relative class boundaries: quantile cuts for every continuous
// attribute, and a gender classifier fitted when labels are available.
inline Calibration calibrate(const std::vector<CorpusItem>& corpus,
                             const AttributeSchema& schema = AttributeSchema::default_schema(),
                             const std::map<std::string, std::string>& measurement_map = default_measurement_map(),
                             const std::string& gender_attribute = "gender") {
    if (corpus.empty()) throw DataError("calibration: empty corpus");
    if (corpus.size() < 30)
        log::warn("slu", "calibration corpus has " + std::to_string(corpus.size()) +
                             " utterances; at least 30 are recommended for stable cut points");
    Calibration cal;
    cal.schema = schema;
    cal.gender_attribute = gender_attribute;
    for (const auto& attr : schema.attributes()) {
        if (attr.name == gender_attribute) continue;
        const auto it = measurement_map.find(attr.name);
        if (it == measurement_map.end())
            throw ValidationError("calibration: no measurement source for attribute '" + attr.name + "'");
        std::vector<double> values;
        for (const auto& item : corpus)
            if (!item.silent && !(it->second == "f0_mean" && item.measurements.f0_mean <= 0.0))
                values.push_back(item.measurements.get(it->second));
        if (values.empty()) throw DataError("calibration: every utterance is silent");
        Cuts c;
        c.measurement = it->second;
        const std::size_t k = attr.classes.size();
        for (std::size_t i = 1; i < k; ++i) c.cuts.push_back(percentile(values, static_cast<double>(i) / static_cast<double>(k)));
        for (std::size_t i = 1; i < c.cuts.size(); ++i)
            if (!(c.cuts[i - 1] < c.cuts[i])) c.degenerate = true;
        if (c.degenerate)
            log::warn("slu", "degenerate cut points for '" + attr.name + "'; every utterance will be labeled '" +
                                 attr.classes[k / 2] + "'");
        cal.continuous[attr.name] = std::move(c);
    }
    if (schema.index_of(gender_attribute)) {
        const auto& g = schema.get(gender_attribute);
        if (g.classes.size() != 2) throw ValidationError("gender attribute must have exactly two classes");
        const bool labeled = std::any_of(corpus.begin(), corpus.end(), [](const CorpusItem& c) { return c.gender.has_value(); });
        if (labeled) {
            bool seen[2] = {false, false};
            for (const auto& c : corpus)
                if (c.gender) {
                    const auto idx = schema.class_index(gender_attribute, *c.gender);
                    if (!idx) throw ValidationError("unknown gender label '" + *c.gender + "'");
                    seen[*idx] = true;
                }
            if (!seen[0] || !seen[1]) throw DataError("calibration: gender labels cover only one class");
            cal.gender = detail::fit_gender(corpus, g.classes[1]);
        } else {
            cal.gender = GenderModel{};
            cal.gender.mu_f0 = kFallbackGenderF0;
        }
    }
    return cal;
}

// Labels for one utterance given its measurements.
inline AttributeProfile tag_measurements(const Measurements& m, bool silent, const Calibration& cal) {
    AttributeProfile p;
    p.measurements = m;
    p.silent = silent;
    const bool unvoiced = m.f0_mean <= 0.0;
    for (const auto& attr : cal.schema.attributes()) {
        if (attr.name == cal.gender_attribute) {
            // Unvoiced: centroid term only. A logit of exactly 0 goes to the first class.
            p.labels[attr.name] = attr.classes[cal.gender.logit(m, unvoiced) > 0.0 ? 1 : 0];
            continue;
        }
        const auto it = cal.continuous.find(attr.name);
        if (it == cal.continuous.end()) throw DependencyError("calibration has no cut points for '" + attr.name + "'");
        const Cuts& c = it->second;
        if (silent || c.degenerate || (c.measurement == "f0_mean" && unvoiced)) {
            p.labels[attr.name] = attr.classes[attr.classes.size() / 2];
            continue;
        }
        p.labels[attr.name] = attr.classes[c.bucket(m.get(c.measurement))];
    }
    return p;
}

inline AttributeProfile tag_features(const audio::FrameFeatures& f, const Calibration& cal) {
    bool silent = false;
    const Measurements m = measure(f, &silent);
    return tag_measurements(m, silent, cal);
}

inline AttributeProfile tag(const audio::Waveform& w, const Calibration& cal) {
    return tag_features(audio::extract_features(w), cal);
}

inline nlohmann::json profile_to_json(const std::string& audio_path, const AttributeProfile& p) {
    nlohmann::json j{{"audio", audio_path}, {"labels", p.labels}, {"measurements", p.measurements.to_json()}};
    if (p.silent) j["silent"] = true;
    return j;
}

inline AttributeProfile profile_from_json(const nlohmann::json& j) {
    AttributeProfile p;
    p.labels = j.at("labels").get<Labels>();
    p.measurements = Measurements::from_json(j.at("measurements"));
    p.silent = j.value("silent", false);
    return p;
}

}  // namespace promptvar::slu

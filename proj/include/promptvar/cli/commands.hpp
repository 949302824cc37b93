#pragma once

// Subcommand bodies. Each reads its prerequisites from the run directory,
// writes its outputs there, and records a manifest.

#include <algorithm>
#include <filesystem>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "promptvar/audio/corpus.hpp"
#include "promptvar/audio/features.hpp"
#include "promptvar/audio/synth.hpp"
#include "promptvar/audio/wav.hpp"
#include "promptvar/cli/config.hpp"
#include "promptvar/cli/manifest.hpp"
#include "promptvar/eval/intent.hpp"
#include "promptvar/eval/pca.hpp"
#include "promptvar/eval/similarity.hpp"
#include "promptvar/log.hpp"
#include "promptvar/promptgen/dataset.hpp"
#include "promptvar/promptgen/stages.hpp"
#include "promptvar/slu/tagger.hpp"
#include "promptvar/style/model.hpp"
#include "promptvar/style/train.hpp"
#include "promptvar/varnet/model.hpp"
#include "promptvar/varnet/sampler.hpp"
#include "promptvar/workflow.hpp"

namespace promptvar::cli {

struct Context {
    Config cfg;
    RunDir run;
    std::string config_hash;

    Context(Config c, const std::filesystem::path& run_dir)
        : cfg(std::move(c)), run(run_dir), config_hash(sha1_hex(cfg.canonical())) {}

    Manifest manifest(const std::string& command) const {
        Manifest m;
        m.command = command;
        m.config_hash = config_hash;
        m.seed = cfg.seed;
        return m;
    }
};

// ---- corpus ---------------------------------------------------------------

struct CorpusFile {
    std::string name;  // file name inside the corpus directory
    std::optional<std::string> gender;
    std::optional<std::string> speaker;
};

// Sorted .wav files of a corpus directory, with labels from labels.json
// ({"file.wav": {"gender": ..., "speaker": ...}}) when present.
inline std::vector<CorpusFile> list_corpus(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
    nlohmann::json labels = nlohmann::json::object();
    if (const auto lp = dir / "labels.json"; std::filesystem::exists(lp)) {
        try {
            labels = nlohmann::json::parse(read_bytes(lp));
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(lp.string() + ": " + e.what());
        }
    }
    std::vector<CorpusFile> out;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".wav") out.push_back({e.path().filename().string(), {}, {}});
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.name < b.name; });
    if (out.empty()) throw DataError("no .wav files in " + dir.string());
    for (auto& f : out) {
        if (!labels.contains(f.name)) continue;
        const auto& l = labels.at(f.name);
        if (l.contains("gender")) f.gender = l.at("gender").get<std::string>();
        if (l.contains("speaker")) f.speaker = l.at("speaker").get<std::string>();
    }
    return out;
}

inline std::vector<audio::FrameFeatures> corpus_features(const std::filesystem::path& dir, const std::vector<CorpusFile>& files) {
    std::vector<audio::FrameFeatures> out;
    out.reserve(files.size());
    for (const auto& f : files) out.push_back(audio::extract_features(audio::read_wav(dir / f.name)));
    return out;
}

// Writes synthetic utterances and their labels.json.
inline void write_corpus(const std::filesystem::path& dir, const std::vector<audio::CorpusEntry>& entries, bool speakers) {
    std::filesystem::create_directories(dir);
    nlohmann::json labels = nlohmann::json::object();
    for (const auto& e : entries) {
        audio::write_wav(dir / e.name, audio::synth_voice(e.spec));
        labels[e.name] = speakers ? nlohmann::json{{"speaker", e.gender}} : nlohmann::json{{"gender", e.gender}};
    }
    write_bytes(dir / "labels.json", labels.dump(1) + "\n");
}

// ---- SLU ------------------------------------------------------------------

inline void cmd_calibrate(const Context& ctx) {
    ctx.cfg.require_path("paths.corpus", ctx.cfg.corpus);
    const auto files = list_corpus(ctx.cfg.corpus);
    const auto feats = corpus_features(ctx.cfg.corpus, files);
    std::vector<slu::CorpusItem> items;
    for (std::size_t i = 0; i < files.size(); ++i) items.push_back(slu::corpus_item(feats[i], files[i].gender));
    const auto cal = slu::calibrate(items, ctx.cfg.load_schema());
    const auto out = ctx.run / "calibration.json";
    write_bytes(out, cal.to_json().dump(1) + "\n");
    log::info("calibrate", "calibrated on " + std::to_string(files.size()) + " utterances");
    ctx.run.write_manifest(ctx.manifest("calibrate"), {ctx.cfg.corpus}, {out});
}

inline void cmd_tag(const Context& ctx) {
    const auto cal_path = ctx.run / "calibration.json";
    ctx.run.require("calibrate", {cal_path}, ctx.config_hash);
    ctx.cfg.require_path("paths.corpus", ctx.cfg.corpus);
    const auto cal = slu::Calibration::from_json(nlohmann::json::parse(read_bytes(cal_path)));
    const auto files = list_corpus(ctx.cfg.corpus);
    std::string lines;
    for (const auto& f : files)
        lines += slu::profile_to_json(f.name, slu::tag(audio::read_wav(ctx.cfg.corpus / f.name), cal)).dump() + "\n";
    const auto out = ctx.run / "tagged.jsonl";
    write_bytes(out, lines);
    log::info("tag", "tagged " + std::to_string(files.size()) + " utterances");
    ctx.run.write_manifest(ctx.manifest("tag"), {ctx.cfg.corpus, cal_path}, {out});
}

inline std::vector<promptgen::TaggedUtterance> read_tagged(const std::filesystem::path& p) {
    std::vector<promptgen::TaggedUtterance> out;
    std::istringstream in(read_bytes(p));
    std::string line;
    while (std::getline(in, line)) {
        if (promptgen::trim(line).empty()) continue;
        const auto j = nlohmann::json::parse(line);
        out.push_back({j.at("audio").get<std::string>(), slu::profile_from_json(j)});
    }
    return out;
}

// ---- prompt generation ------------------------------------------------------

struct PromptgenOptions {
    bool placeholder = true;
};

inline std::string promptgen_dir(bool placeholder) { return placeholder ? "promptgen" : "promptgen-direct"; }

inline std::unique_ptr<promptgen::LlmClient> make_client(const Config& cfg) {
    if (cfg.backend == "http") return std::make_unique<promptgen::HttpClient>(cfg.http);
    cfg.require_path("paths.fixtures", cfg.fixtures);
    return std::make_unique<promptgen::FixtureClient>(cfg.fixtures);
}

// Templates are split into a training share and one held-out template per
// interchangeable group; the held-out prompts carry clean labels for
// evaluation.
inline void cmd_promptgen(const Context& ctx, const PromptgenOptions& opt) {
    const auto tagged_path = ctx.run / "tagged.jsonl";
    ctx.run.require("tag", {tagged_path}, ctx.config_hash);
    const auto tagged = read_tagged(tagged_path);
    const auto schema = ctx.cfg.load_schema();
    auto client = make_client(ctx.cfg);
    promptgen::PipelineOptions popt;
    popt.placeholder = opt.placeholder;
    popt.stages.workers = ctx.cfg.workers;
    if (!ctx.cfg.queries.empty()) ctx.cfg.require_path("paths.queries", ctx.cfg.queries);
    const auto q = ctx.cfg.queries.empty() ? promptgen::Queries{} : promptgen::Queries::load(ctx.cfg.queries);
    nn::Rng rng(ctx.cfg.seed);
    const auto p = promptgen::run_stages(*client, schema, popt, rng, q);
    nn::Rng split_rng(ctx.cfg.seed + 1), train_rng(ctx.cfg.seed + 2), held_rng(ctx.cfg.seed + 3);
    const auto [train_t, held_t] = promptgen::split_templates(p.templates, 1, split_rng);
    promptgen::InstantiateOptions iopt;
    iopt.per_utterance = ctx.cfg.per_utterance;
    const auto train = promptgen::instantiate(tagged, p.bank, train_t, schema, train_rng, iopt);
    const auto held = promptgen::instantiate(tagged, p.bank, held_t, schema, held_rng);

    const auto dir = ctx.run / promptgen_dir(opt.placeholder);
    nlohmann::json templates = nlohmann::json::array();
    for (const auto& t : p.templates) templates.push_back(t.to_json());
    const std::vector<std::filesystem::path> outs{dir / "dataset.jsonl", dir / "heldout.jsonl", dir / "templates.json",
                                                   dir / "bank.json"};
    write_bytes(outs[0], promptgen::to_jsonl(train));
    write_bytes(outs[1], promptgen::to_jsonl(held));
    write_bytes(outs[2], templates.dump(1) + "\n");
    write_bytes(outs[3], p.bank.to_json().dump(1) + "\n");
    auto m = ctx.manifest(promptgen_dir(opt.placeholder));
    m.extra = {{"placeholder", opt.placeholder}, {"backend", ctx.cfg.backend},
               {"train", promptgen::dataset_stats(train).to_json()}, {"heldout", promptgen::dataset_stats(held).to_json()},
               {"templates", p.templates.size()}, {"heldout_templates", held_t.size()}};
    log::info("promptgen", std::to_string(train.size()) + " training prompts from " + std::to_string(train_t.size()) +
                               " templates, " + std::to_string(held.size()) + " held-out prompts");
    ctx.run.write_manifest(m, {tagged_path}, outs);
}

inline std::vector<promptgen::PromptRecord> read_dataset(const std::filesystem::path& p) {
    return promptgen::from_jsonl(read_bytes(p));
}

// ---- training -------------------------------------------------------------

inline std::vector<style::StyleExample> style_examples(const Context& ctx, const std::vector<promptgen::PromptRecord>& rows,
                                                       std::size_t stride) {
    std::map<std::string, nn::Tensor2> refs;
    std::vector<style::StyleExample> out;
    for (const auto& r : rows) {
        auto it = refs.find(r.audio);
        if (it == refs.end()) {
            const auto path = ctx.cfg.corpus / r.audio;
            if (!std::filesystem::exists(path)) throw DataError("dataset refers to missing audio " + path.string());
            it = refs.emplace(r.audio, style::reference_input(audio::extract_features(audio::read_wav(path)), stride)).first;
        }
        out.push_back({r.prompt, it->second, r.profile.labels, r.attributes, r.profile.measurements});
    }
    return out;
}

inline style::StyleConfig style_config(const Config& c) {
    style::StyleConfig s;
    s.d = c.d;
    s.heads = c.heads;
    s.layers = c.style_layers;
    s.prompt_queries = c.m;
    s.reference_queries = c.n;
    return s;
}

inline void cmd_train_style(const Context& ctx) {
    const auto data_path = ctx.run / "promptgen" / "dataset.jsonl";
    ctx.run.require("promptgen", {data_path}, ctx.config_hash);
    ctx.cfg.require_path("paths.corpus", ctx.cfg.corpus);
    const auto rows = read_dataset(data_path);
    std::vector<std::string> texts;
    for (const auto& r : rows) texts.push_back(r.prompt);
    style::StyleModel m(style_config(ctx.cfg), ctx.cfg.load_schema(), style::Vocab::build(texts), ctx.cfg.seed);
    style::StyleTrainConfig tc;
    tc.epochs = ctx.cfg.style_epochs;
    tc.lr = ctx.cfg.style_lr;
    tc.seed = ctx.cfg.seed;
    const auto rep = style::train_style(m, style_examples(ctx, rows, m.config().ref_stride), tc);
    const auto dir = ctx.run / "style";
    m.save(dir);
    write_bytes(dir / "train.json", nlohmann::json{{"epoch_losses", rep.epoch_losses}}.dump(1) + "\n");
    log::info("train-style", "final loss " + std::to_string(rep.epoch_losses.empty() ? 0.0 : rep.epoch_losses.back()));
    ctx.run.write_manifest(ctx.manifest("train-style"), {data_path, ctx.cfg.corpus}, {dir});
}

inline style::StyleModel load_style(const Context& ctx) {
    const auto dir = ctx.run / "style";
    ctx.run.require("train-style", {dir / "style.ckpt.json", dir / "style.meta.json"}, ctx.config_hash);
    return style::StyleModel::load(dir);
}

inline void cmd_train_varnet(const Context& ctx) {
    const auto sm = load_style(ctx);
    const auto data_path = ctx.run / "promptgen" / "dataset.jsonl";
    const auto rows = read_dataset(data_path);
    const auto ex = workflow::varnet_examples(sm, style_examples(ctx, rows, sm.config().ref_stride));
    auto vc = workflow::varnet_config_for(sm);
    vc.layers = ctx.cfg.varnet_layers;
    vc.heads = ctx.cfg.heads;
    vc.data_std = workflow::reference_rms(ex);
    varnet::VarNet vn(vc, ctx.cfg.seed, varnet::DiffusionSchedule(ctx.cfg.beta_min, ctx.cfg.beta_max));
    varnet::VarnetTrainConfig tc;
    tc.epochs = ctx.cfg.varnet_epochs;
    tc.lr = ctx.cfg.varnet_lr;
    tc.seed = ctx.cfg.seed;
    const auto rep = varnet::train_varnet(vn, ex, tc);
    const auto dir = ctx.run / "varnet";
    vn.save(dir);
    write_bytes(dir / "train.json", nlohmann::json{{"epoch_losses", rep.epoch_losses}}.dump(1) + "\n");
    log::info("train-varnet", "final loss " + std::to_string(rep.epoch_losses.empty() ? 0.0 : rep.epoch_losses.back()));
    ctx.run.write_manifest(ctx.manifest("train-varnet"), {data_path, ctx.run / "style"}, {dir});
}

inline varnet::VarNet load_varnet(const Context& ctx, const style::StyleModel& sm) {
    const auto dir = ctx.run / "varnet";
    ctx.run.require("train-varnet", {dir / "varnet.ckpt.json", dir / "varnet.meta.json"}, ctx.config_hash);
    auto vn = varnet::VarNet::load(dir);
    const auto& vc = vn.config();
    if (vc.d != sm.config().d || vc.prompt_rows != sm.config().prompt_queries || vc.reference_rows != sm.config().reference_queries)
        throw ConfigError("varnet checkpoint (d=" + std::to_string(vc.d) + ", M=" + std::to_string(vc.prompt_rows) +
                          ", N=" + std::to_string(vc.reference_rows) + ") does not match the style checkpoint; rerun train-varnet");
    return vn;
}

// ---- sampling and evaluation ------------------------------------------------

inline nlohmann::json cmd_sample(const Context& ctx, const std::string& prompt, std::size_t count, std::uint64_t seed) {
    if (count == 0) throw ConfigError("sample: --count must be >= 1");
    const auto sm = load_style(ctx);
    const auto vn = load_varnet(ctx, sm);
    const auto P = sm.encode_prompt(prompt).repr;
    nn::Rng seeds(seed);
    nlohmann::json samples = nlohmann::json::array();
    std::vector<nn::Tensor2> refs;
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t s = seeds.next_u64();
        nn::Rng rng(s);
        refs.push_back(varnet::ode_sample(vn, P, ctx.cfg.steps, rng));
        const auto sv = varnet::style_vector(P, refs.back());
        samples.push_back({{"seed", s}, {"rows", sv.rows()}, {"cols", sv.cols()}, {"style_vector", sv.data()}});
    }
    nlohmann::json out{{"prompt", prompt}, {"intent", sm.predict_intent(prompt)}, {"steps", ctx.cfg.steps}, {"samples", samples}};
    if (refs.size() > 1) out["mean_pairwise_similarity"] = eval::mean_pairwise_similarity(refs);
    const auto path = ctx.run / "samples" / (sha1_hex(prompt).substr(0, 12) + ".json");
    write_bytes(path, out.dump(1) + "\n");
    auto m = ctx.manifest("sample");
    m.extra = {{"prompt", prompt}, {"count", count}, {"sample_seed", seed}};
    ctx.run.write_manifest(m, {ctx.run / "style", ctx.run / "varnet"}, {path});
    return out;
}

inline std::vector<promptgen::Template> read_templates(const std::filesystem::path& p) {
    std::vector<promptgen::Template> out;
    for (const auto& j : nlohmann::json::parse(read_bytes(p))) out.push_back(promptgen::Template::from_json(j));
    return out;
}

inline eval::SimilarityReport cmd_eval_similarity(const Context& ctx) {
    const auto sm = load_style(ctx);
    const auto vn = load_varnet(ctx, sm);
    const auto dir = ctx.run / "promptgen";
    ctx.run.require("promptgen", {dir / "heldout.jsonl", dir / "templates.json", dir / "bank.json"}, ctx.config_hash);
    const auto held = read_dataset(dir / "heldout.jsonl");
    const auto templates = read_templates(dir / "templates.json");
    const auto bank = promptgen::KeywordBank::from_json(nlohmann::json::parse(read_bytes(dir / "bank.json")));
    const auto schema = ctx.cfg.load_schema();
    const promptgen::TemplateIndex index(templates, schema);
    nn::Rng rng(ctx.cfg.seed + 4);
    std::vector<std::vector<std::string>> cases;
    for (std::size_t i = 0; i < held.size() && cases.size() < ctx.cfg.similarity_prompts; ++i)
        cases.push_back(eval::paraphrases(held[i], bank, index, ctx.cfg.similarity_k, rng));
    if (cases.size() < ctx.cfg.similarity_prompts)
        throw DataError("eval-similarity: only " + std::to_string(cases.size()) + " held-out prompts available");
    const auto rep = eval::aspect_similarity(sm, vn, cases, ctx.cfg.steps, ctx.cfg.seed + 5);
    const std::vector<std::filesystem::path> outs{ctx.run / "reports" / "similarity.json", ctx.run / "reports" / "similarity.txt"};
    auto j = rep.to_json();
    j["test_prompts"] = cases;
    write_bytes(outs[0], j.dump(1) + "\n");
    write_bytes(outs[1], rep.to_table());
    ctx.run.write_manifest(ctx.manifest("eval-similarity"), {ctx.run / "style", ctx.run / "varnet", dir / "heldout.jsonl"}, outs);
    return rep;
}

struct IntentReport {
    eval::IntentAccuracy full, full_train;
    std::optional<eval::IntentAccuracy> direct;

    nlohmann::json to_json() const {
        nlohmann::json j{{"full", full.to_json()}, {"full_train", full_train.to_json()}};
        if (direct) j["no_placeholder"] = direct->to_json();
        return j;
    }

    std::string to_table() const {
        std::string out = "Dataset              gender   pitch   speed  volume    mean\n";
        auto row = [&](const char* name, const eval::IntentAccuracy& a) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "%-18s %7.2f %7.2f %7.2f %7.2f %7.2f\n", name, 100 * a.per_attribute.at("gender"),
                          100 * a.per_attribute.at("pitch"), 100 * a.per_attribute.at("speed"),
                          100 * a.per_attribute.at("volume"), 100 * a.mean);
            out += buf;
        };
        row("full pipeline", full);
        if (direct) row("no placeholder", *direct);
        return out;
    }
};

// Trains on promptgen/dataset.jsonl (and promptgen-direct/dataset.jsonl when
// present) and scores both on the held-out placeholder prompts.
inline IntentReport cmd_eval_intent(const Context& ctx) {
    const auto dir = ctx.run / "promptgen";
    ctx.run.require("promptgen", {dir / "dataset.jsonl", dir / "heldout.jsonl"}, ctx.config_hash);
    const auto schema = ctx.cfg.load_schema();
    const auto train = eval::intent_examples(read_dataset(dir / "dataset.jsonl"), schema);
    const auto test = eval::intent_examples(read_dataset(dir / "heldout.jsonl"), schema);
    IntentReport rep;
    const auto full = eval::IntentClassifier::train(train, schema);
    rep.full = full.evaluate(test);
    rep.full_train = full.evaluate(train);
    std::vector<std::filesystem::path> ins{dir / "dataset.jsonl", dir / "heldout.jsonl"};
    const auto direct_path = ctx.run / promptgen_dir(false) / "dataset.jsonl";
    if (std::filesystem::exists(direct_path)) {
        const auto direct = eval::IntentClassifier::train(eval::intent_examples(read_dataset(direct_path), schema), schema);
        rep.direct = direct.evaluate(test);
        ins.push_back(direct_path);
    }
    const std::vector<std::filesystem::path> outs{ctx.run / "reports" / "intent.json", ctx.run / "reports" / "intent.txt",
                                                   ctx.run / "intent" / "classifier.json"};
    write_bytes(outs[0], rep.to_json().dump(1) + "\n");
    write_bytes(outs[1], rep.to_table());
    write_bytes(outs[2], full.to_json().dump() + "\n");
    ctx.run.write_manifest(ctx.manifest("eval-intent"), ins, outs);
    return rep;
}

struct PcaReport {
    eval::PcaResult pca;
    std::vector<std::string> files, labels;
    std::optional<double> silhouette;

    nlohmann::json to_json() const {
        nlohmann::json pts = nlohmann::json::array();
        for (std::size_t i = 0; i < files.size(); ++i)
            pts.push_back({{"file", files[i]}, {"label", labels[i]}, {"x", pca.points(i, 0)}, {"y", pca.points(i, 1)}});
        nlohmann::json j{{"explained_variance_ratio", pca.explained_ratio}, {"points", pts}};
        if (silhouette) j["silhouette"] = *silhouette;
        return j;
    }
};

// 2-D PCA of reference representations of every utterance in `corpus`,
// grouped by speaker (or gender) label for the silhouette score.
inline PcaReport cmd_pca(const Context& ctx, const std::filesystem::path& corpus) {
    const auto sm = load_style(ctx);
    const auto files = list_corpus(corpus);
    const auto feats = corpus_features(corpus, files);
    const std::size_t width = sm.config().reference_queries * sm.config().d;
    nn::Tensor2 X(files.size(), width);
    PcaReport rep;
    std::map<std::string, int> ids;
    std::vector<int> lab;
    bool labeled = true;
    for (std::size_t i = 0; i < files.size(); ++i) {
        const auto r = sm.encode_reference(feats[i]);
        for (std::size_t j = 0; j < width; ++j) X(i, j) = r[j];
        const auto l = files[i].speaker ? files[i].speaker : files[i].gender;
        labeled = labeled && l.has_value();
        rep.files.push_back(files[i].name);
        rep.labels.push_back(l.value_or(""));
        lab.push_back(ids.try_emplace(l.value_or(""), static_cast<int>(ids.size())).first->second);
    }
    rep.pca = eval::pca_project(X, 2);
    if (labeled && ids.size() >= 2) rep.silhouette = eval::silhouette(rep.pca.points, lab);
    const auto out = ctx.run / "reports" / "pca.json";
    write_bytes(out, rep.to_json().dump(1) + "\n");
    ctx.run.write_manifest(ctx.manifest("pca"), {ctx.run / "style", corpus}, {out});
    return rep;
}

// ---- demo -------------------------------------------------------------------

struct DemoResult {
    eval::SimilarityReport similarity;
    IntentReport intent;
    PcaReport pca;
};

inline std::vector<audio::VoiceSpec> demo_speakers() {
    audio::VoiceSpec a, b;
    a.f0 = 105;
    a.amplitude = 0.4;
    a.syllable_rate = 3.0;
    a.tilt = 1.4;
    b.f0 = 215;
    b.amplitude = 0.12;
    b.syllable_rate = 5.5;
    b.tilt = 0.9;
    return {a, b};
}

// Whole chain on synthetic audio and the bundled LLM fixtures, inside `root`.
inline DemoResult cmd_demo(const std::filesystem::path& root, std::uint64_t seed, const std::filesystem::path& fixtures) {
    std::filesystem::create_directories(root);
    write_bytes(root / "config.ini", default_config_text());
    Config cfg = load_config(root / "config.ini");
    cfg.seed = seed;
    cfg.fixtures = fixtures;
    audio::CorpusConfig cc;
    cc.utterances = 90;
    cc.seconds = 1.5;
    cc.seed = seed;
    write_corpus(cfg.corpus, audio::synthetic_corpus(cc), false);
    const auto speakers = root / "speakers";
    write_corpus(speakers, audio::speaker_corpus(demo_speakers(), 20, 0.05, seed + 1), true);

    const Context ctx(cfg, root / "run");
    cmd_calibrate(ctx);
    cmd_tag(ctx);
    cmd_promptgen(ctx, {true});
    cmd_promptgen(ctx, {false});
    cmd_train_style(ctx);
    cmd_train_varnet(ctx);
    DemoResult r;
    r.similarity = cmd_eval_similarity(ctx);
    r.intent = cmd_eval_intent(ctx);
    r.pca = cmd_pca(ctx, speakers);
    return r;
}

}  // namespace promptvar::cli

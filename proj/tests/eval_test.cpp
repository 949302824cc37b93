#include <algorithm>
#include <chrono>
#include <cmath>

#include <gtest/gtest.h>

#include "promptvar/audio/corpus.hpp"
#include "promptvar/eval/intent.hpp"
#include "promptvar/eval/pca.hpp"
#include "promptvar/eval/probe.hpp"
#include "promptvar/eval/similarity.hpp"
#include "promptvar/varnet/sampler.hpp"
#include "promptvar/workflow.hpp"
#include "support/fixture_data.hpp"

using namespace promptvar;
using namespace promptvar::eval;
using promptvar::testing::shared_corpus;

namespace {

const slu::AttributeSchema kSchema = slu::AttributeSchema::default_schema();

struct IntentSplit {
    promptgen::PipelineOutput full;
    std::vector<promptgen::PromptRecord> train, test, direct;
};

// Train prompts from one share of the templates, test prompts from the
// held-out rest, and a no-placeholder dataset over the same utterances.
const IntentSplit& intent_split() {
    static const IntentSplit s = [] {
        IntentSplit s;
        const auto& c = shared_corpus();
        s.full = promptvar::testing::fixture_pipeline(true);
        nn::Rng split_rng(3), r1(10), r2(11), r3(12);
        const auto [train_t, held_t] = promptgen::split_templates(s.full.templates, 1, split_rng);
        promptgen::InstantiateOptions opt;
        opt.per_utterance = 6;
        s.train = promptgen::instantiate(c.tagged, s.full.bank, train_t, kSchema, r1, opt);
        s.test = promptgen::instantiate(c.tagged, s.full.bank, held_t, kSchema, r2);
        const auto direct = promptvar::testing::fixture_pipeline(false);
        s.direct = promptgen::instantiate(c.tagged, direct.bank, direct.templates, kSchema, r3, opt);
        return s;
    }();
    return s;
}

struct Desk {
    std::unique_ptr<style::StyleModel> style;
    std::unique_ptr<varnet::VarNet> varnet;
    std::vector<style::StyleExample> train, test;
};

// Style module and variation network trained on the split above.
const Desk& desk() {
    static const Desk d = [] {
        Desk d;
        const auto& s = intent_split();
        const auto& c = shared_corpus();
        d.train = promptvar::testing::style_examples(c, s.train);
        d.test = promptvar::testing::style_examples(c, s.test);
        std::vector<std::string> texts;
        for (const auto& r : s.train) texts.push_back(r.prompt);
        d.style = std::make_unique<style::StyleModel>(style::StyleConfig{}, kSchema, style::Vocab::build(texts), 42);
        style::StyleTrainConfig scfg;
        scfg.epochs = 16;
        scfg.lr = 4e-3;
        style::train_style(*d.style, d.train, scfg);
        const auto vex = workflow::varnet_examples(*d.style, d.train);
        auto vcfg = workflow::varnet_config_for(*d.style);
        vcfg.data_std = workflow::reference_rms(vex);
        d.varnet = std::make_unique<varnet::VarNet>(vcfg, 42);
        varnet::train_varnet(*d.varnet, vex, varnet::VarnetTrainConfig{});
        return d;
    }();
    return d;
}

std::vector<slu::Labels> intent_targets(const std::vector<style::StyleExample>& xs) {
    std::vector<slu::Labels> out;
    for (const auto& e : xs) {
        slu::Labels l;
        for (const auto& a : kSchema.attributes()) {
            const bool described = std::find(e.attributes.begin(), e.attributes.end(), a.name) != e.attributes.end();
            l[a.name] = described ? e.labels.at(a.name) : kUnspecified;
        }
        out.push_back(l);
    }
    return out;
}

std::vector<std::string> attribute_names() {
    std::vector<std::string> out;
    for (const auto& a : kSchema.attributes()) out.push_back(a.name);
    return out;
}

}  // namespace

TEST(Similarity, TrivialCases) {
    const nn::Tensor2 a{{1, 2}, {3, 4}};
    EXPECT_NEAR(similarity(a, a), 1.0, 1e-12);
    EXPECT_NEAR(similarity(a, a * -1.0), 0.0, 1e-12);
    // centered versions (−1, 1, 0, 0) and (0, 0, −1, 1) are orthogonal
    EXPECT_NEAR(similarity(nn::Tensor2{{0, 2, 1, 1}}, nn::Tensor2{{1, 1, 0, 2}}), 0.5, 1e-12);
    nn::Rng rng(1);
    const auto x = rng.normal_tensor(3, 5), y = rng.normal_tensor(3, 5);
    EXPECT_DOUBLE_EQ(similarity(x, y), similarity(y, x));
    EXPECT_NEAR(similarity(x * 3.0, y * 0.2), similarity(x, y), 1e-12);
    const double s = similarity(x, y);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_THROW(similarity(nn::Tensor2(2, 2), a), DataError);
    EXPECT_THROW(similarity(a, nn::Tensor2(1, 3)), DimensionError);
}

TEST(Softmax, SeparableProblemConvergesAndRoundTrips) {
    std::vector<SparseRow> X{{{3, 1.0}}, {{3, 1.0}, {9, 0.5}}, {{7, 1.0}}, {{7, 1.0}, {9, 0.5}}};
    const std::vector<std::size_t> y{0, 0, 1, 1};
    SoftmaxRegression m;
    m.fit(X, y, 2, {});
    for (std::size_t i = 0; i < X.size(); ++i) EXPECT_EQ(m.predict(X[i]), y[i]);
    EXPECT_LE(m.epochs_run(), 500u);
    const auto back = SoftmaxRegression::from_json(m.to_json());
    EXPECT_NEAR(back.probabilities(X[0])[0], m.probabilities(X[0])[0], 1e-15);
    // unseen features fall back to the bias
    const auto p = m.probabilities({{12345, 1.0}});
    EXPECT_NEAR(p[0] + p[1], 1.0, 1e-12);
}

TEST(IntentClassifier, DegenerateLabelsRejected) {
    std::vector<IntentExample> data;
    for (const char* g : {"male", "female"}) {
        slu::Labels l{{"gender", g}, {"pitch", "low"}, {"speed", kUnspecified}, {"volume", kUnspecified}};
        data.push_back({std::string("a ") + g + " voice", l});
    }
    try {
        IntentClassifier::train(data, kSchema);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("pitch"), std::string::npos) << e.what();
    }
}

TEST(IntentClassifier, GentlemanIsMale) {
    const auto& s = intent_split();
    const auto ic = IntentClassifier::train(intent_examples(s.train, kSchema), kSchema);
    const auto got = ic.classify("generate a voice of a gentleman");
    EXPECT_EQ(got.at("gender"), "male");
    for (const char* a : {"pitch", "speed", "volume"}) EXPECT_EQ(got.at(a), kUnspecified) << a;
}

TEST(IntentClassifier, HeldOutTemplatesAndAblationOrdering) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& s = intent_split();
    const auto train = intent_examples(s.train, kSchema);
    const auto test = intent_examples(s.test, kSchema);
    const auto full = IntentClassifier::train(train, kSchema);
    const auto held = full.evaluate(test);
    const auto seen = full.evaluate(train);
    EXPECT_GE(held.mean, 0.95) << held.to_json().dump();
    EXPECT_GE(seen.mean, held.mean);

    const auto direct = IntentClassifier::train(intent_examples(s.direct, kSchema), kSchema);
    const auto ablated = direct.evaluate(test);
    EXPECT_LT(ablated.mean, held.mean) << ablated.to_json().dump();
    std::cout << "[intent] full " << held.mean << " direct " << ablated.mean << " train " << seen.mean << "\n";
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::minutes(2));
}

TEST(Pca, RecoversAxesAndOrdersRatios) {
    nn::Rng rng(5);
    nn::Tensor2 X(400, 2);
    for (std::size_t i = 0; i < X.rows(); ++i) {
        X(i, 0) = 3.0 * rng.normal();
        X(i, 1) = 0.5 * rng.normal();
    }
    const auto r = pca_project(X);
    EXPECT_NEAR(std::abs(r.components(0, 0)), 1.0, 1e-3);
    EXPECT_NEAR(std::abs(r.components(1, 1)), 1.0, 1e-3);
    EXPECT_GE(r.explained_ratio[0], r.explained_ratio[1]);
    EXPECT_LE(r.explained_ratio[0] + r.explained_ratio[1], 1.0 + 1e-12);

    const auto Y = rng.normal_tensor(50, 6);
    const auto a = pca_project(Y, 3), b = pca_project(Y, 3);
    EXPECT_EQ(nn::max_abs_diff(a.points, b.points), 0.0);
    for (std::size_t k = 1; k < 3; ++k) EXPECT_GE(a.explained_ratio[k - 1], a.explained_ratio[k]);
    double total = 0;
    for (double v : a.explained_ratio) total += v;
    EXPECT_LE(total, 1.0 + 1e-12);

    EXPECT_THROW(pca_project(nn::Tensor2(2, 3)), DataError);
    nn::Tensor2 same(5, 3);
    for (std::size_t i = 0; i < same.size(); ++i) same[i] = 1.5;
    EXPECT_THROW(pca_project(same), DataError);
}

TEST(Pca, SyntheticClustersSeparate) {
    nn::Rng rng(8);
    nn::Tensor2 X(60, 10);
    std::vector<int> labels;
    for (std::size_t i = 0; i < X.rows(); ++i) {
        labels.push_back(i < 30 ? 0 : 1);
        for (std::size_t j = 0; j < X.cols(); ++j) X(i, j) = rng.normal() + (i < 30 ? 2.0 : -2.0);
    }
    EXPECT_GT(silhouette(pca_project(X).points, labels), 0.5);
}

TEST(Silhouette, KnownValues) {
    const nn::Tensor2 pts{{0, 0}, {0, 1}, {10, 0}, {10, 1}};
    // a = 1, b = mean(10, √101)
    const double b = (10.0 + std::sqrt(101.0)) / 2.0;
    EXPECT_NEAR(silhouette(pts, {0, 0, 1, 1}), (b - 1.0) / b, 1e-12);
    EXPECT_THROW(silhouette(pts, {0, 0, 0, 0}), DataError);
}

TEST(DeskSystem, SpeakerReferencesClusterInPca) {
    const auto& d = desk();
    audio::VoiceSpec a, b;
    a.f0 = 105;
    a.amplitude = 0.4;
    a.syllable_rate = 3.0;
    a.tilt = 1.4;
    b.f0 = 215;
    b.amplitude = 0.12;
    b.syllable_rate = 5.5;
    b.tilt = 0.9;
    const auto utts = audio::speaker_corpus({a, b}, 20, 0.05, 17);
    nn::Tensor2 X(utts.size(), d.style->config().reference_queries * d.style->config().d);
    std::vector<int> labels;
    for (std::size_t i = 0; i < utts.size(); ++i) {
        const auto r = d.style->encode_reference(audio::extract_features(audio::synth_voice(utts[i].spec)));
        for (std::size_t j = 0; j < r.size(); ++j) X(i, j) = r[j];
        labels.push_back(std::stoi(utts[i].gender));
    }
    const auto p = pca_project(X);
    const double s = silhouette(p.points, labels);
    std::cout << "[pca] silhouette " << s << " ratios " << p.explained_ratio[0] << " " << p.explained_ratio[1] << "\n";
    EXPECT_GT(s, 0.5);
}

TEST(DeskSystem, AttributeProbes) {
    const auto& d = desk();
    std::vector<nn::Tensor2> ptr, pte, rtr, rte;
    for (const auto& e : d.train) {
        ptr.push_back(d.style->encode_prompt(e.prompt).repr);
        rtr.push_back(d.style->encode_reference_input(e.ref_input, nullptr));
    }
    for (const auto& e : d.test) {
        pte.push_back(d.style->encode_prompt(e.prompt).repr);
        rte.push_back(d.style->encode_reference_input(e.ref_input, nullptr));
    }
    const auto names = attribute_names();
    const auto ytr = intent_targets(d.train), yte = intent_targets(d.test);
    const auto p_only = attribute_probe(ptr, ytr, pte, yte, names);
    for (const auto& n : names) EXPECT_GE(p_only.accuracy.at(n), 0.95) << n;

    // R only, scored on the attributes each test prompt leaves out
    std::vector<slu::Labels> tagged_tr;
    for (const auto& e : d.train) tagged_tr.push_back(e.labels);
    for (const auto& n : names) {
        std::vector<nn::Tensor2> xs;
        std::vector<slu::Labels> ys;
        for (std::size_t i = 0; i < d.test.size(); ++i)
            if (yte[i].at(n) == kUnspecified) {
                xs.push_back(rte[i]);
                ys.push_back(d.test[i].labels);
            }
        ASSERT_GE(xs.size(), 10u) << n;
        const auto r_only = attribute_probe(rtr, tagged_tr, xs, ys, {n});
        EXPECT_GT(r_only.accuracy.at(n), r_only.majority.at(n)) << n;
    }

    // null control, averaged over shuffles: a single shuffle on 90 test
    // prompts has a standard error close to the tolerance
    std::map<std::string, double> null_acc, null_chance;
    nn::Rng rng(99);
    for (int rep = 0; rep < 10; ++rep) {
        auto shuffled = ytr;
        rng.shuffle(shuffled);
        const auto null = attribute_probe(ptr, shuffled, pte, yte, names);
        for (const auto& n : names) {
            null_acc[n] += null.accuracy.at(n) / 10.0;
            null_chance[n] += null.chance.at(n) / 10.0;
        }
    }
    for (const auto& n : names) {
        std::cout << "[probe] shuffled " << n << " " << null_acc[n] << " chance " << null_chance[n] << "\n";
        EXPECT_NEAR(null_acc[n], null_chance[n], 0.05) << n;
    }
}

TEST(DeskSystem, VariationNetworkIsTheLeastSimilarAspect) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto& d = desk();
    const auto& s = intent_split();
    const promptgen::TemplateIndex index(s.full.templates, kSchema);
    nn::Rng rng(21);
    std::vector<std::vector<std::string>> cases;
    for (std::size_t i = 0; cases.size() < 20; ++i) cases.push_back(paraphrases(s.test[i], s.full.bank, index, 5, rng));
    const auto rep = aspect_similarity(*d.style, *d.varnet, cases, 50, 42);
    std::cout << rep.to_table();
    EXPECT_EQ(rep.prompts, 20u);
    for (const char* a : kAspects) {
        EXPECT_GE(rep.mean.at(a), 0.0);
        EXPECT_LE(rep.mean.at(a), 1.0);
        if (std::string(a) != "variation_network") {
            EXPECT_LT(rep.mean.at("variation_network"), rep.mean.at(a)) << a;
        }
    }
    EXPECT_NEAR(rep.mean.at("text_content"), 1.0, 1e-12);
    EXPECT_NEAR(rep.mean.at("backbone_sampling"), 1.0, 1e-12);

    // two seeds, one prompt: sampling is stochastic
    const auto P = d.style->encode_prompt(cases[0][0]).repr;
    nn::Rng r1(1), r2(2);
    EXPECT_LT(similarity(varnet::ode_sample(*d.varnet, P, 50, r1), varnet::ode_sample(*d.varnet, P, 50, r2)), 1.0);
    EXPECT_LT(std::chrono::steady_clock::now() - t0, std::chrono::minutes(5));
}

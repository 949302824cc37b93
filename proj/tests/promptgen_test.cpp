#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "promptvar/promptgen/dataset.hpp"
#include "promptvar/promptgen/llm_client.hpp"
#include "promptvar/promptgen/stages.hpp"

using namespace promptvar;
using namespace promptvar::promptgen;

namespace {

const std::filesystem::path kFixtures = std::filesystem::path(PROMPTVAR_ASSET_DIR) / "fixtures";

const slu::AttributeSchema& schema() {
    static const auto s = slu::AttributeSchema::default_schema();
    return s;
}

// Answers from a map keyed by "<stage>/<key>" and counts the calls.
class MapClient : public LlmClient {
public:
    std::map<std::string, std::vector<std::string>> answers;  // successive answers; last one repeats
    std::vector<LlmRequest> seen;

    std::string complete(const LlmRequest& req) override {
        seen.push_back(req);
        auto& a = answers.at(req.stage + "/" + req.key);
        const std::size_t n = std::count_if(seen.begin(), seen.end(), [&](const LlmRequest& r) {
            return r.stage == req.stage && r.key == req.key;
        });
        return a[std::min(n, a.size()) - 1];
    }
};

std::vector<TaggedUtterance> synthetic_corpus(std::size_t n, std::uint64_t seed) {
    nn::Rng rng(seed);
    std::vector<TaggedUtterance> out;
    for (std::size_t i = 0; i < n; ++i) {
        TaggedUtterance u{"utt" + std::to_string(i) + ".wav", {}};
        for (const auto& a : schema().attributes()) u.profile.labels[a.name] = a.classes[rng.below(a.classes.size())];
        out.push_back(u);
    }
    return out;
}

PipelineOutput fixture_pipeline(const PipelineOptions& opt = {}, std::uint64_t seed = 42) {
    FixtureClient client(kFixtures);
    nn::Rng rng(seed);
    return run_stages(client, schema(), opt, rng);
}

std::filesystem::path tmp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / "promptvar_promptgen_test" / name;
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST(Template, ExamplesFromTheDialogue) {
    const Template a = parse_template("I need a [placeholder] voice.", schema(), std::string("pitch"));
    EXPECT_EQ(a.placeholders, std::vector<std::string>{"pitch"});
    EXPECT_EQ(a.text, "I need a [Pitch] voice.");

    const Template b = parse_template("Generate a voice that sounds like a [Gender] with [Pitch] pitch.", schema());
    EXPECT_EQ(b.placeholders, (std::vector<std::string>{"gender", "pitch"}));
    EXPECT_EQ(parse_template("a [ gENDER ] voice", schema()).text, "a [Gender] voice");
}

TEST(Template, Errors) {
    try {
        parse_template("a [Gendre] voice", schema());
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("gender, pitch, speed, volume"), std::string::npos);
    }
    try {
        parse_template("a [Gender voice", schema());
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_NE(std::string(e.what()).find("byte 2"), std::string::npos);
    }
    EXPECT_THROW(parse_template("a Gender] voice", schema()), ParseError);
    EXPECT_THROW(parse_template("a [Gender [Pitch]] voice", schema()), ParseError);
    EXPECT_THROW(parse_template("[Pitch] and [pitch]", schema()), ValidationError);
    EXPECT_THROW(parse_template("a [placeholder] voice", schema()), ValidationError);
    EXPECT_THROW(parse_template("   ", schema()), ValidationError);
}

TEST(Template, SubstituteAndArticles) {
    const Template t = parse_template("Generate a voice that sounds like a [Gender] with [Pitch] pitch.", schema());
    EXPECT_EQ(substitute(t, {{"gender", "boy"}, {"pitch", "low"}}), "Generate a voice that sounds like a boy with low pitch.");
    const Template u = parse_template("A [Pitch] voice, a [Volume] level", schema());
    EXPECT_EQ(substitute(u, {{"pitch", "average"}, {"volume", "loud"}}), "An average voice, a loud level");
    EXPECT_THROW(substitute(t, {{"gender", "boy"}}), ValidationError);
}

TEST(Keywords, ListParsingAndNormalization) {
    KeywordBank b;
    b.set("gender", "male", parse_list_response("1. Man.\n2. man"));
    EXPECT_EQ(b.get("gender", "male"), std::vector<std::string>{"man"});

    const auto items = parse_list_response("1. deep\n2.\n\n3) low\n   \n- bass\n");
    EXPECT_EQ(items, (std::vector<std::string>{"deep", "low", "bass"}));
    EXPECT_EQ(parse_list_response("Sure, here you go:\n1. a\n2. b\nHope this helps!").size(), 2u);
    EXPECT_EQ(parse_list_response("alpha\nbeta\n").size(), 2u);
    EXPECT_EQ(normalize_keyword("  \"Mid  Range\". "), "mid range");
}

TEST(Stage1, FixtureKeywords) {
    FixtureClient client(kFixtures);
    log::CaptureGuard cap;
    const KeywordBank bank = stage1_keywords(client, schema());
    EXPECT_EQ(bank.get("gender", "male"), (std::vector<std::string>{"man", "boy", "guy", "dude", "gentleman"}));
    EXPECT_EQ(bank.invert("speed", "Fast"), "fast");
    // shared between two volume classes, so removed from both
    EXPECT_EQ(bank.invert("volume", "soft"), std::nullopt);
    EXPECT_EQ(bank.get("volume", "quiet").size(), 4u);
    EXPECT_TRUE(cap.contains("shared between classes of 'volume'"));
}

TEST(Stage1, RetryOnceThenFail) {
    MapClient c;
    for (const auto& a : schema().attributes())
        for (const auto& cls : a.classes) c.answers[std::string("stage1/") + a.name + "_" + cls] = {"1. " + a.name + "-" + cls};
    c.answers["stage1/pitch_low"] = {"I cannot help with that.\n\n", "1. deep\n2.\n3. low\n4.\n5. bass"};
    const KeywordBank bank = stage1_keywords(c, schema());
    EXPECT_EQ(bank.get("pitch", "low"), (std::vector<std::string>{"deep", "low", "bass"}));

    c.seen.clear();
    c.answers["stage1/pitch_low"] = {""};
    try {
        stage1_keywords(c, schema());
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("pitch_low"), std::string::npos);
    }
    EXPECT_EQ(std::count_if(c.seen.begin(), c.seen.end(), [](const LlmRequest& r) { return r.key == "pitch_low"; }), 2);
}

TEST(Stage1, QueryWording) {
    MapClient c;
    for (const auto& a : schema().attributes())
        for (const auto& cls : a.classes) c.answers[std::string("stage1/") + a.name + "_" + cls] = {"1. " + a.name + cls};
    stage1_keywords(c, schema());
    EXPECT_EQ(c.seen.size(), 11u);
    EXPECT_EQ(c.seen[0].prompt,
              "Can you list 5 words or phrases that is the synonyms for male gender in lower case? Please generate one "
              "word per line and identify it with a serial number.");
}

TEST(Stage2, FixtureTemplatesAndDiscards) {
    FixtureClient client(kFixtures);
    log::CaptureGuard cap;
    const auto ts = stage2_sentences(client, schema());
    std::vector<std::string> pitch;
    for (const auto& t : ts)
        if (t.placeholders == std::vector<std::string>{"pitch"}) pitch.push_back(t.text);
    EXPECT_EQ(pitch.size(), 5u);
    EXPECT_NE(std::find(pitch.begin(), pitch.end(), "Looking for a [Pitch] voice."), pitch.end());
    EXPECT_EQ(ts.size(), 20u);
    EXPECT_TRUE(cap.contains("discarded \"Adjust the volume, please.\""));
    EXPECT_TRUE(cap.contains("appears twice"));
    EXPECT_EQ(ts.front().id, "s2-gender-01");
}

TEST(Stage2, NoValidTemplateIsAnError) {
    MapClient c;
    for (const auto& a : schema().attributes()) c.answers["stage2/" + a.name] = {"1. A [placeholder] voice."};
    c.answers["stage2/speed"] = {"1. A fast voice.\n2. A [Pitch] voice."};
    EXPECT_THROW(stage2_sentences(c, schema()), DataError);
}

TEST(Stage3, FixtureCombinations) {
    FixtureClient client(kFixtures);
    const auto s2 = stage2_sentences(client, schema());
    const std::vector<Template> in{s2[0], s2[8]};  // gender, pitch
    const auto out = stage3_combine(client, schema(), in);
    bool found = false;
    for (const auto& t : out) {
        EXPECT_EQ(std::set<std::string>(t.placeholders.begin(), t.placeholders.end()), (std::set<std::string>{"gender", "pitch"}));
        found |= t.text == "Generate a voice that sounds like a [Gender] with [Pitch] pitch.";
    }
    EXPECT_TRUE(found);
}

TEST(Stage3, DroppedPlaceholderDiscardedAndFallback) {
    MapClient c;
    const Template g = parse_template("Please generate a voice that sounds like a [Gender].", schema());
    const Template p = parse_template("Seeking a voice with [Pitch] pitch.", schema());
    c.answers["stage3/gender+pitch_sentence"] = {"1. A [Gender] with [Pitch] pitch.\n2. A [Gender] voice."};
    c.answers["stage3/gender+pitch_phrase"] = {"1. [Gender] voice\n2. a voice"};
    log::CaptureGuard cap;
    const auto out = stage3_combine(c, schema(), {g, p});
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(out[0].text, "A [Gender] with [Pitch] pitch.");
    EXPECT_EQ(out[1].text, "Please generate a voice that sounds like a [Gender]; Seeking a voice with [Pitch] pitch.");
    EXPECT_EQ(out[1].kind, TemplateKind::phrase);
    EXPECT_TRUE(cap.contains("falling back"));
    EXPECT_NE(c.seen[0].prompt.find("keep all of the '[]'"), std::string::npos);
    EXPECT_NE(c.seen[0].prompt.find("The sentences are: Please generate a voice that sounds like a [Gender]. Seeking"),
              std::string::npos);
    EXPECT_THROW(stage3_combine(c, schema(), {g, g}), ValidationError);
}

TEST(Stage3, AllElevenSubsetsAndKindFlags) {
    EXPECT_EQ(attribute_subsets(schema(), 2).size(), 11u);
    EXPECT_EQ(attribute_subsets(schema(), 1).size(), 15u);

    const auto full = fixture_pipeline();
    std::map<std::string, std::set<TemplateKind>> kinds;
    for (const auto& t : full.templates)
        if (t.placeholders.size() >= 2) kinds[subset_key(t.placeholders, schema())].insert(t.kind);
    EXPECT_EQ(kinds.size(), 11u);
    for (const auto& [k, v] : kinds) EXPECT_EQ(v.size(), 2u) << k;

    PipelineOptions no_phrase;
    no_phrase.stages.phrases = false;
    for (const auto& t : fixture_pipeline(no_phrase).templates) EXPECT_EQ(t.kind, TemplateKind::sentence) << t.id;
    PipelineOptions no_sentence;
    no_sentence.stages.sentences = false;
    for (const auto& t : fixture_pipeline(no_sentence).templates) {
        if (t.placeholders.size() > 1) {
            EXPECT_EQ(t.kind, TemplateKind::phrase) << t.id;
        }
    }
    PipelineOptions neither = no_phrase;
    neither.stages.sentences = false;
    EXPECT_THROW(fixture_pipeline(neither), ConfigError);
}

TEST(Instantiate, DialogueExample) {
    KeywordBank bank;
    bank.set("gender", "male", {"boy"});
    bank.set("pitch", "low", {"low"});
    Template t = parse_template("Generate a voice that sounds like a [Gender] with [Pitch] pitch.", schema());
    t.id = "t";
    TaggedUtterance u{"a.wav", {}};
    u.profile.labels = {{"gender", "male"}, {"pitch", "low"}, {"speed", "fast"}, {"volume", "loud"}};
    // only gender+pitch has a template, so every sample lands on it
    nn::Rng rng(1);
    InstantiateOptions opt;
    opt.max_resamples = 1000;
    const auto rows = instantiate({u}, bank, {t}, schema(), rng, opt);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].prompt, "Generate a voice that sounds like a boy with low pitch.");
    EXPECT_EQ(rows[0].keywords, (std::map<std::string, std::string>{{"gender", "boy"}, {"pitch", "low"}}));

    nn::Rng rng2(1);
    EXPECT_THROW(instantiate({u}, bank, {t}, schema(), rng2), DataError);
}

TEST(Instantiate, DeterministicJsonl) {
    const auto p = fixture_pipeline();
    const auto corpus = synthetic_corpus(50, 3);
    nn::Rng a(42), b(42), c(43);
    const std::string x = to_jsonl(instantiate(corpus, p.bank, p.templates, schema(), a));
    EXPECT_EQ(x, to_jsonl(instantiate(corpus, p.bank, p.templates, schema(), b)));
    EXPECT_NE(x, to_jsonl(instantiate(corpus, p.bank, p.templates, schema(), c)));
    EXPECT_EQ(to_jsonl(from_jsonl(x)), x);
}

TEST(Instantiate, KeywordFrequenciesNearUniform) {
    const auto p = fixture_pipeline();
    std::vector<TaggedUtterance> corpus(1000);
    for (std::size_t i = 0; i < corpus.size(); ++i)
        corpus[i].profile.labels = {{"gender", "male"}, {"pitch", "low"}, {"speed", "slow"}, {"volume", "loud"}};
    InstantiateOptions opt;
    opt.full_set_prob = 1.0;
    nn::Rng rng(7);
    std::map<std::string, int> counts;
    for (const auto& r : instantiate(corpus, p.bank, p.templates, schema(), rng, opt)) counts[r.keywords.at("gender")]++;
    ASSERT_EQ(counts.size(), 5u);
    for (const auto& [k, n] : counts) {
        EXPECT_GE(n, 140) << k;
        EXPECT_LE(n, 260) << k;
    }
}

TEST(Instantiate, RoundTripThousandPrompts) {
    const auto p = fixture_pipeline();
    std::map<std::string, const Template*> by_id;
    for (const auto& t : p.templates) by_id[t.id] = &t;
    nn::Rng rng(11);
    const auto rows = instantiate(synthetic_corpus(1000, 5), p.bank, p.templates, schema(), rng);
    ASSERT_EQ(rows.size(), 1000u);
    for (const auto& r : rows) {
        ASSERT_EQ(r.prompt.find('['), std::string::npos) << r.prompt;
        const auto labels = invert_prompt(r.prompt, *by_id.at(r.template_id), p.bank);
        ASSERT_TRUE(labels.has_value()) << r.prompt;
        ASSERT_EQ(labels->size(), r.attributes.size());
        for (const auto& a : r.attributes) ASSERT_EQ(labels->at(a), r.profile.labels.at(a)) << r.prompt;
    }
}

TEST(Instantiate, NoPlaceholderAblation) {
    PipelineOptions opt;
    opt.placeholder = false;
    const auto direct = fixture_pipeline(opt);
    for (const auto& t : direct.templates) {
        EXPECT_FALSE(t.has_placeholders());
        EXPECT_EQ(t.fixed_classes.size(), t.attributes.size());
    }
    const auto corpus = synthetic_corpus(600, 9);
    nn::Rng r1(1), r2(1);
    const auto rows = instantiate(corpus, direct.bank, direct.templates, schema(), r1);
    for (const auto& r : rows) EXPECT_TRUE(r.keywords.empty());
    const auto full = fixture_pipeline();
    const auto full_rows = instantiate(corpus, full.bank, full.templates, schema(), r2);
    const auto sd = dataset_stats(rows), sf = dataset_stats(full_rows);
    EXPECT_GT(sf.reuse_factor, 2.0 * sd.reuse_factor);
}

TEST(Templates, SplitKeepsEveryGroupInTraining) {
    const auto p = fixture_pipeline();
    nn::Rng rng(2);
    const auto [train, held] = split_templates(p.templates, 1, rng);
    EXPECT_EQ(train.size() + held.size(), p.templates.size());
    std::set<std::string> train_groups, held_groups;
    for (const auto& t : train) train_groups.insert(subset_key(t.attributes, schema()));
    for (const auto& t : held) held_groups.insert(subset_key(t.attributes, schema()));
    EXPECT_EQ(train_groups.size(), 15u);
    EXPECT_EQ(held_groups.size(), 15u);
    const auto j = templates_to_json(p.templates);
    EXPECT_EQ(templates_to_json(templates_from_json(j)), j);
}

TEST(Fixtures, HashPinnedResponseWins) {
    const auto dir = tmp_dir("fixtures");
    std::filesystem::create_directories(dir / "stage1");
    std::ofstream(dir / "stage1" / "gender_male.txt") << "1. generic\n";
    const LlmRequest req{"stage1", "gender_male", "exact query"};
    std::ofstream(dir / "stage1" / ("gender_male." + request_hash(req.prompt) + ".txt")) << "1. pinned\n";
    FixtureClient c(dir);
    EXPECT_EQ(c.complete(req), "1. pinned\n");
    EXPECT_EQ(c.complete({"stage1", "gender_male", "other"}), "1. generic\n");
    EXPECT_THROW(c.complete({"stage1", "gender_female", "x"}), LlmError);
    EXPECT_THROW(FixtureClient(dir / "missing"), IoError);
}

TEST(Queries, AssetFilesMatchBuiltIns) {
    Queries builtin;
    Queries loaded = Queries::load(std::filesystem::path(PROMPTVAR_ASSET_DIR) / "queries");
    auto a = builtin.fields();
    auto b = loaded.fields();
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].second, *b[i].second) << a[i].first;
    EXPECT_EQ(Queries::render("{n} x {unknown}", {{"n", "5"}}), "5 x {unknown}");
}

class HttpBackend : public ::testing::Test {
protected:
    void SetUp() override {
        ::setenv("PROMPTVAR_TEST_KEY", "sk-test", 1);
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = ++calls_;
            last_body_ = req.body;
            last_auth_ = req.get_header_value("Authorization");
            if (n <= fail_first_) {
                res.status = 500;
                return;
            }
            if (bad_request_) {
                res.status = 400;
                res.set_content("{\"error\":\"bad\"}", "application/json");
                return;
            }
            nlohmann::json j{{"choices", {{{"message", {{"role", "assistant"}, {"content", "1. man\n2. boy"}}}}}}};
            res.set_content(j.dump(), "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    void TearDown() override {
        server_.stop();
        thread_.join();
    }

    HttpClient client(std::vector<double>* sleeps) {
        HttpConfig cfg;
        cfg.endpoint = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat/completions";
        cfg.model = "test-model";
        cfg.api_key_env = "PROMPTVAR_TEST_KEY";
        cfg.temperature = 0.25;
        cfg.timeout_s = 5;
        return HttpClient(cfg, [sleeps](double s) { sleeps->push_back(s); });
    }

    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> calls_{0};
    int fail_first_ = 0;
    bool bad_request_ = false;
    std::string last_body_, last_auth_;
};

TEST_F(HttpBackend, PostsChatCompletion) {
    std::vector<double> sleeps;
    auto c = client(&sleeps);
    EXPECT_EQ(c.complete({"stage1", "gender_male", "list words"}), "1. man\n2. boy");
    const auto body = nlohmann::json::parse(last_body_);
    EXPECT_EQ(body["model"], "test-model");
    EXPECT_EQ(body["temperature"], 0.25);
    EXPECT_EQ(body["messages"][0]["content"], "list words");
    EXPECT_EQ(last_auth_, "Bearer sk-test");
    EXPECT_TRUE(sleeps.empty());
}

TEST_F(HttpBackend, RetriesWithExponentialBackoff) {
    fail_first_ = 2;
    std::vector<double> sleeps;
    auto c = client(&sleeps);
    EXPECT_EQ(c.complete({"s", "k", "q"}), "1. man\n2. boy");
    EXPECT_EQ(calls_, 3);
    EXPECT_EQ(sleeps, (std::vector<double>{1.0, 2.0}));
}

TEST_F(HttpBackend, GivesUpAfterThreeRetries) {
    fail_first_ = 100;
    std::vector<double> sleeps;
    auto c = client(&sleeps);
    EXPECT_THROW(c.complete({"s", "k", "q"}), LlmError);
    EXPECT_EQ(calls_, 4);
    EXPECT_EQ(sleeps, (std::vector<double>{1.0, 2.0, 4.0}));
}

TEST_F(HttpBackend, ClientErrorsAndMissingKey) {
    bad_request_ = true;
    std::vector<double> sleeps;
    auto c = client(&sleeps);
    EXPECT_THROW(c.complete({"s", "k", "q"}), LlmError);
    EXPECT_EQ(calls_, 1);
    ::unsetenv("PROMPTVAR_TEST_KEY");
    EXPECT_THROW(c.complete({"s", "k", "q"}), DependencyError);
}

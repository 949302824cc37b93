// promptvar: command-line driver for the prompt → style → variation workflow.
//
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 missing
// prerequisite.

#include <chrono>
#include <iostream>

#include <CLI11.hpp>

#include "promptvar/cli/commands.hpp"

using namespace promptvar;

namespace {

int exit_code(ErrorKind k) {
    switch (k) {
        case ErrorKind::config: return 2;
        case ErrorKind::dependency: return 4;
        default: return 3;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"promptvar: text-prompt style modeling with a variation network"};
    app.require_subcommand(1);
    std::string config_path = "promptvar.ini", run_dir = "run";
    bool json_logs = false, verbose = false;
    app.add_option("-c,--config", config_path, "configuration file")->capture_default_str();
    app.add_option("-r,--run-dir", run_dir, "run directory for outputs and manifests")->capture_default_str();
    app.add_flag("--json-logs", json_logs, "emit log lines as JSON objects");
    app.add_flag("-v,--verbose", verbose, "debug logging");

    std::optional<std::uint64_t> seed;
    std::string backend;
    auto add_seed = [&](CLI::App* sc) { sc->add_option("--seed", seed, "override [run] seed"); };

    auto* calibrate = app.add_subcommand("calibrate", "fit SLU class boundaries on the corpus");
    auto* tag = app.add_subcommand("tag", "label every corpus utterance (needs calibrate)");
    auto* promptgen = app.add_subcommand("promptgen", "generate the prompt dataset (needs tag)");
    bool no_placeholder = false;
    promptgen->add_option("--backend", backend, "override [llm] backend")->check(CLI::IsMember({"fixture", "http"}));
    promptgen->add_flag("--no-placeholder", no_placeholder, "ablation: ask the LLM for finished prompts");
    add_seed(promptgen);
    auto* train_style = app.add_subcommand("train-style", "train the prompt and reference encoders (needs promptgen)");
    add_seed(train_style);
    auto* train_varnet = app.add_subcommand("train-varnet", "train the variation network (needs train-style)");
    add_seed(train_varnet);
    auto* sample = app.add_subcommand("sample", "sample style vectors for a prompt (needs train-varnet)");
    std::string prompt;
    std::size_t count = 3;
    std::uint64_t sample_seed = 0;
    sample->add_option("prompt", prompt, "text prompt")->required();
    sample->add_option("-n,--count", count, "number of samples")->capture_default_str();
    sample->add_option("--sample-seed", sample_seed, "noise seed")->capture_default_str();
    auto* eval_sim = app.add_subcommand("eval-similarity", "similarity by varied aspect (needs train-varnet)");
    auto* eval_intent = app.add_subcommand("eval-intent", "intent classification accuracy (needs promptgen)");
    auto* pca = app.add_subcommand("pca", "2-D PCA of reference representations (needs train-style)");
    std::string pca_corpus;
    pca->add_option("--corpus", pca_corpus, "corpus directory (default: [paths] corpus)");
    auto* demo = app.add_subcommand("demo", "run the whole chain on synthetic fixtures");
    std::string demo_dir = "demo";
    std::uint64_t demo_seed = 42;
    demo->add_option("--dir", demo_dir, "output directory")->capture_default_str();
    demo->add_option("--seed", demo_seed, "seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    log::sink().json = json_logs;
    if (verbose) log::sink().min_level = log::Level::debug;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        if (demo->parsed()) {
            const auto r = cli::cmd_demo(demo_dir, demo_seed, std::filesystem::path(PROMPTVAR_ASSET_DIR) / "fixtures");
            std::cout << r.similarity.to_table() << "\n" << r.intent.to_table() << "\n";
            std::cout << "PCA silhouette (2 speakers): " << r.pca.silhouette.value_or(0.0) << "\n";
        } else {
            auto cfg = cli::load_config(config_path);
            if (seed) cfg.seed = *seed;
            if (!backend.empty()) cfg.backend = backend;
            const cli::Context ctx(cfg, run_dir);
            if (calibrate->parsed()) cli::cmd_calibrate(ctx);
            if (tag->parsed()) cli::cmd_tag(ctx);
            if (promptgen->parsed()) cli::cmd_promptgen(ctx, {!no_placeholder});
            if (train_style->parsed()) cli::cmd_train_style(ctx);
            if (train_varnet->parsed()) cli::cmd_train_varnet(ctx);
            if (sample->parsed()) std::cout << cli::cmd_sample(ctx, prompt, count, sample_seed).dump(1) << "\n";
            if (eval_sim->parsed()) std::cout << cli::cmd_eval_similarity(ctx).to_table();
            if (eval_intent->parsed()) std::cout << cli::cmd_eval_intent(ctx).to_table();
            if (pca->parsed()) {
                const auto r = cli::cmd_pca(ctx, pca_corpus.empty() ? cfg.corpus : std::filesystem::path(pca_corpus));
                std::cout << r.to_json().dump(1) << "\n";
            }
        }
    } catch (const Error& e) {
        log::error("promptvar", e.what());
        return exit_code(e.kind());
    } catch (const nlohmann::json::exception& e) {
        log::error("promptvar", std::string("malformed JSON: ") + e.what());
        return 3;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    log::info("promptvar", "done in " + std::to_string(secs) + " s");
    return 0;
}

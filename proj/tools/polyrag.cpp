#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "polyrag/pipeline.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string mock_path;
    std::string out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
    cmd->add_option("--config", opts.config_path, "pipeline config file")->required();
    cmd->add_option("--mock", opts.mock_path, "mock transcript file; overrides llm.endpoint");
    cmd->add_option("--out", opts.out_dir, "output directory; overrides output_dir");
}

polyrag::PipelineConfig load(const CommonOpts& opts) {
    polyrag::PipelineConfig cfg = polyrag::load_config(opts.config_path);
    if (!opts.mock_path.empty())
        cfg.llm.endpoint = "mock:" + std::filesystem::absolute(opts.mock_path).string();
    if (!opts.out_dir.empty()) cfg.output_dir = std::filesystem::absolute(opts.out_dir);
    if (const char* key = std::getenv("POLYRAG_API_KEY")) cfg.llm.api_key = key;
    return cfg;
}

std::vector<polyrag::View> parse_views_arg(const std::string& arg) {
    std::vector<polyrag::View> views;
    std::size_t pos = 0;
    while (pos <= arg.size()) {
        const std::size_t comma = arg.find(',', pos);
        const std::string token =
            polyrag::trim(arg.substr(pos, (comma == std::string::npos ? arg.size() : comma) - pos));
        if (!token.empty()) views.push_back(polyrag::parse_view(token));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return views;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"polyview document reranking pipeline"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(polyrag::kVersion));

    CommonOpts ingest_opts, score_opts, rerank_opts, evalret_opts, gen_opts, evalgen_opts,
        label_opts;
    std::string views_arg, profile_arg;
    int k_arg = 0;
    std::string fixture_out = "fixture";
    std::uint64_t fixture_seed = 42;

    CLI::App* ingest = app.add_subcommand("ingest", "validate and materialize the corpus");
    add_common(ingest, ingest_opts);

    CLI::App* score = app.add_subcommand("score", "compute per-view scores into the cache");
    add_common(score, score_opts);
    score->add_option("--views", views_arg, "comma-separated view subset (default: all)");

    CLI::App* rerank = app.add_subcommand("rerank", "fuse views and write top-k rankings");
    add_common(rerank, rerank_opts);
    rerank->add_option("--profile", profile_arg, "weight profile id; overrides domain mapping");
    rerank->add_option("--k", k_arg, "list depth; overrides the profile's k");

    CLI::App* evalret = app.add_subcommand("eval-retrieval", "score rankings against annotations");
    add_common(evalret, evalret_opts);
    int evalret_k = 0;
    evalret->add_option("--k", evalret_k, "evaluation depth; overrides eval.k");

    CLI::App* gen = app.add_subcommand("generate", "draft answers from ranked context");
    add_common(gen, gen_opts);

    CLI::App* evalgen = app.add_subcommand("eval-generation", "judge generated answers");
    add_common(evalgen, evalgen_opts);

    CLI::App* label = app.add_subcommand("label-utility", "log-prob utility labels per document");
    add_common(label, label_opts);

    CLI::App* fixture = app.add_subcommand("fixture", "write a synthetic working tree");
    fixture->add_option("--out", fixture_out, "directory to create");
    fixture->add_option("--seed", fixture_seed, "generator seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 3;
    }

    try {
        if (ingest->parsed()) {
            polyrag::cmd_ingest(load(ingest_opts));
        } else if (score->parsed()) {
            polyrag::cmd_score(load(score_opts), parse_views_arg(views_arg));
        } else if (rerank->parsed()) {
            polyrag::cmd_rerank(load(rerank_opts), profile_arg, k_arg);
        } else if (evalret->parsed()) {
            polyrag::cmd_eval_retrieval(load(evalret_opts), evalret_k);
        } else if (gen->parsed()) {
            polyrag::cmd_generate(load(gen_opts));
        } else if (evalgen->parsed()) {
            polyrag::cmd_eval_generation(load(evalgen_opts));
        } else if (label->parsed()) {
            polyrag::cmd_label_utility(load(label_opts));
        } else if (fixture->parsed()) {
            polyrag::cmd_fixture(fixture_out, fixture_seed);
        }
    } catch (const polyrag::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

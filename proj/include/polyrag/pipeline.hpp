#pragma once

#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyrag/corpus.hpp"
#include "polyrag/embedding.hpp"
#include "polyrag/geneval.hpp"
#include "polyrag/jsonl.hpp"
#include "polyrag/llmgate.hpp"
#include "polyrag/mixture.hpp"
#include "polyrag/prompts_builtin.hpp"
#include "polyrag/retmetrics.hpp"
#include "polyrag/scorers.hpp"

namespace polyrag {

namespace fs = std::filesystem;

// ---- Configuration ------------------------------------------------------------------

struct CorpusPaths {
    fs::path queries;
    fs::path documents;
    fs::path authority_table;
    Date reference_date{2024, 6, 1};
};

struct ProfilesConfig {
    fs::path file;
    std::map<Domain, std::string> by_domain;
};

struct RelevanceConfig {
    enum class Backend { bm25, embed, llm } backend = Backend::bm25;
    Bm25Params bm25;
};

struct UtilityConfig {
    enum class Backend { oracle, embed } backend = Backend::oracle;
};

struct SupplementConfig {
    enum class Backend { oracle, llm } backend = Backend::oracle;
};

struct TimelinessConfig {
    double half_life_days = 365.0;
    double missing_date_score = 0.5;
};

struct EmbeddingConfig {
    int dimension = 64;
    std::uint64_t seed = 7;
};

struct EvalConfig {
    int k = 3;
    GainMode gain_mode = GainMode::binary;
    HitMode hit_mode = HitMode::capped_recall;
};

struct PipelineConfig {
    CorpusPaths corpus;
    ProfilesConfig profiles;
    RelevanceConfig relevance;
    UtilityConfig utility;
    SupplementConfig supplement;
    TimelinessConfig timeliness;
    EmbeddingConfig embedding;          // relevance/utility embed backends
    EmbeddingConfig topic_embedding;    // clustering
    LlmConfig llm;
    std::optional<fs::path> prompt_dir; // unset: use the compiled-in templates
    bool generate_with_context = true;
    EvalConfig eval;
    fs::path cache_dir = "cache";
    fs::path output_dir = "out";
    int concurrency = 4;

    fs::path config_path; // where the config was loaded from
    std::string config_hash;
};

namespace detail {

inline fs::path resolve_path(const fs::path& base, const std::string& p) {
    fs::path path = p;
    return path.is_absolute() ? path : base / path;
}

inline void reject_unknown_keys(const Json& j, std::initializer_list<const char*> known,
                                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw ConfigError("unknown config key '" + it.key() + "' in " + where);
    }
}

inline const Json* maybe(const Json& j, const char* key) {
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
}

inline std::string want_string(const Json& j, const char* key, const std::string& where) {
    const Json* v = maybe(j, key);
    if (!v || !v->is_string())
        throw ConfigError("config key '" + std::string(key) + "' in " + where +
                          " must be a string");
    return v->get<std::string>();
}

inline double number_or(const Json& j, const char* key, double fallback, const std::string& where) {
    const Json* v = maybe(j, key);
    if (!v) return fallback;
    if (!v->is_number())
        throw ConfigError("config key '" + std::string(key) + "' in " + where +
                          " must be a number");
    return v->get<double>();
}

inline int int_or(const Json& j, const char* key, int fallback, const std::string& where) {
    const Json* v = maybe(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer())
        throw ConfigError("config key '" + std::string(key) + "' in " + where +
                          " must be an integer");
    return v->get<int>();
}

inline bool bool_or(const Json& j, const char* key, bool fallback, const std::string& where) {
    const Json* v = maybe(j, key);
    if (!v) return fallback;
    if (!v->is_boolean())
        throw ConfigError("config key '" + std::string(key) + "' in " + where +
                          " must be a boolean");
    return v->get<bool>();
}

inline std::string string_or(const Json& j, const char* key, const std::string& fallback,
                             const std::string& where) {
    const Json* v = maybe(j, key);
    if (!v) return fallback;
    if (!v->is_string())
        throw ConfigError("config key '" + std::string(key) + "' in " + where +
                          " must be a string");
    return v->get<std::string>();
}

inline EmbeddingConfig embedding_from_json(const Json& j, const std::string& where,
                                           EmbeddingConfig defaults) {
    reject_unknown_keys(j, {"dimension", "seed"}, where);
    EmbeddingConfig e = defaults;
    e.dimension = int_or(j, "dimension", e.dimension, where);
    if (e.dimension < 1) throw ConfigError("embedding dimension must be >= 1");
    const Json* s = maybe(j, "seed");
    if (s) {
        if (!s->is_number_integer()) throw ConfigError("embedding seed must be an integer");
        e.seed = s->get<std::uint64_t>();
    }
    return e;
}

} // namespace detail

// Reads a pipeline config. Every relative path inside the file resolves
// against the file's own directory, so a config tree can be moved or
// copied wholesale.
inline PipelineConfig load_config(const fs::path& config_path) {
    Json j;
    try {
        j = Json::parse(read_file(config_path));
    } catch (const Json::parse_error& e) {
        throw ConfigError("config " + config_path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be an object");
    detail::reject_unknown_keys(j,
                                {"corpus", "profiles", "scorers", "llm", "prompt_dir",
                                 "generation", "eval", "cache_dir", "output_dir", "concurrency"},
                                "config");
    const fs::path base = config_path.has_parent_path() ? config_path.parent_path() : fs::path(".");

    PipelineConfig cfg;
    cfg.config_path = config_path;
    cfg.config_hash = file_fingerprint(config_path);

    {
        const Json* c = detail::maybe(j, "corpus");
        if (!c || !c->is_object()) throw ConfigError("config needs a 'corpus' object");
        detail::reject_unknown_keys(*c, {"queries", "documents", "authority_table", "reference_date"},
                                    "corpus");
        cfg.corpus.queries = detail::resolve_path(base, detail::want_string(*c, "queries", "corpus"));
        cfg.corpus.documents =
            detail::resolve_path(base, detail::want_string(*c, "documents", "corpus"));
        cfg.corpus.authority_table =
            detail::resolve_path(base, detail::want_string(*c, "authority_table", "corpus"));
        const std::string ref = detail::want_string(*c, "reference_date", "corpus");
        const auto date = parse_iso_date(ref);
        if (!date) throw ConfigError("corpus.reference_date is not a valid ISO date: " + ref);
        cfg.corpus.reference_date = *date;
    }
    {
        const Json* p = detail::maybe(j, "profiles");
        if (!p || !p->is_object()) throw ConfigError("config needs a 'profiles' object");
        detail::reject_unknown_keys(*p, {"file", "by_domain"}, "profiles");
        cfg.profiles.file = detail::resolve_path(base, detail::want_string(*p, "file", "profiles"));
        const Json* m = detail::maybe(*p, "by_domain");
        if (!m || !m->is_object()) throw ConfigError("profiles.by_domain must be an object");
        for (auto it = m->begin(); it != m->end(); ++it) {
            Domain domain;
            try {
                domain = parse_domain(it.key());
            } catch (const DataError& e) {
                throw ConfigError(e.what());
            }
            if (!it->is_string()) throw ConfigError("profiles.by_domain values must be strings");
            cfg.profiles.by_domain[domain] = it->get<std::string>();
        }
        for (Domain d : {Domain::CARE, Domain::INQUIRY, Domain::POLICY})
            if (!cfg.profiles.by_domain.count(d))
                throw ConfigError(std::string("profiles.by_domain lacks an entry for ") +
                                  domain_name(d));
    }
    if (const Json* s = detail::maybe(j, "scorers")) {
        if (!s->is_object()) throw ConfigError("'scorers' must be an object");
        detail::reject_unknown_keys(
            *s, {"relevance", "utility", "supplement", "timeliness", "embedding", "topic_embedding"},
            "scorers");
        if (const Json* r = detail::maybe(*s, "relevance")) {
            detail::reject_unknown_keys(*r, {"backend", "k1", "b", "tokenizer"}, "scorers.relevance");
            const std::string backend = detail::string_or(*r, "backend", "bm25", "scorers.relevance");
            if (backend == "bm25") cfg.relevance.backend = RelevanceConfig::Backend::bm25;
            else if (backend == "embed") cfg.relevance.backend = RelevanceConfig::Backend::embed;
            else if (backend == "llm") cfg.relevance.backend = RelevanceConfig::Backend::llm;
            else throw ConfigError("unknown relevance backend '" + backend + "' (bm25|embed|llm)");
            cfg.relevance.bm25.k1 = detail::number_or(*r, "k1", 1.2, "scorers.relevance");
            cfg.relevance.bm25.b = detail::number_or(*r, "b", 0.75, "scorers.relevance");
            const std::string tok = detail::string_or(*r, "tokenizer", "words", "scorers.relevance");
            if (tok == "words") cfg.relevance.bm25.tokenizer = Bm25Params::Tokenizer::unicode_words;
            else if (tok == "bigrams")
                cfg.relevance.bm25.tokenizer = Bm25Params::Tokenizer::char_bigrams;
            else throw ConfigError("unknown tokenizer '" + tok + "' (words|bigrams)");
        }
        if (const Json* u = detail::maybe(*s, "utility")) {
            detail::reject_unknown_keys(*u, {"backend"}, "scorers.utility");
            const std::string backend = detail::string_or(*u, "backend", "oracle", "scorers.utility");
            if (backend == "oracle") cfg.utility.backend = UtilityConfig::Backend::oracle;
            else if (backend == "embed") cfg.utility.backend = UtilityConfig::Backend::embed;
            else throw ConfigError("unknown utility backend '" + backend + "' (oracle|embed)");
        }
        if (const Json* u = detail::maybe(*s, "supplement")) {
            detail::reject_unknown_keys(*u, {"backend"}, "scorers.supplement");
            const std::string backend =
                detail::string_or(*u, "backend", "oracle", "scorers.supplement");
            if (backend == "oracle") cfg.supplement.backend = SupplementConfig::Backend::oracle;
            else if (backend == "llm") cfg.supplement.backend = SupplementConfig::Backend::llm;
            else throw ConfigError("unknown supplement backend '" + backend + "' (oracle|llm)");
        }
        if (const Json* t = detail::maybe(*s, "timeliness")) {
            detail::reject_unknown_keys(*t, {"half_life_days", "missing_date_score"},
                                        "scorers.timeliness");
            cfg.timeliness.half_life_days =
                detail::number_or(*t, "half_life_days", 365.0, "scorers.timeliness");
            cfg.timeliness.missing_date_score =
                detail::number_or(*t, "missing_date_score", 0.5, "scorers.timeliness");
            if (cfg.timeliness.half_life_days <= 0.0)
                throw ConfigError("timeliness.half_life_days must be > 0");
            if (cfg.timeliness.missing_date_score < 0.0 || cfg.timeliness.missing_date_score > 1.0)
                throw ConfigError("timeliness.missing_date_score must lie in [0, 1]");
        }
        if (const Json* e = detail::maybe(*s, "embedding"))
            cfg.embedding = detail::embedding_from_json(*e, "scorers.embedding", cfg.embedding);
        cfg.topic_embedding = cfg.embedding;
        cfg.topic_embedding.seed = cfg.embedding.seed + 1;
        if (const Json* e = detail::maybe(*s, "topic_embedding"))
            cfg.topic_embedding =
                detail::embedding_from_json(*e, "scorers.topic_embedding", cfg.topic_embedding);
    } else {
        cfg.topic_embedding = cfg.embedding;
        cfg.topic_embedding.seed = cfg.embedding.seed + 1;
    }
    if (const Json* l = detail::maybe(j, "llm")) {
        if (!l->is_object()) throw ConfigError("'llm' must be an object");
        detail::reject_unknown_keys(*l,
                                    {"endpoint", "model", "temperature", "max_tokens_grade",
                                     "max_tokens_generate", "concurrency", "supports_logprobs"},
                                    "llm");
        cfg.llm.endpoint = detail::string_or(*l, "endpoint", "", "llm");
        cfg.llm.model = detail::string_or(*l, "model", "judge", "llm");
        cfg.llm.temperature = detail::number_or(*l, "temperature", 0.0, "llm");
        cfg.llm.max_tokens_grade = detail::int_or(*l, "max_tokens_grade", 1, "llm");
        cfg.llm.max_tokens_generate = detail::int_or(*l, "max_tokens_generate", 1024, "llm");
        cfg.llm.concurrency_limit = detail::int_or(*l, "concurrency", 4, "llm");
        cfg.llm.supports_logprobs = detail::bool_or(*l, "supports_logprobs", false, "llm");
        if (cfg.llm.endpoint.rfind("mock:", 0) == 0)
            cfg.llm.endpoint =
                "mock:" + detail::resolve_path(base, cfg.llm.endpoint.substr(5)).string();
    }
    if (const Json* p = detail::maybe(j, "prompt_dir")) {
        if (!p->is_string()) throw ConfigError("'prompt_dir' must be a string");
        cfg.prompt_dir = detail::resolve_path(base, p->get<std::string>());
    }
    if (const Json* g = detail::maybe(j, "generation")) {
        if (!g->is_object()) throw ConfigError("'generation' must be an object");
        detail::reject_unknown_keys(*g, {"with_context"}, "generation");
        cfg.generate_with_context = detail::bool_or(*g, "with_context", true, "generation");
    }
    if (const Json* e = detail::maybe(j, "eval")) {
        if (!e->is_object()) throw ConfigError("'eval' must be an object");
        detail::reject_unknown_keys(*e, {"k", "gain_mode", "hit_mode"}, "eval");
        cfg.eval.k = detail::int_or(*e, "k", 3, "eval");
        if (cfg.eval.k < 1) throw ConfigError("eval.k must be >= 1");
        cfg.eval.gain_mode = parse_gain_mode(detail::string_or(*e, "gain_mode", "binary", "eval"));
        cfg.eval.hit_mode =
            parse_hit_mode(detail::string_or(*e, "hit_mode", "capped_recall", "eval"));
    }
    cfg.cache_dir = detail::resolve_path(base, detail::string_or(j, "cache_dir", "cache", "config"));
    cfg.output_dir =
        detail::resolve_path(base, detail::string_or(j, "output_dir", "out", "config"));
    cfg.concurrency = detail::int_or(j, "concurrency", 4, "config");
    if (cfg.concurrency < 1) throw ConfigError("concurrency must be >= 1");
    return cfg;
}

// ---- Shared stage helpers ----------------------------------------------------------

inline fs::path materialized_queries(const PipelineConfig& cfg) {
    return cfg.output_dir / "corpus" / "queries.jsonl";
}
inline fs::path materialized_documents(const PipelineConfig& cfg) {
    return cfg.output_dir / "corpus" / "documents.jsonl";
}
inline fs::path materialized_authority(const PipelineConfig& cfg) {
    return cfg.output_dir / "corpus" / "authority.jsonl";
}
inline fs::path rankings_path(const PipelineConfig& cfg) {
    return cfg.output_dir / "rerank" / "rankings.jsonl";
}
inline fs::path answers_path(const PipelineConfig& cfg) {
    return cfg.output_dir / "generation" / "answers.jsonl";
}
inline fs::path cache_path(const PipelineConfig& cfg, View view) {
    return cfg.cache_dir / (std::string(view_name(view)) + ".jsonl");
}

inline Corpus load_materialized_corpus(const PipelineConfig& cfg) {
    if (!fs::exists(materialized_queries(cfg)) || !fs::exists(materialized_documents(cfg)))
        throw ConfigError("no ingested corpus under " + (cfg.output_dir / "corpus").string() +
                          "; run 'ingest' first");
    return load_corpus(materialized_queries(cfg), materialized_documents(cfg),
                       cfg.corpus.reference_date);
}

inline AuthorityTable load_materialized_authority(const PipelineConfig& cfg) {
    if (!fs::exists(materialized_authority(cfg)))
        throw ConfigError("no ingested authority table; run 'ingest' first");
    return load_authority_table(materialized_authority(cfg));
}

inline PromptRegistry load_prompts(const PipelineConfig& cfg) {
    return cfg.prompt_dir ? PromptRegistry::load_dir(*cfg.prompt_dir) : builtin_prompts();
}

inline std::string scorer_id_for(const PipelineConfig& cfg, View view) {
    switch (view) {
        case View::Relevance:
            switch (cfg.relevance.backend) {
                case RelevanceConfig::Backend::bm25: return make_bm25_scorer_id(cfg.relevance.bm25);
                case RelevanceConfig::Backend::embed: {
                    HashProjectionProvider p(cfg.embedding.dimension, cfg.embedding.seed);
                    return "embed-cos:" + p.provider_id();
                }
                case RelevanceConfig::Backend::llm: return "llm-grade:" + cfg.llm.model;
            }
            break;
        case View::Utility:
            if (cfg.utility.backend == UtilityConfig::Backend::oracle) return "oracle:utility";
            {
                HashProjectionProvider p(cfg.embedding.dimension, cfg.embedding.seed);
                return "utility-cos:" + p.provider_id();
            }
        case View::Supplement:
            return cfg.supplement.backend == SupplementConfig::Backend::oracle
                       ? "oracle:supplement"
                       : "llm-supp:" + cfg.llm.model;
        case View::Authority: return "authority:table";
        case View::Timeliness:
            return make_timeliness_scorer_id(cfg.timeliness.half_life_days,
                                             cfg.timeliness.missing_date_score);
    }
    throw ConfigError("unknown view");
}

inline Json view_score_to_json(const ViewScore& s) {
    Json j;
    j["query_id"] = s.query_id;
    j["doc_id"] = s.doc_id;
    j["view"] = view_name(s.view);
    j["scorer_id"] = s.scorer_id;
    j["raw"] = s.raw;
    j["normalized"] = s.normalized;
    return j;
}

inline ViewScore view_score_from_json(const Json& j, long line = -1) {
    ViewScore s;
    s.query_id = detail::need_string(j, "query_id", line);
    s.doc_id = detail::need_string(j, "doc_id", line);
    s.view = parse_view(detail::need_string(j, "view", line));
    s.scorer_id = detail::need_string(j, "scorer_id", line);
    const Json& raw = detail::need_field(j, "raw", line);
    const Json& norm = detail::need_field(j, "normalized", line);
    if (!raw.is_number() || !norm.is_number())
        throw DataError("fields 'raw' and 'normalized' must be numbers", line);
    s.raw = raw.get<double>();
    s.normalized = norm.get<double>();
    return s;
}

// key: query_id \x1f doc_id
inline std::map<std::string, ViewScore> load_score_cache(const fs::path& path,
                                                         const std::string& scorer_id) {
    std::map<std::string, ViewScore> out;
    if (!fs::exists(path)) return out;
    for (const auto& [line, j] : read_jsonl(path)) {
        ViewScore s = view_score_from_json(j, line);
        if (s.scorer_id != scorer_id) continue; // stale entries are dropped on rewrite
        out[s.query_id + '\x1f' + s.doc_id] = std::move(s);
    }
    return out;
}

inline void save_score_cache(const fs::path& path, const std::map<std::string, ViewScore>& cache) {
    std::vector<Json> rows;
    rows.reserve(cache.size());
    for (const auto& [_, s] : cache) rows.push_back(view_score_to_json(s));
    write_jsonl(path, rows);
}

// ---- Manifests -------------------------------------------------------------------------

// Every command drops a manifest next to its outputs: what ran, over which
// input content, with which parameters. No timestamps or absolute paths, so
// reruns over identical inputs produce identical bytes.
struct ManifestInputs {
    std::map<std::string, std::string> hashes; // logical name -> content hash
    void add(const std::string& name, const fs::path& path) {
        if (fs::exists(path)) hashes[name] = file_fingerprint(path);
    }
};

inline void write_manifest(const PipelineConfig& cfg, const std::string& command,
                           const ManifestInputs& inputs, const Json& params,
                           const std::string& error = "") {
    Json j;
    j["command"] = command;
    j["version"] = kVersion;
    j["status"] = error.empty() ? "ok" : "error";
    j["config_hash"] = cfg.config_hash;
    j["input_hashes"] = inputs.hashes;
    j["params"] = params;
    if (!error.empty()) j["error"] = error;
    write_file_atomic(cfg.output_dir / "manifests" / (command + ".json"), j.dump(2) + "\n");
}

// Runs a stage body and records the manifest whether it succeeds or throws.
template <typename Fn>
void run_stage(const PipelineConfig& cfg, const std::string& command, const ManifestInputs& inputs,
               const Json& params, Fn body) {
    try {
        body();
    } catch (const std::exception& e) {
        write_manifest(cfg, command, inputs, params, e.what());
        throw;
    }
    write_manifest(cfg, command, inputs, params);
}

// ---- ingest ---------------------------------------------------------------------------

// Validates the corpus, fills in publish dates recoverable from body text,
// and materializes the result under the output directory for later stages.
inline void cmd_ingest(const PipelineConfig& cfg, std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", cfg.corpus.queries);
    inputs.add("documents", cfg.corpus.documents);
    inputs.add("authority_table", cfg.corpus.authority_table);
    Json params;
    params["reference_date"] = cfg.corpus.reference_date.to_string();

    run_stage(cfg, "ingest", inputs, params, [&] {
        Corpus corpus =
            load_corpus(cfg.corpus.queries, cfg.corpus.documents, cfg.corpus.reference_date);
        AuthorityTable table = load_authority_table(cfg.corpus.authority_table);
        std::size_t extracted = 0;
        for (Document& doc : corpus.documents) {
            if (doc.publish_date) continue;
            const auto date = extract_publish_date(doc.text);
            if (date && !(cfg.corpus.reference_date < *date)) {
                doc.publish_date = *date;
                ++extracted;
            }
        }
        save_corpus(corpus, materialized_queries(cfg), materialized_documents(cfg));
        save_authority_table(table, materialized_authority(cfg));
        out << "queries=" << corpus.queries.size() << " documents=" << corpus.documents.size()
            << " dates_extracted=" << extracted << "\n";
    });
}

// ---- score ----------------------------------------------------------------------------

namespace detail {

inline std::vector<ViewScore> compute_view_scores(const PipelineConfig& cfg, View view,
                                                  const Corpus& corpus,
                                                  const AuthorityTable& table,
                                                  const PromptRegistry* prompts,
                                                  ChatClient* client,
                                                  const std::vector<std::pair<const Query*, const Document*>>& pairs) {
    std::vector<ViewScore> out(pairs.size());
    const auto run_parallel = [&](auto fn) {
        parallel_for(pairs.size(), static_cast<std::size_t>(cfg.concurrency),
                     [&](std::size_t i) { out[i] = fn(*pairs[i].first, *pairs[i].second); });
    };
    switch (view) {
        case View::Relevance:
            switch (cfg.relevance.backend) {
                case RelevanceConfig::Backend::bm25: {
                    // grouped per query: normalization spans the candidate set
                    std::map<std::string, std::vector<std::size_t>> by_query;
                    for (std::size_t i = 0; i < pairs.size(); ++i)
                        by_query[pairs[i].first->id].push_back(i);
                    for (const auto& [qid, idx] : by_query) {
                        std::vector<const Document*> docs;
                        for (std::size_t i : idx) docs.push_back(pairs[i].second);
                        const Query* q = pairs[idx.front()].first;
                        std::vector<ViewScore> scores = score_bm25(*q, docs, cfg.relevance.bm25);
                        for (std::size_t j = 0; j < idx.size(); ++j) out[idx[j]] = scores[j];
                    }
                    break;
                }
                case RelevanceConfig::Backend::embed: {
                    HashProjectionProvider provider(cfg.embedding.dimension, cfg.embedding.seed);
                    run_parallel([&](const Query& q, const Document& d) {
                        return score_relevance_embedding(q, d, provider);
                    });
                    break;
                }
                case RelevanceConfig::Backend::llm:
                    run_parallel([&](const Query& q, const Document& d) {
                        return grade_relevance_llm(q, d, *prompts, *client,
                                                   cfg.llm.max_tokens_grade);
                    });
                    break;
            }
            break;
        case View::Utility:
            if (cfg.utility.backend == UtilityConfig::Backend::oracle) {
                run_parallel(
                    [&](const Query& q, const Document& d) { return score_utility_oracle(q, d); });
            } else {
                HashProjectionProvider provider(cfg.embedding.dimension, cfg.embedding.seed);
                run_parallel([&](const Query& q, const Document& d) {
                    return score_utility(q, d, provider);
                });
            }
            break;
        case View::Supplement:
            if (cfg.supplement.backend == SupplementConfig::Backend::oracle) {
                run_parallel([&](const Query& q, const Document& d) {
                    return score_supplement_oracle(q, d);
                });
            } else {
                run_parallel([&](const Query& q, const Document& d) {
                    return score_supplement_llm(q, d, *prompts, *client, cfg.llm.max_tokens_grade);
                });
            }
            break;
        case View::Authority:
            run_parallel([&](const Query& q, const Document& d) {
                ViewScore s = score_authority(d, table);
                s.query_id = q.id;
                return s;
            });
            break;
        case View::Timeliness:
            run_parallel([&](const Query& q, const Document& d) {
                ViewScore s = score_timeliness(d, cfg.corpus.reference_date,
                                               cfg.timeliness.half_life_days,
                                               cfg.timeliness.missing_date_score);
                s.query_id = q.id;
                return s;
            });
            break;
    }
    (void)corpus;
    return out;
}

} // namespace detail

inline bool view_needs_llm(const PipelineConfig& cfg, View view) {
    return (view == View::Relevance && cfg.relevance.backend == RelevanceConfig::Backend::llm) ||
           (view == View::Supplement && cfg.supplement.backend == SupplementConfig::Backend::llm);
}

// Scores the requested views over every (query, candidate) pair, reusing
// cached rows whose scorer id still matches. BM25 recomputes a whole query
// when any of its pairs is missing, since normalization spans the set.
inline void cmd_score(const PipelineConfig& cfg, std::vector<View> views,
                      std::ostream& out = std::cout) {
    if (views.empty()) views.assign(kAllViews.begin(), kAllViews.end());

    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    inputs.add("authority_table", materialized_authority(cfg));
    Json params;
    {
        Json v = Json::array();
        for (View view : views) v.push_back(view_name(view));
        params["views"] = v;
        Json ids = Json::object();
        for (View view : views) ids[view_name(view)] = scorer_id_for(cfg, view);
        params["scorer_ids"] = ids;
    }

    run_stage(cfg, "score", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        const AuthorityTable table = load_materialized_authority(cfg);

        std::optional<PromptRegistry> prompts;
        std::unique_ptr<ChatClient> client;
        for (View view : views) {
            if (!view_needs_llm(cfg, view)) continue;
            prompts = load_prompts(cfg);
            client = make_chat_client(cfg.llm);
            break;
        }

        for (View view : views) {
            const std::string scorer_id = scorer_id_for(cfg, view);
            const fs::path path = cache_path(cfg, view);
            std::map<std::string, ViewScore> cache = load_score_cache(path, scorer_id);

            std::vector<std::pair<const Query*, const Document*>> missing;
            std::set<std::string> force; // queries needing full recompute
            std::size_t cached = 0;
            const bool grouped = view == View::Relevance &&
                                 cfg.relevance.backend == RelevanceConfig::Backend::bm25;
            for (const Query& q : corpus.queries)
                for (const Document* d : corpus.docs_for(q.id))
                    if (!cache.count(q.id + '\x1f' + d->id)) force.insert(q.id);
            for (const Query& q : corpus.queries) {
                for (const Document* d : corpus.docs_for(q.id)) {
                    const bool have = cache.count(q.id + '\x1f' + d->id) > 0;
                    if (have && (!grouped || !force.count(q.id))) {
                        ++cached;
                        continue;
                    }
                    missing.push_back({&q, d});
                }
            }
            const std::vector<ViewScore> computed = detail::compute_view_scores(
                cfg, view, corpus, table, prompts ? &*prompts : nullptr, client.get(), missing);
            for (const ViewScore& s : computed) cache[s.query_id + '\x1f' + s.doc_id] = s;
            save_score_cache(path, cache);
            out << "view=" << view_name(view) << " computed=" << computed.size()
                << " cached=" << cached << "\n";
        }
    });
}

// ---- rerank ---------------------------------------------------------------------------

inline Json ranked_list_to_json(const RankedList& r) {
    Json entries = Json::array();
    for (const RankedEntry& e : r.entries) {
        Json je;
        je["doc_id"] = e.doc_id;
        je["score"] = e.score;
        je["topic_id"] = e.topic_id;
        entries.push_back(je);
    }
    Json j;
    j["query_id"] = r.query_id;
    j["profile_id"] = r.profile_id;
    j["entries"] = entries;
    return j;
}

inline RankedList ranked_list_from_json(const Json& j, long line = -1) {
    RankedList r;
    r.query_id = detail::need_string(j, "query_id", line);
    r.profile_id = detail::need_string(j, "profile_id", line);
    const Json& entries = detail::need_field(j, "entries", line);
    if (!entries.is_array()) throw DataError("field 'entries' must be an array", line);
    for (const Json& je : entries) {
        RankedEntry e;
        e.doc_id = detail::need_string(je, "doc_id", line);
        const Json& score = detail::need_field(je, "score", line);
        const Json& topic = detail::need_field(je, "topic_id", line);
        if (!score.is_number() || !topic.is_number_integer())
            throw DataError("ranked entry needs numeric 'score' and integer 'topic_id'", line);
        e.score = score.get<double>();
        e.topic_id = topic.get<int>();
        r.entries.push_back(std::move(e));
    }
    return r;
}

// Fuses cached view scores under each query's weight profile, clusters the
// candidates into topics, and writes the top-k ranking per query.
inline void cmd_rerank(const PipelineConfig& cfg, const std::string& profile_override = "",
                       int k_override = 0, std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    inputs.add("profiles", cfg.profiles.file);
    for (View view : kAllViews) inputs.add(std::string("cache_") + view_name(view),
                                           cache_path(cfg, view));
    Json params;
    params["profile_override"] = profile_override;
    params["k_override"] = k_override;

    run_stage(cfg, "rerank", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        const auto profiles = load_profiles(cfg.profiles.file);

        auto profile_for = [&](const Query& q) -> const WeightProfile& {
            const std::string name =
                !profile_override.empty() ? profile_override : cfg.profiles.by_domain.at(q.domain);
            auto it = profiles.find(name);
            if (it == profiles.end()) throw ConfigError("unknown profile '" + name + "'");
            return it->second;
        };

        // which views carry weight anywhere we plan to use them
        std::set<View> needed;
        for (const Query& q : corpus.queries) {
            const WeightProfile& p = profile_for(q);
            for (std::size_t i = 0; i < kAllViews.size(); ++i)
                if (p.weights[i] != 0.0) needed.insert(kAllViews[i]);
        }
        std::map<View, std::map<std::string, ViewScore>> caches;
        for (View view : needed) {
            const fs::path path = cache_path(cfg, view);
            if (!fs::exists(path))
                throw ConfigError(std::string("no cached scores for view '") + view_name(view) +
                                  "'; run 'score' first");
            caches[view] = load_score_cache(path, scorer_id_for(cfg, view));
        }

        HashProjectionProvider topics_provider(cfg.topic_embedding.dimension,
                                               cfg.topic_embedding.seed);
        std::vector<Json> rows;
        for (const Query& q : corpus.queries) {
            const WeightProfile& profile = profile_for(q);
            const auto docs = corpus.docs_for(q.id);
            if (docs.empty()) throw DataError("query '" + q.id + "' has no candidate documents");

            std::map<std::string, double> fused;
            for (const Document* d : docs) {
                ViewValues values;
                for (View view : needed) {
                    auto it = caches[view].find(q.id + '\x1f' + d->id);
                    if (it != caches[view].end()) values[view] = it->second.normalized;
                }
                fused[d->id] = integrate(profile, d->id, values);
            }
            std::vector<std::string> ids;
            std::vector<std::vector<double>> embeddings;
            for (const Document* d : docs) {
                ids.push_back(d->id);
                embeddings.push_back(topics_provider.embed(doc_content(*d)));
            }
            const TopicAssignment topics =
                assign_topics(ids, embeddings, profile.eps, profile.min_pts);
            const int k = k_override > 0 ? k_override : profile.k;
            RankedList ranked =
                select_topk(fused, topics, k, profile.composibility, q.id, profile.profile_id);
            rows.push_back(ranked_list_to_json(ranked));
        }
        write_jsonl(rankings_path(cfg), rows);
        out << "queries=" << rows.size() << "\n";
    });
}

// ---- eval-retrieval ---------------------------------------------------------------------

inline void cmd_eval_retrieval(const PipelineConfig& cfg, int k_override = 0,
                               std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    inputs.add("rankings", rankings_path(cfg));
    const int k = k_override > 0 ? k_override : cfg.eval.k;
    Json params;
    params["k"] = k;
    params["gain_mode"] = gain_mode_name(cfg.eval.gain_mode);
    params["hit_mode"] = hit_mode_name(cfg.eval.hit_mode);

    run_stage(cfg, "eval-retrieval", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        if (!fs::exists(rankings_path(cfg)))
            throw ConfigError("no rankings found; run 'rerank' first");
        std::map<std::string, std::vector<std::string>> rankings;
        for (const auto& [line, j] : read_jsonl(rankings_path(cfg))) {
            RankedList r = ranked_list_from_json(j, line);
            std::vector<std::string> ids;
            for (const RankedEntry& e : r.entries) ids.push_back(e.doc_id);
            rankings[r.query_id] = std::move(ids);
        }
        const RetrievalReport report =
            evaluate_retrieval(corpus, rankings, k, cfg.eval.gain_mode, cfg.eval.hit_mode);
        write_file_atomic(cfg.output_dir / "eval" / "retrieval.json",
                          retrieval_report_to_json(report).dump(2) + "\n");
        const std::string table = render_retrieval_table(report);
        write_file_atomic(cfg.output_dir / "eval" / "retrieval.txt", table);
        out << table;
    });
}

// ---- generate ---------------------------------------------------------------------------

inline void cmd_generate(const PipelineConfig& cfg, std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    inputs.add("rankings", rankings_path(cfg));
    Json params;
    params["with_context"] = cfg.generate_with_context;
    params["model"] = cfg.llm.model;

    run_stage(cfg, "generate", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        const PromptRegistry prompts = load_prompts(cfg);
        const std::unique_ptr<ChatClient> client = make_chat_client(cfg.llm);

        std::map<std::string, std::vector<const Document*>> contexts;
        if (cfg.generate_with_context) {
            if (!fs::exists(rankings_path(cfg)))
                throw ConfigError("no rankings found; run 'rerank' first");
            for (const auto& [line, j] : read_jsonl(rankings_path(cfg))) {
                RankedList r = ranked_list_from_json(j, line);
                std::vector<const Document*> docs;
                for (const RankedEntry& e : r.entries) {
                    const Document* match = nullptr;
                    for (const Document* d : corpus.docs_for(r.query_id))
                        if (d->id == e.doc_id) match = d;
                    if (!match)
                        throw DataError("ranking references unknown document '" + e.doc_id + "'",
                                        line);
                    docs.push_back(match);
                }
                contexts[r.query_id] = std::move(docs);
            }
        }

        std::vector<GeneratedAnswer> answers(corpus.queries.size());
        parallel_for(corpus.queries.size(), static_cast<std::size_t>(cfg.concurrency),
                     [&](std::size_t i) {
                         const Query& q = corpus.queries[i];
                         std::vector<const Document*> docs;
                         if (cfg.generate_with_context) {
                             auto it = contexts.find(q.id);
                             if (it == contexts.end())
                                 throw DataError("no ranking for query '" + q.id + "'");
                             docs = it->second;
                         }
                         answers[i] = generate_answer(*client, prompts, q, docs,
                                                      cfg.generate_with_context,
                                                      cfg.llm.max_tokens_generate);
                     });
        std::vector<Json> rows;
        std::size_t untagged = 0;
        for (const GeneratedAnswer& a : answers) {
            rows.push_back(answer_to_json(a));
            untagged += a.untagged ? 1 : 0;
        }
        write_jsonl(answers_path(cfg), rows);
        out << "answers=" << rows.size() << " untagged=" << untagged << "\n";
    });
}

// ---- eval-generation ----------------------------------------------------------------------

inline void cmd_eval_generation(const PipelineConfig& cfg, std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    inputs.add("answers", answers_path(cfg));
    Json params;
    params["model"] = cfg.llm.model;

    run_stage(cfg, "eval-generation", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        if (!fs::exists(answers_path(cfg)))
            throw ConfigError("no generated answers found; run 'generate' first");
        const PromptRegistry prompts = load_prompts(cfg);
        const std::unique_ptr<ChatClient> client = make_chat_client(cfg.llm);

        std::vector<GeneratedAnswer> answers;
        for (const auto& [line, j] : read_jsonl(answers_path(cfg)))
            answers.push_back(answer_from_json(j, line));
        const GenerationReport report =
            evaluate_generation(*client, prompts, corpus, answers, cfg.llm.max_tokens_generate);
        write_file_atomic(cfg.output_dir / "generation" / "report.json",
                          generation_report_to_json(report).dump(2) + "\n");
        char buf[160];
        std::snprintf(buf, sizeof buf,
                      "queries=%zu statements=%zu r_correct=%.2f r_incorrect=%.2f "
                      "r_not_mentioned=%.2f\n",
                      report.overall.n_queries, report.overall.total_statements,
                      report.overall.ratio(report.overall.counts.correct),
                      report.overall.ratio(report.overall.counts.incorrect),
                      report.overall.ratio(report.overall.counts.not_mentioned));
        out << buf;
    });
}

// ---- label-utility ---------------------------------------------------------------------

inline Json utility_label_to_json(const UtilityLabel& l) {
    Json j;
    j["query_id"] = l.query_id;
    j["doc_id"] = l.doc_id;
    j["with_ctx_meanlp"] = l.with_ctx_meanlp;
    j["without_ctx_meanlp"] = l.without_ctx_meanlp;
    j["delta"] = l.delta;
    j["utility"] = l.utility;
    return j;
}

// Labels every (query, candidate) pair with a log-prob based utility,
// using the query's ground truth as the scored answer. Queries lacking a
// ground truth are skipped.
inline void cmd_label_utility(const PipelineConfig& cfg, std::ostream& out = std::cout) {
    ManifestInputs inputs;
    inputs.add("queries", materialized_queries(cfg));
    inputs.add("documents", materialized_documents(cfg));
    Json params;
    params["model"] = cfg.llm.model;

    run_stage(cfg, "label-utility", inputs, params, [&] {
        const Corpus corpus = load_materialized_corpus(cfg);
        const PromptRegistry prompts = load_prompts(cfg);
        const std::unique_ptr<ChatClient> client = make_chat_client(cfg.llm);

        std::vector<std::pair<const Query*, const Document*>> pairs;
        std::size_t skipped = 0;
        for (const Query& q : corpus.queries) {
            if (!q.ground_truth) {
                ++skipped;
                continue;
            }
            for (const Document* d : corpus.docs_for(q.id)) pairs.push_back({&q, d});
        }
        std::vector<UtilityLabel> labels(pairs.size());
        parallel_for(pairs.size(), static_cast<std::size_t>(cfg.concurrency), [&](std::size_t i) {
            const auto& [q, d] = pairs[i];
            labels[i] = label_utility_llm(*q, *d, *q->ground_truth, prompts, *client,
                                          cfg.llm.max_tokens_grade);
        });
        std::vector<Json> rows;
        for (const UtilityLabel& l : labels) rows.push_back(utility_label_to_json(l));
        write_jsonl(cfg.output_dir / "labels" / "utility.jsonl", rows);
        out << "labeled=" << rows.size() << " skipped_queries=" << skipped << "\n";
    });
}

// ---- fixture -------------------------------------------------------------------------------

// Writes a self-contained working tree: synthetic corpus, authority table,
// weight profiles, and a config wired for a mock chat backend.
inline void cmd_fixture(const fs::path& dir, std::uint64_t seed, std::ostream& out = std::cout,
                        int n_queries = 6, int docs_per_query = 6) {
    const ConflictSpec spec;
    const Corpus corpus = synth_fixture(seed, n_queries, docs_per_query, spec);
    save_corpus(corpus, dir / "corpus" / "queries.jsonl", dir / "corpus" / "documents.jsonl");
    save_authority_table(synth_authority_table(), dir / "corpus" / "authority.jsonl");

    std::map<std::string, WeightProfile> profiles;
    WeightProfile care{"care", {0.35, 0.35, 0.1, 0.2, 0.0}, WeightProfile::Mode::linear, true,
                       3,      0.3,
                       2};
    WeightProfile inquiry{"inquiry", {0.35, 0.35, 0.1, 0.1, 0.1}, WeightProfile::Mode::linear,
                          true,      3,
                          0.3,       2};
    WeightProfile policy = inquiry;
    policy.profile_id = "policy";
    profiles[care.profile_id] = care;
    profiles[inquiry.profile_id] = inquiry;
    profiles[policy.profile_id] = policy;
    save_profiles(profiles, dir / "profiles.jsonl");

    Json cfg;
    cfg["corpus"] = {{"queries", "corpus/queries.jsonl"},
                     {"documents", "corpus/documents.jsonl"},
                     {"authority_table", "corpus/authority.jsonl"},
                     {"reference_date", spec.reference_date.to_string()}};
    cfg["profiles"] = {{"file", "profiles.jsonl"},
                       {"by_domain",
                        {{"CARE", "care"}, {"INQUIRY", "inquiry"}, {"POLICY", "policy"}}}};
    cfg["scorers"] = {{"relevance", {{"backend", "bm25"}, {"k1", 1.2}, {"b", 0.75},
                                     {"tokenizer", "words"}}},
                      {"utility", {{"backend", "oracle"}}},
                      {"supplement", {{"backend", "oracle"}}},
                      {"timeliness", {{"half_life_days", 365.0}, {"missing_date_score", 0.5}}},
                      {"embedding", {{"dimension", 64}, {"seed", 7}}}};
    cfg["llm"] = {{"endpoint", "mock:transcripts.jsonl"}, {"model", "judge"},
                  {"temperature", 0.0}, {"max_tokens_grade", 1},
                  {"max_tokens_generate", 1024}, {"concurrency", 4},
                  {"supports_logprobs", true}};
    cfg["generation"] = {{"with_context", true}};
    cfg["eval"] = {{"k", 3}, {"gain_mode", "binary"}, {"hit_mode", "capped_recall"}};
    cfg["cache_dir"] = "cache";
    cfg["output_dir"] = "out";
    cfg["concurrency"] = 4;
    write_file_atomic(dir / "config.json", cfg.dump(2) + "\n");
    out << "fixture_dir=" << dir.string() << " queries=" << corpus.queries.size()
        << " documents=" << corpus.documents.size() << "\n";
}

} // namespace polyrag

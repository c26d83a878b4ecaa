#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "polyrag/corpus.hpp"
#include "polyrag/embedding.hpp"
#include "polyrag/llmgate.hpp"

namespace polyrag {

enum class View { Relevance = 0, Utility = 1, Supplement = 2, Authority = 3, Timeliness = 4 };

inline constexpr std::array<View, 5> kAllViews = {View::Relevance, View::Utility,
                                                  View::Supplement, View::Authority,
                                                  View::Timeliness};

inline const char* view_name(View v) {
    switch (v) {
        case View::Relevance: return "relevance";
        case View::Utility: return "utility";
        case View::Supplement: return "supplement";
        case View::Authority: return "authority";
        case View::Timeliness: return "timeliness";
    }
    return "?";
}

inline View parse_view(std::string_view s) {
    for (View v : kAllViews)
        if (s == view_name(v)) return v;
    throw ConfigError("unknown view '" + std::string(s) + "'");
}

struct ViewScore {
    std::string query_id;
    std::string doc_id;
    View view = View::Relevance;
    double raw = 0.0;
    double normalized = 0.0;
    std::string scorer_id;

    bool operator==(const ViewScore&) const = default;
};

// ---- Shared normalization transforms -----------------------------------------

inline double cosine_to_unit(double c) { return (1.0 + c) / 2.0; }

inline double grade_to_unit(RelevanceGrade g) {
    return 1.0 - static_cast<int>(g) / 4.0;
}

// Rescales one view's raw values across a query's candidates to [0,1].
// When every value is equal there is no signal to spread, so everything
// maps to the neutral 0.5.
inline std::vector<double> minmax_normalize(const std::vector<double>& raw) {
    if (raw.empty()) return {};
    const auto [lo_it, hi_it] = std::minmax_element(raw.begin(), raw.end());
    const double lo = *lo_it, hi = *hi_it;
    std::vector<double> out(raw.size());
    if (hi == lo) {
        std::fill(out.begin(), out.end(), 0.5);
        return out;
    }
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - lo) / (hi - lo);
    return out;
}

// ---- BM25 ---------------------------------------------------------------------

struct Bm25Params {
    double k1 = 1.2;
    double b = 0.75;
    enum class Tokenizer { unicode_words, char_bigrams } tokenizer = Tokenizer::unicode_words;
};

inline std::vector<std::string> bm25_tokenize(const Bm25Params& params, std::string_view text) {
    return params.tokenizer == Bm25Params::Tokenizer::char_bigrams ? tokenize_bigrams(text)
                                                                   : tokenize_words(text);
}

inline std::string make_bm25_scorer_id(const Bm25Params& params) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "bm25:k1=%.6g,b=%.6g,tok=%s", params.k1, params.b,
                  params.tokenizer == Bm25Params::Tokenizer::char_bigrams ? "bigrams" : "words");
    return buf;
}

// Okapi BM25 over one query's candidate set. Documents can be added
// incrementally; scores always reflect the current collection statistics,
// so the incremental path matches a from-scratch rebuild exactly.
class Bm25Index {
public:
    explicit Bm25Index(Bm25Params params = {}) : params_(params) {
        if (params_.k1 <= 0.0) throw ConfigError("bm25 k1 must be > 0");
        if (params_.b < 0.0 || params_.b > 1.0) throw ConfigError("bm25 b must be in [0,1]");
    }

    std::size_t add_document(std::string_view text) {
        const auto tokens = bm25_tokenize(params_, text);
        std::map<std::string, int> tf;
        for (const auto& t : tokens) ++tf[t];
        for (const auto& [term, _] : tf) ++df_[term];
        lengths_.push_back(tokens.size());
        total_length_ += tokens.size();
        term_freqs_.push_back(std::move(tf));
        return term_freqs_.size() - 1;
    }

    std::size_t size() const { return term_freqs_.size(); }

    double score(std::string_view query_text, std::size_t doc_index) const {
        if (doc_index >= term_freqs_.size()) throw DataError("bm25 doc index out of range");
        const double n = static_cast<double>(term_freqs_.size());
        const double avgdl = total_length_ == 0 ? 0.0 : static_cast<double>(total_length_) / n;
        const auto& tf = term_freqs_[doc_index];
        const double dl = static_cast<double>(lengths_[doc_index]);
        double s = 0.0;
        for (const auto& term : bm25_tokenize(params_, query_text)) {
            const auto it = tf.find(term);
            if (it == tf.end()) continue;
            const auto dfit = df_.find(term);
            const double df = dfit == df_.end() ? 0.0 : static_cast<double>(dfit->second);
            const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
            const double f = static_cast<double>(it->second);
            const double denom =
                f + params_.k1 * (1.0 - params_.b + params_.b * (avgdl == 0.0 ? 0.0 : dl / avgdl));
            s += idf * (f * (params_.k1 + 1.0)) / denom;
        }
        return s;
    }

    const Bm25Params& params() const { return params_; }

private:
    Bm25Params params_;
    std::vector<std::map<std::string, int>> term_freqs_;
    std::vector<std::size_t> lengths_;
    std::size_t total_length_ = 0;
    std::map<std::string, int> df_;
};

inline std::string doc_content(const Document& d) {
    return d.title ? *d.title + "\n" + d.text : d.text;
}

inline std::vector<ViewScore> score_bm25(const Query& query,
                                         const std::vector<const Document*>& docs,
                                         const Bm25Params& params = {}) {
    if (docs.empty()) throw DataError("empty candidate set for query '" + query.id + "'");
    Bm25Index index(params);
    for (const Document* d : docs) index.add_document(doc_content(*d));
    std::vector<double> raw(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i) raw[i] = index.score(query.text, i);
    const auto normalized = minmax_normalize(raw);
    const std::string scorer_id = make_bm25_scorer_id(params);
    std::vector<ViewScore> out(docs.size());
    for (std::size_t i = 0; i < docs.size(); ++i)
        out[i] = {query.id, docs[i]->id, View::Relevance, raw[i], normalized[i], scorer_id};
    return out;
}

// ---- Embedding relevance and utility --------------------------------------------

inline ViewScore score_relevance_embedding(const Query& query, const Document& doc,
                                           const EmbeddingProvider& provider) {
    const double c = cosine(provider.embed(query.text), provider.embed(doc_content(doc)));
    return {query.id, doc.id, View::Relevance, c, cosine_to_unit(c),
            "embed-cos:" + provider.provider_id()};
}

// Same metric as embedding relevance but through the utility-specialized
// provider, so the two views can disagree per document.
inline ViewScore score_utility(const Query& query, const Document& doc,
                               const EmbeddingProvider& provider) {
    const double c = cosine(provider.embed(query.text), provider.embed(doc_content(doc)));
    return {query.id, doc.id, View::Utility, c, cosine_to_unit(c),
            "utility-cos:" + provider.provider_id()};
}

inline ViewScore score_utility_oracle(const Query& query, const Document& doc) {
    if (!doc.annotations.utility)
        throw DataError("missing_annotation: document '" + doc.id + "' lacks utility");
    const double u = *doc.annotations.utility;
    return {query.id, doc.id, View::Utility, u, u, "oracle:utility"};
}

// ---- LLM-graded relevance and supplement -----------------------------------------

namespace detail {

inline bool is_token_char(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
}

// Finds the first standalone single-character token from `allowed` after the
// last "judge" marker, or takes the whole reply when it is a bare token.
// Matching ignores case; the canonical character from `allowed` is returned.
inline std::optional<char> parse_judge_token(std::string_view reply, std::string_view allowed) {
    auto canon = [&](char c) -> std::optional<char> {
        const char up = (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c;
        const std::size_t pos = allowed.find(up);
        if (pos == std::string_view::npos) return std::nullopt;
        return allowed[pos];
    };
    const std::string lower = to_lower_ascii(reply);
    const std::size_t anchor = lower.rfind("judge");
    if (anchor != std::string::npos) {
        for (std::size_t i = anchor + 5; i < reply.size(); ++i) {
            const auto c = canon(reply[i]);
            if (!c) continue;
            const bool left_ok = i == 0 || !is_token_char(reply[i - 1]);
            const bool right_ok = i + 1 >= reply.size() || !is_token_char(reply[i + 1]);
            if (left_ok && right_ok) return c;
        }
        return std::nullopt;
    }
    const std::string bare = trim(reply);
    if (bare.size() == 1) return canon(bare[0]);
    return std::nullopt;
}

inline ContextBlock doc_context(const Document& doc) { return {doc.title, doc.text}; }

} // namespace detail

inline ViewScore grade_relevance_llm(const Query& query, const Document& doc,
                                     const PromptRegistry& registry, ChatClient& client,
                                     int max_tokens = 1) {
    PromptVars vars;
    vars.question = query.text;
    vars.contexts = std::vector<ContextBlock>{detail::doc_context(doc)};
    const RenderedPrompt prompt = render_prompt(registry, "relevance_grade", vars);
    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = client.chat(prompt, false, max_tokens).text;
        if (auto letter = detail::parse_judge_token(reply, "ABCDE")) {
            const auto grade = static_cast<RelevanceGrade>(*letter - 'A');
            return {query.id, doc.id, View::Relevance, static_cast<double>(static_cast<int>(grade)),
                    grade_to_unit(grade), "llm-grade:" + client.model_id()};
        }
    }
    throw BackendError("unparseable grade reply: " + reply);
}

inline ViewScore score_supplement_llm(const Query& query, const Document& doc,
                                      const PromptRegistry& registry, ChatClient& client,
                                      int max_tokens = 1) {
    PromptVars vars;
    vars.question = query.text;
    vars.contexts = std::vector<ContextBlock>{detail::doc_context(doc)};
    const RenderedPrompt prompt = render_prompt(registry, "supplement_binary", vars);
    std::string reply;
    for (int attempt = 0; attempt < 2; ++attempt) {
        reply = client.chat(prompt, false, max_tokens).text;
        if (auto digit = detail::parse_judge_token(reply, "01")) {
            const double v = *digit - '0';
            return {query.id, doc.id, View::Supplement, v, v, "llm-supp:" + client.model_id()};
        }
    }
    throw BackendError("unparseable supplement reply: " + reply);
}

inline ViewScore score_supplement_oracle(const Query& query, const Document& doc) {
    if (!doc.annotations.supplement)
        throw DataError("missing_annotation: document '" + doc.id + "' lacks supplement");
    const double v = *doc.annotations.supplement;
    return {query.id, doc.id, View::Supplement, v, v, "oracle:supplement"};
}

// ---- Utility labeling -------------------------------------------------------------

struct UtilityLabel {
    std::string query_id;
    std::string doc_id;
    double with_ctx_meanlp = 0.0;
    double without_ctx_meanlp = 0.0;
    double delta = 0.0;
    double utility = 0.0;
};

// Contrasts the answer's mean token log-probability with and without the
// document as context. A positive delta means the document helped.
inline UtilityLabel label_utility_llm(const Query& query, const Document& doc,
                                      const std::string& answer, const PromptRegistry& registry,
                                      ChatClient& client, int max_tokens = 1) {
    if (trim(answer).empty()) throw DataError("empty answer for query '" + query.id + "'");
    if (!client.supports_logprobs()) throw ConfigError("client lacks log-prob capability");

    auto meanlp_for = [&](const char* template_id, bool with_ctx) {
        PromptVars vars;
        vars.question = query.text;
        vars.answer = answer;
        if (with_ctx) vars.contexts = std::vector<ContextBlock>{detail::doc_context(doc)};
        const ChatReply reply =
            client.chat(render_prompt(registry, template_id, vars), true, max_tokens);
        if (!reply.token_logprobs || reply.token_logprobs->empty())
            throw BackendError("reply carries no token logprobs");
        double sum = 0.0;
        for (double lp : *reply.token_logprobs) sum += lp;
        return sum / static_cast<double>(reply.token_logprobs->size());
    };

    UtilityLabel label;
    label.query_id = query.id;
    label.doc_id = doc.id;
    label.with_ctx_meanlp = meanlp_for("utility_with_ctx", true);
    label.without_ctx_meanlp = meanlp_for("utility_without_ctx", false);
    label.delta = label.with_ctx_meanlp - label.without_ctx_meanlp;
    label.utility = std::exp(label.with_ctx_meanlp);
    return label;
}

// ---- Authority and timeliness --------------------------------------------------------

inline ViewScore score_authority(const Document& doc, const AuthorityTable& table) {
    int level = doc.annotations.authority_level ? *doc.annotations.authority_level
                                                : table.level_of(doc.source);
    level = std::clamp(level, 0, table.max_level);
    return {"", doc.id, View::Authority, static_cast<double>(level),
            static_cast<double>(level) / static_cast<double>(table.max_level),
            "authority:table"};
}

inline std::string make_timeliness_scorer_id(double half_life_days, double missing_date_score) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "timeliness:hl=%.6g,miss=%.6g", half_life_days,
                  missing_date_score);
    return buf;
}

// Exponential half-life decay over document age. Dates come from the
// publish_date field or, failing that, from a scan of the document text.
inline ViewScore score_timeliness(const Document& doc, const Date& reference_date,
                                  double half_life_days = 365.0,
                                  double missing_date_score = 0.5) {
    if (half_life_days <= 0.0) throw ConfigError("half_life_days must be > 0");
    const std::string scorer_id = make_timeliness_scorer_id(half_life_days, missing_date_score);
    std::optional<Date> date = doc.publish_date;
    if (!date) date = extract_publish_date(doc.text);
    if (!date || !date->ok() || !reference_date.ok())
        return {"", doc.id, View::Timeliness, -1.0, missing_date_score, scorer_id};
    const double age = static_cast<double>(days_between(*date, reference_date));
    const double decayed = std::min(1.0, std::exp2(-age / half_life_days));
    return {"", doc.id, View::Timeliness, age, decayed, scorer_id};
}

} // namespace polyrag

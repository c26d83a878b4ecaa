#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyrag/corpus.hpp"
#include "polyrag/jsonl.hpp"

namespace polyrag {

enum class GainMode { binary, graded };
enum class HitMode { capped_recall, any_hit };

inline const char* gain_mode_name(GainMode m) {
    return m == GainMode::binary ? "binary" : "graded";
}
inline const char* hit_mode_name(HitMode m) {
    return m == HitMode::capped_recall ? "capped_recall" : "any_hit";
}

inline GainMode parse_gain_mode(const std::string& s) {
    if (s == "binary") return GainMode::binary;
    if (s == "graded") return GainMode::graded;
    throw ConfigError("unknown gain mode '" + s + "' (binary|graded)");
}
inline HitMode parse_hit_mode(const std::string& s) {
    if (s == "capped_recall") return HitMode::capped_recall;
    if (s == "any_hit") return HitMode::any_hit;
    throw ConfigError("unknown hit mode '" + s + "' (capped_recall|any_hit)");
}

// Gain of one document under the chosen mode. Binary counts grades A and B
// as relevant; graded maps A..E onto 4..0. Ungraded documents gain 0.
inline double relevance_gain(const Document& doc, GainMode mode) {
    if (!doc.annotations.relevance_grade) return 0.0;
    const int ordinal = static_cast<int>(*doc.annotations.relevance_grade);
    if (mode == GainMode::binary) return ordinal <= 1 ? 1.0 : 0.0;
    return static_cast<double>(4 - ordinal);
}

struct MetricValue {
    double value = 0.0;
    bool excluded = false;
};

// Fraction of the query's relevant documents found in the top k, capped so
// a perfect head scores 1 even when k < #relevant. any_hit degrades this to
// a 0/1 indicator. Queries with no relevant documents are excluded.
inline MetricValue hit_at_k(const std::vector<std::string>& ranked,
                            const std::set<std::string>& relevant, int k,
                            HitMode mode = HitMode::capped_recall) {
    if (k < 1) throw ConfigError("k must be >= 1");
    if (relevant.empty()) return {0.0, true};
    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    std::size_t found = 0;
    for (std::size_t i = 0; i < depth; ++i)
        if (relevant.count(ranked[i])) ++found;
    if (mode == HitMode::any_hit) return {found > 0 ? 1.0 : 0.0, false};
    const std::size_t denom = std::min<std::size_t>(static_cast<std::size_t>(k), relevant.size());
    return {static_cast<double>(found) / static_cast<double>(denom), false};
}

// DCG over the top k against the ideal ordering of the full candidate set,
// so the value is monotone in k and reaches 1 exactly when every positive
// gain outranks every zero gain. Queries whose gains are all zero are
// excluded.
inline MetricValue ndcg_at_k(const std::vector<std::string>& ranked,
                             const std::map<std::string, double>& gains, int k) {
    if (k < 1) throw ConfigError("k must be >= 1");
    double ideal = 0.0;
    {
        std::vector<double> g;
        for (const auto& [_, v] : gains)
            if (v > 0.0) g.push_back(v);
        std::sort(g.rbegin(), g.rend());
        for (std::size_t i = 0; i < g.size(); ++i)
            ideal += g[i] / std::log2(static_cast<double>(i) + 2.0);
    }
    if (ideal == 0.0) return {0.0, true};
    double dcg = 0.0;
    const std::size_t depth = std::min<std::size_t>(static_cast<std::size_t>(k), ranked.size());
    for (std::size_t i = 0; i < depth; ++i) {
        auto it = gains.find(ranked[i]);
        if (it != gains.end() && it->second > 0.0)
            dcg += it->second / std::log2(static_cast<double>(i) + 2.0);
    }
    return {dcg / ideal, false};
}

struct MetricAggregate {
    double sum = 0.0;
    std::size_t n = 0;
    std::size_t excluded = 0;

    void add(const MetricValue& v) {
        if (v.excluded) {
            ++excluded;
            return;
        }
        sum += v.value;
        ++n;
    }
    // Mean expressed in percent.
    double mean100() const { return n == 0 ? 0.0 : 100.0 * sum / static_cast<double>(n); }
};

struct RetrievalBucket {
    std::size_t n_queries = 0;
    MetricAggregate hit;
    MetricAggregate ndcg;
};

struct RetrievalReport {
    int k = 0;
    GainMode gain_mode = GainMode::binary;
    HitMode hit_mode = HitMode::capped_recall;
    RetrievalBucket overall;
    std::map<Domain, RetrievalBucket> by_domain;
};

// rankings: query id -> ranked doc ids, best first. Queries absent from the
// map count as an error; candidates come from the corpus.
inline RetrievalReport evaluate_retrieval(const Corpus& corpus,
                                          const std::map<std::string, std::vector<std::string>>& rankings,
                                          int k, GainMode gain_mode = GainMode::binary,
                                          HitMode hit_mode = HitMode::capped_recall) {
    if (k < 1) throw ConfigError("k must be >= 1");
    RetrievalReport report;
    report.k = k;
    report.gain_mode = gain_mode;
    report.hit_mode = hit_mode;
    for (const auto& query : corpus.queries) {
        auto it = rankings.find(query.id);
        if (it == rankings.end())
            throw DataError("no ranking for query '" + query.id + "'");
        std::map<std::string, double> gains;
        std::set<std::string> relevant;
        for (const Document* doc : corpus.docs_for(query.id)) {
            gains[doc->id] = relevance_gain(*doc, gain_mode);
            if (relevance_gain(*doc, GainMode::binary) > 0.0) relevant.insert(doc->id);
        }
        const MetricValue h = hit_at_k(it->second, relevant, k, hit_mode);
        const MetricValue n = ndcg_at_k(it->second, gains, k);
        for (RetrievalBucket* bucket : {&report.overall, &report.by_domain[query.domain]}) {
            bucket->n_queries += 1;
            bucket->hit.add(h);
            bucket->ndcg.add(n);
        }
    }
    return report;
}

inline Json retrieval_bucket_to_json(const RetrievalBucket& b) {
    Json j;
    j["n_queries"] = b.n_queries;
    j["hit"] = b.hit.mean100();
    j["ndcg"] = b.ndcg.mean100();
    j["n_scored_hit"] = b.hit.n;
    j["n_scored_ndcg"] = b.ndcg.n;
    j["n_excluded_hit"] = b.hit.excluded;
    j["n_excluded_ndcg"] = b.ndcg.excluded;
    return j;
}

inline Json retrieval_report_to_json(const RetrievalReport& r) {
    Json j;
    j["k"] = r.k;
    j["gain_mode"] = gain_mode_name(r.gain_mode);
    j["hit_mode"] = hit_mode_name(r.hit_mode);
    j["overall"] = retrieval_bucket_to_json(r.overall);
    Json domains = Json::object();
    for (const auto& [domain, bucket] : r.by_domain)
        domains[domain_name(domain)] = retrieval_bucket_to_json(bucket);
    j["by_domain"] = domains;
    return j;
}

// Fixed-width table for terminal output.
inline std::string render_retrieval_table(const RetrievalReport& r) {
    std::ostringstream out;
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%-10s %8s %10s %10s\n", "segment", "queries",
                  ("HIT@" + std::to_string(r.k)).c_str(), ("NDCG@" + std::to_string(r.k)).c_str());
    out << buf;
    auto row = [&](const std::string& name, const RetrievalBucket& b) {
        std::snprintf(buf, sizeof(buf), "%-10s %8zu %10.2f %10.2f\n", name.c_str(), b.n_queries,
                      b.hit.mean100(), b.ndcg.mean100());
        out << buf;
    };
    for (const auto& [domain, bucket] : r.by_domain) row(domain_name(domain), bucket);
    row("overall", r.overall);
    return out.str();
}

} // namespace polyrag

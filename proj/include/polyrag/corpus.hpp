#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "polyrag/date.hpp"
#include "polyrag/errors.hpp"
#include "polyrag/jsonl.hpp"
#include "polyrag/util.hpp"

namespace polyrag {

enum class Domain { CARE, INQUIRY, POLICY };

inline const char* domain_name(Domain d) {
    switch (d) {
        case Domain::CARE: return "CARE";
        case Domain::INQUIRY: return "INQUIRY";
        case Domain::POLICY: return "POLICY";
    }
    return "?";
}

inline Domain parse_domain(std::string_view s, long line = -1) {
    if (s == "CARE") return Domain::CARE;
    if (s == "INQUIRY") return Domain::INQUIRY;
    if (s == "POLICY") return Domain::POLICY;
    throw DataError("unknown domain value '" + std::string(s) + "'", line);
}

enum class RelevanceGrade { A = 0, B = 1, C = 2, D = 3, E = 4 };

inline char grade_letter(RelevanceGrade g) {
    return static_cast<char>('A' + static_cast<int>(g));
}

inline RelevanceGrade parse_grade(std::string_view s, long line = -1) {
    if (s.size() == 1 && s[0] >= 'A' && s[0] <= 'E')
        return static_cast<RelevanceGrade>(s[0] - 'A');
    throw DataError("relevance_grade out of range (want A-E): '" + std::string(s) + "'", line);
}

struct AnnotationSet {
    std::optional<RelevanceGrade> relevance_grade;
    std::optional<int> supplement;
    std::optional<double> utility;
    std::optional<int> authority_level;

    bool empty() const {
        return !relevance_grade && !supplement && !utility && !authority_level;
    }
    bool operator==(const AnnotationSet&) const = default;
};

struct Query {
    std::string id;
    Domain domain = Domain::CARE;
    std::string intent;
    std::string text;
    std::optional<std::string> ground_truth;

    bool operator==(const Query&) const = default;
};

struct Document {
    std::string id;
    std::string query_id;
    std::optional<std::string> title;
    std::string text;
    std::string source;
    std::optional<Date> publish_date;
    AnnotationSet annotations;

    bool operator==(const Document&) const = default;
};

struct AuthorityTable {
    std::map<std::string, int> entries;
    int max_level = 1;
    int default_level = 0;

    // Total lookup: unknown sources fall back to default_level.
    int level_of(const std::string& source) const {
        auto it = entries.find(source);
        return it == entries.end() ? default_level : it->second;
    }
    bool operator==(const AuthorityTable&) const = default;
};

struct Corpus {
    std::vector<Query> queries;
    std::vector<Document> documents;
    Date reference_date;

    const Query* find_query(const std::string& id) const {
        for (const auto& q : queries)
            if (q.id == id) return &q;
        return nullptr;
    }
    std::vector<const Document*> docs_for(const std::string& query_id) const {
        std::vector<const Document*> out;
        for (const auto& d : documents)
            if (d.query_id == query_id) out.push_back(&d);
        return out;
    }
    bool operator==(const Corpus&) const = default;
};

struct Finding {
    std::string record_id;
    std::string rule;
    std::string detail;

    bool operator==(const Finding&) const = default;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool ok() const { return findings.empty(); }
};

// ---- JSON (de)serialization -------------------------------------------------

namespace detail {

inline const Json& need_field(const Json& j, const char* key, long line) {
    auto it = j.find(key);
    if (it == j.end()) throw DataError(std::string("missing field '") + key + "'", line);
    return *it;
}

inline std::string need_string(const Json& j, const char* key, long line) {
    const Json& v = need_field(j, key, line);
    if (!v.is_string()) throw DataError(std::string("field '") + key + "' must be a string", line);
    return v.get<std::string>();
}

inline std::optional<std::string> opt_string(const Json& j, const char* key, long line) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw DataError(std::string("field '") + key + "' must be a string", line);
    return it->get<std::string>();
}

inline void reject_unknown(const Json& j, std::initializer_list<const char*> known, long line) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) { ok = true; break; }
        if (!ok) throw DataError("unknown field '" + it.key() + "'", line);
    }
}

} // namespace detail

inline Json query_to_json(const Query& q) {
    Json j;
    j["id"] = q.id;
    j["domain"] = domain_name(q.domain);
    j["intent"] = q.intent;
    j["text"] = q.text;
    if (q.ground_truth) j["ground_truth"] = *q.ground_truth;
    return j;
}

inline Query query_from_json(const Json& j, long line = -1) {
    detail::reject_unknown(j, {"id", "domain", "intent", "text", "ground_truth"}, line);
    Query q;
    q.id = detail::need_string(j, "id", line);
    q.domain = parse_domain(detail::need_string(j, "domain", line), line);
    q.intent = detail::need_string(j, "intent", line);
    q.text = detail::need_string(j, "text", line);
    q.ground_truth = detail::opt_string(j, "ground_truth", line);
    return q;
}

inline Json annotations_to_json(const AnnotationSet& a) {
    Json j = Json::object();
    if (a.relevance_grade) j["relevance_grade"] = std::string(1, grade_letter(*a.relevance_grade));
    if (a.supplement) j["supplement"] = *a.supplement;
    if (a.utility) j["utility"] = *a.utility;
    if (a.authority_level) j["authority_level"] = *a.authority_level;
    return j;
}

inline AnnotationSet annotations_from_json(const Json& j, long line) {
    if (!j.is_object()) throw DataError("field 'annotations' must be an object", line);
    detail::reject_unknown(j, {"relevance_grade", "supplement", "utility", "authority_level"}, line);
    AnnotationSet a;
    if (auto it = j.find("relevance_grade"); it != j.end() && !it->is_null()) {
        if (!it->is_string()) throw DataError("field 'relevance_grade' must be a string", line);
        a.relevance_grade = parse_grade(it->get<std::string>(), line);
    }
    if (auto it = j.find("supplement"); it != j.end() && !it->is_null()) {
        if (it->is_boolean()) {
            a.supplement = it->get<bool>() ? 1 : 0;
        } else if (it->is_number_integer()) {
            a.supplement = it->get<int>();
        } else {
            throw DataError("field 'supplement' must be 0/1", line);
        }
        if (*a.supplement != 0 && *a.supplement != 1)
            throw DataError("field 'supplement' must be 0/1", line);
    }
    if (auto it = j.find("utility"); it != j.end() && !it->is_null()) {
        if (!it->is_number()) throw DataError("field 'utility' must be a number", line);
        a.utility = it->get<double>();
        if (!(*a.utility >= 0.0 && *a.utility <= 1.0))
            throw DataError("field 'utility' out of range [0,1]", line);
    }
    if (auto it = j.find("authority_level"); it != j.end() && !it->is_null()) {
        if (!it->is_number_integer()) throw DataError("field 'authority_level' must be an integer", line);
        a.authority_level = it->get<int>();
        if (*a.authority_level < 0) throw DataError("field 'authority_level' must be >= 0", line);
    }
    return a;
}

inline Json document_to_json(const Document& d) {
    Json j;
    j["id"] = d.id;
    j["query_id"] = d.query_id;
    if (d.title) j["title"] = *d.title;
    j["text"] = d.text;
    j["source"] = d.source;
    if (d.publish_date) j["publish_date"] = d.publish_date->to_string();
    if (!d.annotations.empty()) j["annotations"] = annotations_to_json(d.annotations);
    return j;
}

inline Document document_from_json(const Json& j, long line = -1) {
    detail::reject_unknown(
        j, {"id", "query_id", "title", "text", "source", "publish_date", "annotations"}, line);
    Document d;
    d.id = detail::need_string(j, "id", line);
    d.query_id = detail::need_string(j, "query_id", line);
    d.title = detail::opt_string(j, "title", line);
    d.text = detail::need_string(j, "text", line);
    d.source = detail::need_string(j, "source", line);
    if (auto ds = detail::opt_string(j, "publish_date", line)) {
        auto pd = parse_iso_date(*ds);
        if (!pd) throw DataError("invalid publish_date '" + *ds + "'", line);
        d.publish_date = *pd;
    }
    if (auto it = j.find("annotations"); it != j.end() && !it->is_null())
        d.annotations = annotations_from_json(*it, line);
    return d;
}

// ---- Validation -------------------------------------------------------------

inline ValidationReport validate_corpus(const Corpus& corpus) {
    ValidationReport report;
    auto add = [&](const std::string& id, const char* rule, std::string detail = "") {
        report.findings.push_back({id, rule, std::move(detail)});
    };

    std::set<std::string> qids;
    for (const auto& q : corpus.queries) {
        if (!qids.insert(q.id).second) add(q.id, "duplicate_id");
        if (trim(q.text).empty()) add(q.id, "empty_text");
    }
    std::set<std::string> dids;
    for (const auto& d : corpus.documents) {
        if (!dids.insert(d.id).second) add(d.id, "duplicate_id");
        if (dids.count(d.id) && qids.count(d.id)) add(d.id, "duplicate_id", "shared with a query id");
        if (!qids.count(d.query_id)) add(d.id, "dangling_query_id", d.query_id);
        if (trim(d.text).empty()) add(d.id, "empty_text");
        if (d.publish_date) {
            if (!d.publish_date->ok())
                add(d.id, "invalid_date", d.publish_date->to_string());
            else if (corpus.reference_date.ok() && *d.publish_date > corpus.reference_date)
                add(d.id, "future_date", d.publish_date->to_string());
        }
        if (d.annotations.utility &&
            !(*d.annotations.utility >= 0.0 && *d.annotations.utility <= 1.0))
            add(d.id, "utility_out_of_range");
        if (d.annotations.supplement && *d.annotations.supplement != 0 &&
            *d.annotations.supplement != 1)
            add(d.id, "supplement_not_binary");
        if (d.annotations.authority_level && *d.annotations.authority_level < 0)
            add(d.id, "negative_authority_level");
    }
    return report;
}

// ---- Loading ----------------------------------------------------------------

// Loads and fully validates a corpus. All rejections are line-anchored:
// structural problems fail on their own line, and cross-record problems
// (duplicate ids, dangling references, future dates) fail on the line of
// the offending record.
inline Corpus load_corpus(const std::filesystem::path& queries_path,
                          const std::filesystem::path& docs_path,
                          const Date& reference_date) {
    Corpus corpus;
    corpus.reference_date = reference_date;

    std::set<std::string> qids;
    for (const auto& [line, j] : read_jsonl(queries_path)) {
        Query q = query_from_json(j, line);
        if (!qids.insert(q.id).second)
            throw DataError("duplicate_id: query '" + q.id + "'", line);
        if (trim(q.text).empty())
            throw DataError("empty_text: query '" + q.id + "'", line);
        corpus.queries.push_back(std::move(q));
    }

    std::set<std::string> dids;
    for (const auto& [line, j] : read_jsonl(docs_path)) {
        Document d = document_from_json(j, line);
        if (!dids.insert(d.id).second)
            throw DataError("duplicate_id: document '" + d.id + "'", line);
        if (!qids.count(d.query_id))
            throw DataError("dangling_query_id: document '" + d.id +
                                "' references missing query '" + d.query_id + "'",
                            line);
        if (trim(d.text).empty())
            throw DataError("empty_text: document '" + d.id + "'", line);
        if (d.publish_date && reference_date.ok() && *d.publish_date > reference_date)
            throw DataError("future_date: document '" + d.id + "' dated " +
                                d.publish_date->to_string() + " after reference date " +
                                reference_date.to_string(),
                            line);
        corpus.documents.push_back(std::move(d));
    }
    return corpus;
}

inline void save_corpus(const Corpus& corpus, const std::filesystem::path& queries_path,
                        const std::filesystem::path& docs_path) {
    std::vector<Json> qs, ds;
    qs.reserve(corpus.queries.size());
    ds.reserve(corpus.documents.size());
    for (const auto& q : corpus.queries) qs.push_back(query_to_json(q));
    for (const auto& d : corpus.documents) ds.push_back(document_to_json(d));
    write_jsonl(queries_path, qs);
    write_jsonl(docs_path, ds);
}

// ---- Authority table ----------------------------------------------------------

// File format: one {source, level} record per line; an optional first line
// {max_level, default_level} overrides the derived scale.
inline AuthorityTable load_authority_table(const std::filesystem::path& path) {
    AuthorityTable table;
    bool have_header = false;
    bool first = true;
    long header_line = -1;
    for (const auto& [line, j] : read_jsonl(path)) {
        if (first && !j.contains("source")) {
            detail::reject_unknown(j, {"max_level", "default_level"}, line);
            if (auto it = j.find("max_level"); it != j.end()) {
                if (!it->is_number_integer())
                    throw DataError("field 'max_level' must be an integer", line);
                table.max_level = it->get<int>();
            }
            if (auto it = j.find("default_level"); it != j.end()) {
                if (!it->is_number_integer())
                    throw DataError("field 'default_level' must be an integer", line);
                table.default_level = it->get<int>();
            }
            have_header = true;
            header_line = line;
            first = false;
            continue;
        }
        first = false;
        detail::reject_unknown(j, {"source", "level"}, line);
        std::string source = detail::need_string(j, "source", line);
        const Json& lv = detail::need_field(j, "level", line);
        if (!lv.is_number_integer()) throw DataError("field 'level' must be an integer", line);
        int level = lv.get<int>();
        if (level < 0) throw DataError("negative_level: source '" + source + "'", line);
        if (!table.entries.emplace(source, level).second)
            throw DataError("duplicate_source: '" + source + "'", line);
        if (have_header && level > table.max_level)
            throw DataError("level_exceeds_max_level: source '" + source + "'", line);
    }
    if (table.entries.empty()) throw DataError("empty_authority_table");
    if (!have_header) {
        int top = 0;
        for (const auto& [_, lv] : table.entries) top = std::max(top, lv);
        table.max_level = std::max(1, top);
    } else {
        if (table.max_level < 1) throw DataError("max_level must be >= 1", header_line);
        if (table.default_level < 0 || table.default_level > table.max_level)
            throw DataError("default_level out of range [0, max_level]", header_line);
    }
    return table;
}

inline void save_authority_table(const AuthorityTable& table, const std::filesystem::path& path) {
    std::vector<Json> rows;
    Json header;
    header["max_level"] = table.max_level;
    header["default_level"] = table.default_level;
    rows.push_back(header);
    for (const auto& [source, level] : table.entries) {
        Json j;
        j["source"] = source;
        j["level"] = level;
        rows.push_back(j);
    }
    write_jsonl(path, rows);
}

// ---- Publish date extraction --------------------------------------------------

namespace detail {

inline bool is_digit(char c) { return c >= '0' && c <= '9'; }

inline int read_digits(std::string_view s, std::size_t pos, std::size_t count) {
    int v = 0;
    for (std::size_t i = 0; i < count; ++i) {
        if (pos + i >= s.size() || !is_digit(s[pos + i])) return -1;
        v = v * 10 + (s[pos + i] - '0');
    }
    return v;
}

// Reads 1..2 digits; returns (value, digits consumed) or (-1, 0).
inline std::pair<int, std::size_t> read_flex_digits(std::string_view s, std::size_t pos) {
    if (pos >= s.size() || !is_digit(s[pos])) return {-1, 0};
    int v = s[pos] - '0';
    if (pos + 1 < s.size() && is_digit(s[pos + 1])) return {v * 10 + (s[pos + 1] - '0'), 2};
    return {v, 1};
}

inline bool digit_before(std::string_view s, std::size_t pos) {
    return pos > 0 && is_digit(s[pos - 1]);
}

inline bool digit_at(std::string_view s, std::size_t pos) {
    return pos < s.size() && is_digit(s[pos]);
}

struct DateMatch {
    Date date;
    bool matched = false;
};

// YYYY-MM-DD, strictly two-digit month and day.
inline DateMatch match_iso(std::string_view s, std::size_t i) {
    if (digit_before(s, i)) return {};
    int y = read_digits(s, i, 4);
    if (y < 0 || i + 4 >= s.size() || s[i + 4] != '-') return {};
    int m = read_digits(s, i + 5, 2);
    if (m < 0 || i + 7 >= s.size() || s[i + 7] != '-') return {};
    int d = read_digits(s, i + 8, 2);
    if (d < 0 || digit_at(s, i + 10)) return {};
    return {Date{y, m, d}, true};
}

// YYYY/MM/DD with one- or two-digit month and day.
inline DateMatch match_slash(std::string_view s, std::size_t i) {
    if (digit_before(s, i)) return {};
    int y = read_digits(s, i, 4);
    if (y < 0 || i + 4 >= s.size() || s[i + 4] != '/') return {};
    auto [m, ml] = read_flex_digits(s, i + 5);
    if (m < 0) return {};
    std::size_t p = i + 5 + ml;
    if (p >= s.size() || s[p] != '/') return {};
    auto [d, dl] = read_flex_digits(s, p + 1);
    if (d < 0 || digit_at(s, p + 1 + dl)) return {};
    return {Date{y, m, d}, true};
}

// YYYY年M月D日 (UTF-8 byte sequences for the CJK markers).
inline DateMatch match_cjk(std::string_view s, std::size_t i) {
    static constexpr std::string_view kYear = "\xE5\xB9\xB4";
    static constexpr std::string_view kMonth = "\xE6\x9C\x88";
    static constexpr std::string_view kDay = "\xE6\x97\xA5";
    auto lit = [&](std::size_t pos, std::string_view w) {
        return s.substr(pos, w.size()) == w;
    };
    if (digit_before(s, i)) return {};
    int y = read_digits(s, i, 4);
    if (y < 0 || !lit(i + 4, kYear)) return {};
    std::size_t p = i + 4 + kYear.size();
    auto [m, ml] = read_flex_digits(s, p);
    if (m < 0 || !lit(p + ml, kMonth)) return {};
    p += ml + kMonth.size();
    auto [d, dl] = read_flex_digits(s, p);
    if (d < 0 || !lit(p + dl, kDay)) return {};
    return {Date{y, m, d}, true};
}

// English long form "Month D, YYYY".
inline DateMatch match_english(std::string_view s, std::size_t i) {
    static const char* kMonths[12] = {"january", "february", "march",     "april",
                                      "may",     "june",     "july",      "august",
                                      "september", "october", "november", "december"};
    auto is_alpha = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    };
    if (i > 0 && is_alpha(s[i - 1])) return {};
    int month = -1;
    std::size_t name_len = 0;
    for (int m = 0; m < 12; ++m) {
        std::string_view name = kMonths[m];
        if (i + name.size() > s.size()) continue;
        bool eq = true;
        for (std::size_t k = 0; k < name.size(); ++k) {
            char c = s[i + k];
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
            if (c != name[k]) { eq = false; break; }
        }
        if (eq && !(i + name.size() < s.size() && is_alpha(s[i + name.size()]))) {
            month = m + 1;
            name_len = name.size();
            break;
        }
    }
    if (month < 0) return {};
    std::size_t p = i + name_len;
    std::size_t spaces = 0;
    while (p < s.size() && s[p] == ' ') { ++p; ++spaces; }
    if (spaces == 0) return {};
    auto [d, dl] = read_flex_digits(s, p);
    if (d < 0) return {};
    p += dl;
    if (p >= s.size() || s[p] != ',') return {};
    ++p;
    while (p < s.size() && s[p] == ' ') ++p;
    int y = read_digits(s, p, 4);
    if (y < 0 || digit_at(s, p + 4)) return {};
    return {Date{y, month, d}, true};
}

} // namespace detail

// Scans left to right; the first syntactic pattern match decides. A match
// that is not a real calendar date yields absent rather than continuing,
// since a malformed header date should not let a later body date win.
inline std::optional<Date> extract_publish_date(std::string_view text) {
    for (std::size_t i = 0; i < text.size(); ++i) {
        for (auto* fn : {detail::match_iso, detail::match_slash, detail::match_cjk,
                         detail::match_english}) {
            auto m = fn(text, i);
            if (m.matched) {
                if (m.date.ok()) return m.date;
                return std::nullopt;
            }
        }
    }
    return std::nullopt;
}

// ---- Synthetic fixtures --------------------------------------------------------

struct ConflictSpec {
    bool authority = true;
    bool date = true;
    int topic_spread = 2;
    Date reference_date{2024, 6, 1};
};

inline AuthorityTable synth_authority_table() {
    AuthorityTable t;
    t.entries = {{"gov", 3}, {"hospital", 2}, {"news", 1}, {"ugc", 0}};
    t.max_level = 3;
    t.default_level = 0;
    return t;
}

// Builds a deterministic corpus around one engineered conflict per query:
// documents d000/d001 share identical text and annotations but differ in
// source authority and publish date, while filler documents stay strictly
// weaker on every view. Useful for exercising rerank order expectations.
inline Corpus synth_fixture(std::uint64_t seed, int n_queries, int docs_per_query,
                            const ConflictSpec& spec = {}) {
    if (n_queries < 1 || docs_per_query < 1)
        throw ConfigError("synth_fixture requires n_queries >= 1 and docs_per_query >= 1");
    if (spec.topic_spread < 1) throw ConfigError("topic_spread must be >= 1");

    static const char* kPhrases[] = {
        "insulin dosing schedule",      "blood pressure monitoring",
        "vaccine booster eligibility",  "cholesterol screening interval",
        "migraine trigger management",  "asthma inhaler technique",
        "maternity benefit enrollment", "telehealth reimbursement coverage",
    };
    constexpr int kPhraseCount = 8;
    static const char* kIntents[] = {"treatment", "eligibility", "procedure"};
    static const char* kFillerSources[] = {"hospital", "news", "ugc"};

    std::mt19937_64 rng(seed);
    Corpus corpus;
    corpus.reference_date = spec.reference_date;

    for (int qi = 0; qi < n_queries; ++qi) {
        char qid[16];
        std::snprintf(qid, sizeof qid, "q%04d", qi + 1);
        const Domain domain = static_cast<Domain>(qi % 3);
        const int theme = qi % kPhraseCount;
        const std::string phrase = kPhrases[theme];

        Query q;
        q.id = qid;
        q.domain = domain;
        q.intent = kIntents[qi % 3];
        switch (domain) {
            case Domain::CARE:
                q.text = "How should patients handle " + phrase + "?";
                break;
            case Domain::INQUIRY:
                q.text = "What does " + phrase + " involve?";
                break;
            case Domain::POLICY:
                q.text = "Which rules govern " + phrase + "?";
                break;
        }
        q.ground_truth =
            "Follow the published guidance on " + phrase + " and consult your provider.";
        corpus.queries.push_back(q);

        for (int j = 0; j < docs_per_query; ++j) {
            char did[24];
            std::snprintf(did, sizeof did, "%s-d%03d", qid, j);
            Document d;
            d.id = did;
            d.query_id = qid;

            const bool conflict_doc = j <= 1 && docs_per_query >= 2;
            if (conflict_doc || j == 0) {
                d.title = "Guide to " + phrase;
                d.text = "Guidance on " + phrase + " for patients. The recommended " + phrase +
                         " is reviewed by clinicians. Follow the " + phrase +
                         " advice carefully.";
                d.annotations.relevance_grade = RelevanceGrade::A;
                d.annotations.supplement = 1;
                d.annotations.utility = 0.9;
                if (j == 0 && docs_per_query >= 2) {
                    d.source = spec.authority ? "ugc" : "news";
                    d.publish_date = add_days(spec.reference_date, spec.date ? -1000 : -30);
                } else {
                    d.source = spec.authority ? "gov" : "news";
                    d.publish_date = add_days(spec.reference_date, -30);
                }
            } else {
                const int other =
                    (theme + 1 + (j - 2) % spec.topic_spread) % kPhraseCount;
                const std::string alt = kPhrases[other];
                const unsigned rev = static_cast<unsigned>(rng() % 900 + 100);
                d.title = "Notes on " + alt;
                d.text = "Overview of " + alt + ". General notes about " + alt +
                         " and wellness routines. Revision r" + std::to_string(rev) + ".";
                d.source = kFillerSources[j % 3];
                static const RelevanceGrade kFillerGrades[] = {RelevanceGrade::C,
                                                               RelevanceGrade::D,
                                                               RelevanceGrade::E};
                d.annotations.relevance_grade = kFillerGrades[j % 3];
                d.annotations.supplement = j % 2;
                d.annotations.utility = 0.2 + 0.05 * (j % 5);
                const long age = 90 + 37L * j + static_cast<long>(rng() % 200);
                if (j == 2) {
                    d.text += " Published 2023-05-01.";
                } else if (j != 3) {
                    d.publish_date = add_days(spec.reference_date, -age);
                }
            }
            corpus.documents.push_back(std::move(d));
        }
    }
    return corpus;
}

} // namespace polyrag

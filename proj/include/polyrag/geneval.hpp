#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "polyrag/corpus.hpp"
#include "polyrag/jsonl.hpp"
#include "polyrag/llmgate.hpp"

namespace polyrag {

struct GeneratedAnswer {
    std::string query_id;
    std::string answer_text;
    std::vector<std::string> used_doc_ids;
    bool untagged = false;

    bool operator==(const GeneratedAnswer&) const = default;
};

inline Json answer_to_json(const GeneratedAnswer& a) {
    Json j;
    j["query_id"] = a.query_id;
    j["answer_text"] = a.answer_text;
    j["used_doc_ids"] = a.used_doc_ids;
    j["untagged"] = a.untagged;
    return j;
}

inline GeneratedAnswer answer_from_json(const Json& j, long line = -1) {
    GeneratedAnswer a;
    a.query_id = detail::need_string(j, "query_id", line);
    a.answer_text = detail::need_string(j, "answer_text", line);
    const Json& ids = detail::need_field(j, "used_doc_ids", line);
    if (!ids.is_array()) throw DataError("field 'used_doc_ids' must be an array", line);
    for (const auto& v : ids) {
        if (!v.is_string()) throw DataError("field 'used_doc_ids' must hold strings", line);
        a.used_doc_ids.push_back(v.get<std::string>());
    }
    const Json& u = detail::need_field(j, "untagged", line);
    if (!u.is_boolean()) throw DataError("field 'untagged' must be a boolean", line);
    a.untagged = u.get<bool>();
    return a;
}

inline std::string generation_template_id(Domain domain, bool with_context) {
    std::string id = "gen_";
    id += to_lower_ascii(domain_name(domain));
    id += with_context ? "_ctx" : "_noctx";
    return id;
}

inline RenderedPrompt build_generation_prompt(const PromptRegistry& prompts, const Query& query,
                                              const std::vector<const Document*>& docs,
                                              bool with_context) {
    if (with_context && docs.empty())
        throw DataError("no context documents for query '" + query.id + "'");
    PromptVars vars;
    vars.question = query.text;
    if (with_context) {
        std::vector<ContextBlock> blocks;
        blocks.reserve(docs.size());
        for (const Document* d : docs) blocks.push_back({d->title, d->text});
        vars.contexts = std::move(blocks);
    }
    return render_prompt(prompts, generation_template_id(query.domain, with_context), vars);
}

inline GeneratedAnswer generate_answer(ChatClient& client, const PromptRegistry& prompts,
                                       const Query& query, const std::vector<const Document*>& docs,
                                       bool with_context, int max_tokens = 1024) {
    const RenderedPrompt prompt = build_generation_prompt(prompts, query, docs, with_context);
    const ChatReply reply = client.chat(prompt, false, max_tokens);
    const ParsedAnswer parsed = parse_answer_tag(reply.text);
    GeneratedAnswer out;
    out.query_id = query.id;
    out.answer_text = parsed.text;
    out.untagged = parsed.untagged;
    if (with_context)
        for (const Document* d : docs) out.used_doc_ids.push_back(d->id);
    return out;
}

// ---- Statement extraction ------------------------------------------------------

namespace detail {

// "3. text" or "3) text" -> {3, "text"}.
inline std::optional<std::pair<int, std::string>> split_numbered_line(const std::string& line) {
    std::size_t i = 0;
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    std::size_t start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == start || i - start > 6) return std::nullopt;
    if (i >= line.size() || (line[i] != '.' && line[i] != ')')) return std::nullopt;
    const int index = std::stoi(line.substr(start, i - start));
    return std::make_pair(index, trim(line.substr(i + 1)));
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    lines.push_back(cur);
    return lines;
}

} // namespace detail

// Pulls individual statements out of a generation reply. Numbered lines win
// when present; otherwise every non-empty line is one statement.
inline std::vector<std::string> extract_statements(const std::string& reply) {
    std::vector<std::string> numbered;
    std::vector<std::string> plain;
    for (const std::string& line : detail::split_lines(reply)) {
        if (auto split = detail::split_numbered_line(line)) {
            if (!split->second.empty()) numbered.push_back(split->second);
            continue;
        }
        const std::string t = trim(line);
        if (!t.empty()) plain.push_back(t);
    }
    return numbered.empty() ? plain : numbered;
}

inline std::vector<std::string> gen_statements(ChatClient& client, const PromptRegistry& prompts,
                                               const Query& query, const std::string& answer,
                                               int max_tokens = 1024) {
    PromptVars vars;
    vars.question = query.text;
    vars.answer = answer;
    const RenderedPrompt prompt = render_prompt(prompts, "statement_gen", vars);
    const ChatReply reply = client.chat(prompt, false, max_tokens);
    const std::vector<std::string> statements = extract_statements(reply.text);
    if (statements.empty())
        throw BackendError("no_statements: empty statement reply for query '" + query.id + "'");
    return statements;
}

// ---- Judging ------------------------------------------------------------------------

enum class Verdict { correct, incorrect, not_mentioned };

inline const char* verdict_name(Verdict v) {
    switch (v) {
        case Verdict::correct: return "correct";
        case Verdict::incorrect: return "incorrect";
        case Verdict::not_mentioned: return "not_mentioned";
    }
    return "?";
}

namespace detail {

inline std::optional<Verdict> parse_verdict_text(const std::string& raw) {
    std::string s = to_lower_ascii(trim(raw));
    // collapse whitespace runs and treat underscores as spaces
    std::string norm;
    for (char c : s) {
        if (c == '_' || c == '\t') c = ' ';
        if (c == ' ' && !norm.empty() && norm.back() == ' ') continue;
        norm += c;
    }
    if (norm == "correct") return Verdict::correct;
    if (norm == "incorrect") return Verdict::incorrect;
    if (norm == "not mentioned") return Verdict::not_mentioned;
    return std::nullopt;
}

} // namespace detail

struct JudgedStatement {
    int index = 0;
    std::string statement_text;
    Verdict verdict = Verdict::not_mentioned;
    std::string rationale;
};

struct JudgementParse {
    std::vector<JudgedStatement> judged;
    std::size_t parse_failures = 0;
};

// Reads a judge reply of numbered lines "N. <verdict>; <rationale>". A
// numbered line with an unknown verdict, a duplicate index, or an index
// outside 1..n counts as a parse failure; anything unnumbered is ignored.
inline JudgementParse parse_judgement_reply(const std::string& reply,
                                            const std::vector<std::string>& statements) {
    JudgementParse out;
    std::set<int> seen;
    for (const std::string& line : detail::split_lines(reply)) {
        auto split = detail::split_numbered_line(line);
        if (!split) continue;
        const int index = split->first;
        std::string verdict_text = split->second;
        std::string rationale;
        if (auto semi = verdict_text.find(';'); semi != std::string::npos) {
            rationale = trim(verdict_text.substr(semi + 1));
            verdict_text = verdict_text.substr(0, semi);
        }
        const auto verdict = detail::parse_verdict_text(verdict_text);
        if (!verdict || index < 1 || index > static_cast<int>(statements.size()) ||
            !seen.insert(index).second) {
            out.parse_failures += 1;
            continue;
        }
        out.judged.push_back(
            {index, statements[static_cast<std::size_t>(index - 1)], *verdict, rationale});
    }
    std::sort(out.judged.begin(), out.judged.end(),
              [](const JudgedStatement& a, const JudgedStatement& b) { return a.index < b.index; });
    return out;
}

inline std::string number_statements(const std::vector<std::string>& statements) {
    std::ostringstream out;
    for (std::size_t i = 0; i < statements.size(); ++i) {
        if (i) out << '\n';
        out << (i + 1) << ". " << statements[i];
    }
    return out.str();
}

inline JudgementParse judge_statements(ChatClient& client, const PromptRegistry& prompts,
                                       const Query& query,
                                       const std::vector<std::string>& statements,
                                       int max_tokens = 1024) {
    if (!query.ground_truth)
        throw DataError("query '" + query.id + "' lacks ground truth");
    PromptVars vars;
    vars.question = query.text;
    vars.ground_truth = *query.ground_truth;
    vars.statement = number_statements(statements);
    const RenderedPrompt prompt = render_prompt(prompts, "statement_judge", vars);
    const ChatReply reply = client.chat(prompt, false, max_tokens);
    return parse_judgement_reply(reply.text, statements);
}

// ---- Aggregation ----------------------------------------------------------------------

struct VerdictCounts {
    std::size_t correct = 0;
    std::size_t incorrect = 0;
    std::size_t not_mentioned = 0;

    std::size_t total() const { return correct + incorrect + not_mentioned; }
    void add(Verdict v) {
        if (v == Verdict::correct) ++correct;
        else if (v == Verdict::incorrect) ++incorrect;
        else ++not_mentioned;
    }
};

struct GenerationBucket {
    std::size_t n_queries = 0;      // queries with at least one judged statement
    std::size_t total_statements = 0;
    std::size_t parse_failures = 0;
    VerdictCounts counts;

    // Share of judged statements, in percent.
    double ratio(std::size_t count) const {
        const std::size_t t = counts.total();
        return t == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(t);
    }
    // Statements per judged query.
    double per_query(std::size_t count) const {
        return n_queries == 0 ? 0.0
                              : static_cast<double>(count) / static_cast<double>(n_queries);
    }
};

struct GenerationReport {
    GenerationBucket overall;
    std::map<Domain, GenerationBucket> by_domain;
    std::size_t skipped_queries = 0;
};

inline Json generation_bucket_to_json(const GenerationBucket& b) {
    Json j;
    j["n_queries"] = b.n_queries;
    j["total_statements"] = b.total_statements;
    j["parse_failures"] = b.parse_failures;
    j["n_correct"] = b.counts.correct;
    j["n_incorrect"] = b.counts.incorrect;
    j["n_not_mentioned"] = b.counts.not_mentioned;
    j["r_correct"] = b.ratio(b.counts.correct);
    j["r_incorrect"] = b.ratio(b.counts.incorrect);
    j["r_not_mentioned"] = b.ratio(b.counts.not_mentioned);
    j["per_query_correct"] = b.per_query(b.counts.correct);
    j["per_query_incorrect"] = b.per_query(b.counts.incorrect);
    j["per_query_not_mentioned"] = b.per_query(b.counts.not_mentioned);
    return j;
}

inline Json generation_report_to_json(const GenerationReport& r) {
    Json j;
    j["overall"] = generation_bucket_to_json(r.overall);
    Json domains = Json::object();
    for (const auto& [domain, bucket] : r.by_domain)
        domains[domain_name(domain)] = generation_bucket_to_json(bucket);
    j["by_domain"] = domains;
    j["skipped_queries"] = r.skipped_queries;
    return j;
}

// Runs statement generation and judging for each answer. Queries missing a
// ground truth are skipped and counted.
inline GenerationReport evaluate_generation(ChatClient& client, const PromptRegistry& prompts,
                                            const Corpus& corpus,
                                            const std::vector<GeneratedAnswer>& answers,
                                            int max_tokens = 1024) {
    GenerationReport report;
    for (const GeneratedAnswer& answer : answers) {
        const Query* query = corpus.find_query(answer.query_id);
        if (!query) throw DataError("answer references unknown query '" + answer.query_id + "'");
        if (!query->ground_truth) {
            report.skipped_queries += 1;
            continue;
        }
        const std::vector<std::string> statements =
            gen_statements(client, prompts, *query, answer.answer_text, max_tokens);
        const JudgementParse parsed = judge_statements(client, prompts, *query, statements, max_tokens);
        for (GenerationBucket* bucket : {&report.overall, &report.by_domain[query->domain]}) {
            bucket->total_statements += statements.size();
            bucket->parse_failures += parsed.parse_failures;
            if (!parsed.judged.empty()) bucket->n_queries += 1;
            for (const JudgedStatement& js : parsed.judged) bucket->counts.add(js.verdict);
        }
    }
    return report;
}

} // namespace polyrag

#pragma once

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>

#include "polyrag/errors.hpp"
#include "polyrag/jsonl.hpp"
#include "polyrag/util.hpp"

namespace polyrag {

struct LlmConfig {
    std::string endpoint;        // http(s) URL or "mock:<transcript path>"
    std::string model = "judge";
    double temperature = 0.0;
    int max_tokens_grade = 1;
    int max_tokens_generate = 1024;
    int concurrency_limit = 4;
    bool supports_logprobs = false;
    std::string api_key;
    int retry_base_ms = 100;
};

struct RenderedPrompt {
    std::string system_text;
    std::string user_text;
};

inline std::string prompt_hash_hex(const RenderedPrompt& p) {
    std::string buf;
    buf.reserve(p.system_text.size() + 1 + p.user_text.size());
    buf += p.system_text;
    buf += '\x1e';
    buf += p.user_text;
    return hex64(fnv1a64(buf));
}

struct ChatReply {
    std::string text;
    std::optional<std::vector<double>> token_logprobs;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    // want_logprobs demands per-token log-probabilities in the reply.
    virtual ChatReply chat(const RenderedPrompt& prompt, bool want_logprobs,
                           int max_tokens) = 0;
    virtual bool supports_logprobs() const = 0;
    virtual std::string model_id() const = 0;
};

// ---- Mock client ----------------------------------------------------------

// Replays canned replies keyed by prompt hash, so parallel callers hit the
// right entry regardless of call order.
class MockChatClient : public ChatClient {
public:
    explicit MockChatClient(const std::filesystem::path& transcript_path,
                            std::string model = "mock") : model_(std::move(model)) {
        for (const auto& [line, j] : read_jsonl(transcript_path)) {
            if (!j.contains("prompt_hash") || !j["prompt_hash"].is_string())
                throw DataError("transcript entry missing 'prompt_hash'", line);
            if (!j.contains("reply") || !j["reply"].is_string())
                throw DataError("transcript entry missing 'reply'", line);
            ChatReply reply;
            reply.text = j["reply"].get<std::string>();
            if (auto it = j.find("token_logprobs"); it != j.end() && !it->is_null()) {
                if (!it->is_array())
                    throw DataError("field 'token_logprobs' must be an array", line);
                std::vector<double> lps;
                for (const auto& v : *it) {
                    if (!v.is_number())
                        throw DataError("field 'token_logprobs' must hold numbers", line);
                    lps.push_back(v.get<double>());
                }
                reply.token_logprobs = std::move(lps);
            }
            entries_[j["prompt_hash"].get<std::string>()] = std::move(reply);
        }
    }

    ChatReply chat(const RenderedPrompt& prompt, bool want_logprobs, int) override {
        const std::string hash = prompt_hash_hex(prompt);
        auto it = entries_.find(hash);
        if (it == entries_.end()) throw BackendError("mock_miss: " + hash);
        if (want_logprobs && !it->second.token_logprobs)
            throw BackendError("mock entry " + hash + " lacks token_logprobs");
        return it->second;
    }

    bool supports_logprobs() const override { return true; }
    std::string model_id() const override { return model_; }

private:
    std::map<std::string, ChatReply> entries_;
    std::string model_;
};

// Builds one transcript line for a prompt. Test fixtures and docs use this
// so the hashing scheme stays in one place.
inline Json make_transcript_entry(const RenderedPrompt& prompt, std::string_view reply,
                                  const std::optional<std::vector<double>>& logprobs = {}) {
    Json j;
    j["prompt_hash"] = prompt_hash_hex(prompt);
    j["reply"] = std::string(reply);
    if (logprobs) j["token_logprobs"] = *logprobs;
    return j;
}

// ---- HTTP client ------------------------------------------------------------

struct HttpResult {
    bool transport_error = false;
    int status = 0;
    std::string body;
    std::string error;
};

using HttpSendFn = std::function<HttpResult(const std::string& request_body)>;

// POSTs one JSON body to endpoint ("scheme://host[:port]/path"). Split out
// so tests can stub transport behavior without sockets.
inline HttpResult http_post_json(const std::string& endpoint, const std::string& api_key,
                                 const std::string& body) {
    const std::size_t scheme_end = endpoint.find("://");
    if (scheme_end == std::string::npos)
        return {true, 0, "", "endpoint is not a URL: " + endpoint};
    const std::size_t path_start = endpoint.find('/', scheme_end + 3);
    const std::string base =
        path_start == std::string::npos ? endpoint : endpoint.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : endpoint.substr(path_start);

    httplib::Client cli(base);
    cli.set_connection_timeout(10);
    cli.set_read_timeout(120);
    httplib::Headers headers;
    if (!api_key.empty()) headers.emplace("Authorization", "Bearer " + api_key);
    auto res = cli.Post(path, headers, body, "application/json");
    if (!res) return {true, 0, "", "transport error: " + httplib::to_string(res.error())};
    return {false, res->status, res->body, ""};
}

// Speaks the common chat-completion JSON protocol. Transport failures are
// retried with exponential backoff (3 attempts total); protocol errors are
// surfaced immediately since retrying them cannot change the outcome.
class HttpChatClient : public ChatClient {
public:
    explicit HttpChatClient(LlmConfig config, HttpSendFn send_fn = {})
        : config_(std::move(config)),
          send_(send_fn ? std::move(send_fn)
                        : [this](const std::string& body) {
                              return http_post_json(config_.endpoint, config_.api_key, body);
                          }),
          gate_(std::max(1, config_.concurrency_limit)) {}

    ChatReply chat(const RenderedPrompt& prompt, bool want_logprobs, int max_tokens) override {
        if (want_logprobs && !config_.supports_logprobs)
            throw ConfigError("endpoint is not configured for logprobs");

        Json req;
        req["model"] = config_.model;
        Json messages = Json::array();
        if (!prompt.system_text.empty())
            messages.push_back({{"role", "system"}, {"content", prompt.system_text}});
        messages.push_back({{"role", "user"}, {"content", prompt.user_text}});
        req["messages"] = std::move(messages);
        req["temperature"] = config_.temperature;
        req["max_tokens"] = max_tokens;
        if (want_logprobs) req["logprobs"] = true;
        const std::string body = req.dump();

        gate_.acquire();
        struct Release {
            std::counting_semaphore<4096>& g;
            ~Release() { g.release(); }
        } release{gate_};

        HttpResult res;
        for (int attempt = 1; attempt <= 3; ++attempt) {
            res = send_(body);
            const bool retryable = res.transport_error || res.status >= 500;
            if (!retryable) break;
            if (attempt == 3)
                throw BackendError("transport failure after 3 attempts: " +
                                   (res.error.empty() ? "status " + std::to_string(res.status)
                                                      : res.error));
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.retry_base_ms * (1 << (attempt - 1))));
        }
        if (res.status < 200 || res.status >= 300)
            throw BackendError("endpoint returned status " + std::to_string(res.status) + ": " +
                               res.body.substr(0, 200));
        return parse_reply(res.body, want_logprobs);
    }

    bool supports_logprobs() const override { return config_.supports_logprobs; }
    std::string model_id() const override { return config_.model; }

private:
    static ChatReply parse_reply(const std::string& body, bool want_logprobs) {
        Json j;
        try {
            j = Json::parse(body);
        } catch (const Json::parse_error& e) {
            throw BackendError(std::string("malformed endpoint reply: ") + e.what());
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty())
            throw BackendError("endpoint reply has no choices");
        const Json& choice = j["choices"][0];
        if (!choice.contains("message") || !choice["message"].contains("content") ||
            !choice["message"]["content"].is_string())
            throw BackendError("endpoint reply has no message content");
        ChatReply reply;
        reply.text = choice["message"]["content"].get<std::string>();
        if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
            choice["logprobs"].contains("content") && choice["logprobs"]["content"].is_array()) {
            std::vector<double> lps;
            for (const auto& tok : choice["logprobs"]["content"]) {
                if (!tok.contains("logprob") || !tok["logprob"].is_number())
                    throw BackendError("endpoint logprobs entry lacks 'logprob'");
                lps.push_back(tok["logprob"].get<double>());
            }
            reply.token_logprobs = std::move(lps);
        }
        if (want_logprobs && !reply.token_logprobs)
            throw BackendError("endpoint reply lacks requested logprobs");
        return reply;
    }

    LlmConfig config_;
    HttpSendFn send_;
    std::counting_semaphore<4096> gate_;
};

// Resolves "mock:<path>" to the replay client, anything else to HTTP.
inline std::unique_ptr<ChatClient> make_chat_client(const LlmConfig& config) {
    if (config.endpoint.rfind("mock:", 0) == 0)
        return std::make_unique<MockChatClient>(config.endpoint.substr(5), config.model);
    return std::make_unique<HttpChatClient>(config);
}

// ---- Prompt templates ----------------------------------------------------------

struct PromptTemplate {
    std::string system_text;
    std::string user_text;
};

struct ContextBlock {
    std::optional<std::string> title;
    std::string text;
};

inline std::string join_contexts(const std::vector<ContextBlock>& contexts) {
    std::string out;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        if (i) out += "\n\n";
        out += "[" + std::to_string(i + 1) + "] ";
        if (contexts[i].title) {
            out += *contexts[i].title;
            out += '\n';
        }
        out += contexts[i].text;
    }
    return out;
}

struct PromptVars {
    std::optional<std::string> question;
    std::optional<std::string> answer;
    std::optional<std::string> ground_truth;
    std::optional<std::string> statement;
    std::optional<std::vector<ContextBlock>> contexts;
};

class PromptRegistry {
public:
    // Loads every *.txt in the directory; the file stem is the template id.
    // File layout: an optional "### system" section followed by a "### user"
    // section; files without markers are treated as pure user text.
    static PromptRegistry load_dir(const std::filesystem::path& dir) {
        namespace fs = std::filesystem;
        if (!fs::is_directory(dir))
            throw ConfigError("prompt template directory not found: " + dir.string());
        PromptRegistry reg;
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(dir))
            if (entry.is_regular_file() && entry.path().extension() == ".txt")
                files.push_back(entry.path());
        std::sort(files.begin(), files.end());
        for (const auto& f : files) reg.templates_[f.stem().string()] = parse_file(f);
        return reg;
    }

    bool has(const std::string& id) const { return templates_.count(id) > 0; }

    const PromptTemplate& get(const std::string& id) const {
        auto it = templates_.find(id);
        if (it == templates_.end()) throw ConfigError("unknown template_id '" + id + "'");
        return it->second;
    }

    void put(const std::string& id, PromptTemplate t) { templates_[id] = std::move(t); }

    static PromptTemplate parse_template_text(const std::string& raw) {
        PromptTemplate t;
        std::string* section = &t.user_text;
        bool any_marker = false;
        std::size_t pos = 0;
        while (pos <= raw.size()) {
            const std::size_t eol = raw.find('\n', pos);
            const std::string_view line(raw.data() + pos,
                                        (eol == std::string::npos ? raw.size() : eol) - pos);
            if (line == "### system") {
                section = &t.system_text;
                any_marker = true;
            } else if (line == "### user") {
                section = &t.user_text;
                any_marker = true;
            } else if (any_marker || !line.empty() || !section->empty()) {
                section->append(line);
                section->push_back('\n');
            }
            if (eol == std::string::npos) break;
            pos = eol + 1;
        }
        auto rstrip = [](std::string& s) {
            while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' '))
                s.pop_back();
        };
        rstrip(t.system_text);
        rstrip(t.user_text);
        return t;
    }

private:
    static PromptTemplate parse_file(const std::filesystem::path& path) {
        return parse_template_text(read_file(path));
    }

    std::map<std::string, PromptTemplate> templates_;
};

namespace detail {

inline std::string substitute_placeholders(const std::string& text, const std::string& template_id,
                                           const PromptVars& vars) {
    static const char* kNames[] = {"QUESTION", "CONTEXTS", "ANSWER", "GROUNDTRUTH", "STATEMENT"};
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find('{', pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        const std::size_t close = text.find('}', open);
        bool replaced = false;
        if (close != std::string::npos) {
            const std::string name = text.substr(open + 1, close - open - 1);
            for (const char* known : kNames) {
                if (name != known) continue;
                const std::optional<std::string>* value = nullptr;
                std::optional<std::string> joined;
                if (name == "QUESTION") value = &vars.question;
                else if (name == "ANSWER") value = &vars.answer;
                else if (name == "GROUNDTRUTH") value = &vars.ground_truth;
                else if (name == "STATEMENT") value = &vars.statement;
                else {
                    if (vars.contexts) joined = join_contexts(*vars.contexts);
                    value = &joined;
                }
                if (!value->has_value())
                    throw ConfigError("missing placeholder value '" + name + "' for template '" +
                                      template_id + "'");
                out += **value;
                pos = close + 1;
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out += '{';
            pos = open + 1;
        }
    }
    return out;
}

} // namespace detail

inline RenderedPrompt render_prompt(const PromptRegistry& registry, const std::string& template_id,
                                    const PromptVars& vars) {
    const PromptTemplate& t = registry.get(template_id);
    RenderedPrompt p;
    p.system_text = detail::substitute_placeholders(t.system_text, template_id, vars);
    p.user_text = detail::substitute_placeholders(t.user_text, template_id, vars);
    return p;
}

// ---- Answer tag -----------------------------------------------------------------

struct ParsedAnswer {
    std::string text;
    bool untagged = false;
};

inline constexpr std::string_view kAnswerTag = "<|ANSWER|>";

// Takes everything after the last answer tag (an optional ":" right after
// the tag is swallowed). Untagged replies pass through whole.
inline ParsedAnswer parse_answer_tag(std::string_view text) {
    const std::size_t pos = text.rfind(kAnswerTag);
    if (pos == std::string_view::npos) return {trim(text), true};
    std::string_view rest = text.substr(pos + kAnswerTag.size());
    std::size_t skip = 0;
    while (skip < rest.size() && (rest[skip] == ' ' || rest[skip] == '\t')) ++skip;
    if (skip < rest.size() && rest[skip] == ':') ++skip;
    return {trim(rest.substr(skip)), false};
}

} // namespace polyrag

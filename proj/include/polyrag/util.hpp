#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "polyrag/errors.hpp"

namespace polyrag {

inline constexpr const char* kVersion = "0.1.0";

// 64-bit FNV-1a. Used for prompt hashing, mock transcript keys, the
// hash-projection embedding stub and input fingerprints in run manifests.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0) {
    std::uint64_t h = 14695981039346656037ULL ^ seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

// Decodes the UTF-8 code point starting at byte i. Malformed sequences
// decode as U+FFFD with length 1 so iteration is total on arbitrary bytes.
inline std::pair<char32_t, std::size_t> utf8_next(std::string_view s, std::size_t i) {
    const auto b0 = static_cast<unsigned char>(s[i]);
    if (b0 < 0x80) return {b0, 1};
    auto cont = [&](std::size_t k) {
        return i + k < s.size() &&
               (static_cast<unsigned char>(s[i + k]) & 0xC0) == 0x80;
    };
    if ((b0 & 0xE0) == 0xC0 && cont(1)) {
        char32_t cp = ((b0 & 0x1Fu) << 6) | (static_cast<unsigned char>(s[i + 1]) & 0x3Fu);
        return {cp, 2};
    }
    if ((b0 & 0xF0) == 0xE0 && cont(1) && cont(2)) {
        char32_t cp = ((b0 & 0x0Fu) << 12) |
                      ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 6) |
                      (static_cast<unsigned char>(s[i + 2]) & 0x3Fu);
        return {cp, 3};
    }
    if ((b0 & 0xF8) == 0xF0 && cont(1) && cont(2) && cont(3)) {
        char32_t cp = ((b0 & 0x07u) << 18) |
                      ((static_cast<unsigned char>(s[i + 1]) & 0x3Fu) << 12) |
                      ((static_cast<unsigned char>(s[i + 2]) & 0x3Fu) << 6) |
                      (static_cast<unsigned char>(s[i + 3]) & 0x3Fu);
        return {cp, 4};
    }
    return {0xFFFD, 1};
}

// CJK ideographs plus kana. These script runs carry no word separators,
// so the tokenizers treat each such code point as its own token.
inline bool is_cjk(char32_t cp) {
    return (cp >= 0x4E00 && cp <= 0x9FFF) ||   // unified ideographs
           (cp >= 0x3400 && cp <= 0x4DBF) ||   // ideograph extension A
           (cp >= 0x3040 && cp <= 0x30FF) ||   // hiragana + katakana
           (cp >= 0xF900 && cp <= 0xFAFF);     // compatibility ideographs
}

inline void append_utf8(std::string& out, char32_t cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

// Word tokenizer: maximal ASCII alphanumeric runs (lowercased) plus one
// token per CJK code point. Other code points act as separators.
inline std::vector<std::string> tokenize_words(std::string_view text) {
    std::vector<std::string> tokens;
    std::string run;
    for (std::size_t i = 0; i < text.size();) {
        auto [cp, len] = utf8_next(text, i);
        i += len;
        if (cp < 0x80 && std::isalnum(static_cast<int>(cp))) {
            run.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
            continue;
        }
        if (!run.empty()) {
            tokens.push_back(run);
            run.clear();
        }
        if (is_cjk(cp)) {
            std::string t;
            append_utf8(t, cp);
            tokens.push_back(std::move(t));
        }
    }
    if (!run.empty()) tokens.push_back(run);
    return tokens;
}

// Character bigram tokenizer over the filtered code point stream
// (ASCII alphanumerics lowercased, CJK kept, everything else dropped).
// Inputs shorter than two kept code points yield at most one token.
inline std::vector<std::string> tokenize_bigrams(std::string_view text) {
    std::vector<std::string> chars;
    for (std::size_t i = 0; i < text.size();) {
        auto [cp, len] = utf8_next(text, i);
        i += len;
        if (cp < 0x80 && std::isalnum(static_cast<int>(cp))) {
            chars.emplace_back(1, static_cast<char>(std::tolower(static_cast<int>(cp))));
        } else if (is_cjk(cp)) {
            std::string t;
            append_utf8(t, cp);
            chars.push_back(std::move(t));
        }
    }
    if (chars.empty()) return {};
    if (chars.size() == 1) return {chars[0]};
    std::vector<std::string> tokens;
    tokens.reserve(chars.size() - 1);
    for (std::size_t i = 0; i + 1 < chars.size(); ++i)
        tokens.push_back(chars[i] + chars[i + 1]);
    return tokens;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Writes via a temporary file and rename so concurrent readers never see
// a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write file: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw ConfigError("short write: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string file_fingerprint(const std::filesystem::path& path) {
    return hex64(fnv1a64(read_file(path)));
}

// Runs f(0..n-1) on up to `workers` threads. Results must be written to
// per-index slots by the caller; the first exception is rethrown after
// all workers join.
template <typename F>
void parallel_for(std::size_t n, int workers, F&& f) {
    if (n == 0) return;
    const int nw = std::max(1, std::min<int>(workers, static_cast<int>(n)));
    if (nw == 1) {
        for (std::size_t i = 0; i < n; ++i) f(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    f(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lk(error_mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

inline std::string format_double(double v) {
    std::ostringstream ss;
    ss.precision(17);
    ss << v;
    return ss.str();
}

} // namespace polyrag

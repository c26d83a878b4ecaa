#pragma once

#include <stdexcept>
#include <string>

namespace polyrag {

// Exit codes used by the CLI: 0 success, 1 data error, 2 backend error,
// 3 config error.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual int exit_code() const { return 1; }
};

// Malformed or inconsistent input data. Carries the 1-based line number
// of the offending record when the error is anchored to a file line.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg, long line = -1)
        : Error(line > 0 ? std::to_string(line) + ": " + msg : msg), line_(line) {}
    long line() const { return line_; }
    int exit_code() const override { return 1; }

private:
    long line_;
};

// A scoring or LLM backend failed: transport error, unparseable reply,
// degenerate provider output, missing mock transcript entry.
class BackendError : public Error {
public:
    explicit BackendError(const std::string& msg) : Error(msg) {}
    int exit_code() const override { return 2; }
};

// Invalid configuration: bad paths, malformed profiles, contract misuse.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
    int exit_code() const override { return 3; }
};

} // namespace polyrag

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace tmeval {

/// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input record. `record()` is the zero-based record (line) index.
class FormatError : public Error {
public:
    FormatError(const std::string& source, std::size_t record, const std::string& what)
        : Error(source + ": record " + std::to_string(record) + ": " + what),
          record_(record) {}

    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

/// A precondition on the arguments of an operation does not hold.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Correlation is undefined, e.g. one of the series is constant.
class UndefinedCorrelation : public Error {
public:
    using Error::Error;
};

/// Replay mode asked for a prompt that has no recorded response.
class ReplayMiss : public Error {
public:
    explicit ReplayMiss(std::string key)
        : Error("replay cache miss for key " + key), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Network or server failure while talking to a live judge.
class TransportError : public Error {
public:
    TransportError(const std::string& what, int attempts, long next_backoff_ms, bool retriable = true)
        : Error(what), attempts_(attempts), next_backoff_ms_(next_backoff_ms), retriable_(retriable) {}

    int attempts() const noexcept { return attempts_; }
    long next_backoff_ms() const noexcept { return next_backoff_ms_; }
    bool retriable() const noexcept { return retriable_; }

private:
    int attempts_;
    long next_backoff_ms_;
    bool retriable_;
};

}  // namespace tmeval

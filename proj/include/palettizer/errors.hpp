#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace palettizer {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed tree: cycles, dangling ids, broken nested-set indices.
class StructuralError : public Error {
public:
    using Error::Error;
};

/// Document exceeds the configured node capacity.
class CapacityError : public Error {
public:
    CapacityError(std::size_t count, std::size_t limit)
        : Error("document has " + std::to_string(count) + " nodes, limit is " +
                std::to_string(limit)),
          count_(count), limit_(limit) {}

    std::size_t count() const noexcept { return count_; }
    std::size_t limit() const noexcept { return limit_; }

private:
    std::size_t count_;
    std::size_t limit_;
};

/// Input that fails a precondition (bad JSON field, width mismatch, bad mask).
class InvalidInput : public Error {
public:
    using Error::Error;
};

/// Preference set that refers to unknown nodes or words.
class InvalidPreference : public Error {
public:
    InvalidPreference(std::string reason, std::string message)
        : Error(std::move(message)), reason_(std::move(reason)) {}

    /// Machine-readable reason code, e.g. "unknown_node".
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string reason_;
};

/// A vague word that is not in the lexicon.
class UnknownWord : public InvalidPreference {
public:
    UnknownWord(std::string word, std::vector<std::string> nearest);

    const std::string& word() const noexcept { return word_; }
    const std::vector<std::string>& nearest() const noexcept { return nearest_; }

private:
    std::string word_;
    std::vector<std::string> nearest_;
};

}  // namespace palettizer

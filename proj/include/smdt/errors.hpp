#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace smdt {

// Base class for all toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Configuration, argument, or schema-name problems (unknown table/field,
// malformed range, bad config keys). CLI maps these to exit code 1.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Backing-medium failure (I/O, SQL engine errors).
class StoreError : public Error {
public:
    using Error::Error;
};

// A store that must be created fresh already exists. Signaled distinctly
// from I/O failure so callers can offer an overwrite path.
class StoreExistsError : public StoreError {
public:
    explicit StoreExistsError(const std::string& path)
        : StoreError("store already exists: " + path), path_(path) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// A record failed its type invariants on the way into a store.
class InvariantViolationError : public Error {
public:
    InvariantViolationError(std::string table, std::int64_t index, std::string reason)
        : Error("invariant violation in table '" + table + "' at record " +
                std::to_string(index) + ": " + reason),
          table_(std::move(table)), index_(index), reason_(std::move(reason)) {}

    const std::string& table() const { return table_; }
    std::int64_t index() const { return index_; }
    const std::string& reason() const { return reason_; }

private:
    std::string table_;
    std::int64_t index_;
    std::string reason_;
};

// Provider rejected the credentials; aborts an enrichment run outright.
class AuthError : public Error {
public:
    using Error::Error;
};

// HTTP transport failed after the retry budget was exhausted.
class TransportError : public Error {
public:
    using Error::Error;
};

// Two distinct source values produced the same pseudonymization token.
class TokenCollisionError : public Error {
public:
    using Error::Error;
};

}  // namespace smdt

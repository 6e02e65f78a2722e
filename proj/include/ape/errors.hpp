#pragma once

#include <stdexcept>
#include <string>

namespace ape {

/// Bad configuration: unknown placeholder, missing capability, malformed
/// config file. Maps to CLI exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad data or failed run: invalid task file, empty proposal set, scoring
/// failure. Maps to CLI exit code 1.
class DomainError : public std::runtime_error {
public:
    explicit DomainError(const std::string& what) : std::runtime_error(what) {}
};

/// Transport-level backend failure after retries. Carries the attempt count.
class TransportError : public DomainError {
public:
    TransportError(const std::string& what, int attempts)
        : DomainError(what + " (after " + std::to_string(attempts) + " attempts)"),
          attempts_(attempts) {}
    int attempts() const { return attempts_; }

private:
    int attempts_ = 0;
};

} // namespace ape

#pragma once

#include <stdexcept>
#include <string>

namespace nftaudit {

// Exit-code mapping: UsageError -> 1, DataError -> 2, EndpointError -> 3.

class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

class EndpointError : public std::runtime_error {
public:
    explicit EndpointError(const std::string& msg) : std::runtime_error(msg) {}
};

// Retryable transport-level failure (connection refused, timeout, 5xx).
class TransportError : public std::runtime_error {
public:
    explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

// Endpoint asked us to slow down; delay_ms is the server-supplied wait when present.
class RateLimited : public std::runtime_error {
public:
    explicit RateLimited(const std::string& msg, long delay_ms = -1)
        : std::runtime_error(msg), delay_ms(delay_ms) {}
    long delay_ms;
};

} // namespace nftaudit

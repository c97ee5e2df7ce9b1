#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace w2s {

/// Base class for all harness errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid configuration or parameters (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Malformed or inconsistent data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

/// Model-backend failure (CLI exit code 4).
struct BackendError : Error {
    BackendError(const std::string& msg, bool retryable_ = false, int retry_after_ms_ = 0)
        : Error(msg), retryable(retryable_), retry_after_ms(retry_after_ms_) {}
    bool retryable = false;
    int retry_after_ms = 0;  // server-advised delay, 0 = none
};

/// Too many per-item failures in an annotation run (CLI exit code 5).
struct FailureCapError : Error {
    using Error::Error;
};

/// FNV-1a 64-bit hash. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Hex-encoded SHA-256 digest.
std::string sha256_hex(std::string_view data);

}  // namespace w2s

#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace autokey {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Virtual time, in seconds since simulation start.
using Instant = std::int64_t;
using Duration = std::int64_t;

using Address = std::string;

constexpr Duration kMinute = 60;
constexpr Duration kHour = 60 * kMinute;
constexpr Duration kDay = 24 * kHour;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Authentication or decryption failure.
class CryptoError : public Error {
public:
    using Error::Error;
};

// Malformed input. field() names the offending element when known.
class ParseError : public Error {
public:
    ParseError(std::string field, const std::string& what)
        : Error(field.empty() ? what : field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class InvariantViolation : public Error {
public:
    using Error::Error;
};

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }
inline std::string to_string(ByteView b) { return std::string(b.begin(), b.end()); }

std::string to_hex(ByteView bytes);
std::string base64_encode(ByteView bytes);
// Throws ParseError on invalid or non-canonical input.
Bytes base64_decode(std::string_view text);

// Throws once at startup if libsodium cannot be initialized.
void ensure_sodium();

}  // namespace autokey

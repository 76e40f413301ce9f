#pragma once

#include "autokey/common.hpp"

namespace autokey {

constexpr std::string_view kArmorBegin = "-----BEGIN CERTIFICATE-----";
constexpr std::string_view kArmorEnd = "-----END CERTIFICATE-----";
constexpr std::size_t kArmorColumns = 64;

// Fingerprints are 20 bytes of BLAKE2b, rendered as 40 lowercase hex digits.
constexpr std::size_t kFingerprintBytes = 20;
constexpr std::size_t kFingerprintHexLength = 2 * kFingerprintBytes;

/// Public key bound to one mail address and a validity window [start, end).
struct Certificate {
    Address subject_address;
    Bytes public_key;
    Instant validity_start = 0;
    Instant validity_end = 0;
    std::string fingerprint;

    bool valid_at(Instant t) const noexcept { return validity_start <= t && t < validity_end; }

    friend bool operator==(const Certificate&, const Certificate&) = default;
};

// Builds a certificate and fills in its fingerprint. Throws
// std::invalid_argument when start >= end.
Certificate make_certificate(Address subject, Bytes public_key, Instant start, Instant end);

// Canonical byte form of the fields covered by the fingerprint.
Bytes canonical_certificate_bytes(const Certificate& cert);

std::string fingerprint(const Certificate& cert);

bool fingerprint_matches(const Certificate& cert);

std::string armor_encode(const Certificate& cert);

// Parses the first armored block in `text`. Leading and trailing text is
// ignored. Throws ParseError on missing markers, bad base64, a malformed
// payload, or a fingerprint mismatch.
Certificate armor_decode(std::string_view text);

// Base64 body of the armor on a single line (used by keystore snapshots).
std::string armor_body(const Certificate& cert);
Certificate certificate_from_body(std::string_view base64_body);

}  // namespace autokey

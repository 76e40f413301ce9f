#include "autokey/certificate.hpp"

#include <sodium.h>

#include "autokey/byte_codec.hpp"

namespace autokey {

namespace {

constexpr std::string_view kCertMagic = "AKC1";

Bytes fingerprint_raw(const Certificate& cert) {
    ensure_sodium();
    const auto canon = canonical_certificate_bytes(cert);
    Bytes out(kFingerprintBytes);
    crypto_generichash(out.data(), out.size(), canon.data(), canon.size(), nullptr, 0);
    return out;
}

}  // namespace

Certificate make_certificate(Address subject, Bytes public_key, Instant start, Instant end) {
    if (start >= end) {
        throw std::invalid_argument("certificate validity window must satisfy start < end");
    }
    Certificate c{std::move(subject), std::move(public_key), start, end, {}};
    c.fingerprint = fingerprint(c);
    return c;
}

Bytes canonical_certificate_bytes(const Certificate& cert) {
    ByteWriter w;
    w.raw(to_bytes(kCertMagic));
    w.str(cert.subject_address);
    w.blob(cert.public_key);
    w.i64(cert.validity_start);
    w.i64(cert.validity_end);
    return w.take();
}

std::string fingerprint(const Certificate& cert) { return to_hex(fingerprint_raw(cert)); }

bool fingerprint_matches(const Certificate& cert) { return cert.fingerprint == fingerprint(cert); }

std::string armor_body(const Certificate& cert) {
    auto payload = canonical_certificate_bytes(cert);
    const auto fp = fingerprint_raw(cert);
    payload.insert(payload.end(), fp.begin(), fp.end());
    return base64_encode(payload);
}

Certificate certificate_from_body(std::string_view base64_body) {
    const auto payload = base64_decode(base64_body);
    if (payload.size() < kFingerprintBytes) {
        throw ParseError("certificate", "payload too short");
    }
    const ByteView all(payload);
    ByteReader r(all.first(all.size() - kFingerprintBytes), "certificate");
    if (r.raw(kCertMagic.size()) != to_bytes(kCertMagic)) {
        throw ParseError("certificate.magic", "unknown certificate encoding");
    }
    Certificate c;
    c.subject_address = r.str("subject_address");
    c.public_key = r.blob("public_key");
    c.validity_start = r.i64("validity_start");
    c.validity_end = r.i64("validity_end");
    r.expect_end();
    if (c.validity_start >= c.validity_end) {
        throw ParseError("certificate.validity", "empty validity window");
    }
    c.fingerprint = fingerprint(c);
    const auto stored = all.last(kFingerprintBytes);
    if (to_hex(stored) != c.fingerprint) {
        throw ParseError("certificate.fingerprint", "fingerprint mismatch");
    }
    return c;
}

std::string armor_encode(const Certificate& cert) {
    const auto body = armor_body(cert);
    std::string out;
    out.reserve(body.size() + body.size() / kArmorColumns + 64);
    out.append(kArmorBegin).push_back('\n');
    for (std::size_t i = 0; i < body.size(); i += kArmorColumns) {
        out.append(body, i, kArmorColumns).push_back('\n');
    }
    out.append(kArmorEnd).push_back('\n');
    return out;
}

Certificate armor_decode(std::string_view text) {
    const auto begin = text.find(kArmorBegin);
    if (begin == std::string_view::npos) {
        throw ParseError("armor", "missing begin marker");
    }
    const auto body_start = begin + kArmorBegin.size();
    const auto end = text.find(kArmorEnd, body_start);
    if (end == std::string_view::npos) {
        throw ParseError("armor", "missing end marker");
    }
    std::string body;
    for (char ch : text.substr(body_start, end - body_start)) {
        if (ch == '\n' || ch == '\r') {
            continue;
        }
        body.push_back(ch);
    }
    return certificate_from_body(body);
}

}  // namespace autokey

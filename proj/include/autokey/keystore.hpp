#pragma once

#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "autokey/certificate.hpp"

namespace autokey {

struct CorrespondentRecord {
    Address address;
    Certificate current_cert;
    std::optional<Certificate> future_cert;

    friend bool operator==(const CorrespondentRecord&, const CorrespondentRecord&) = default;
};

enum class SecretDirection { Initiator, Responder };

std::string_view to_string(SecretDirection d);

struct PendingSecret {
    Address peer;
    std::string secret;
    Instant expires_at = 0;
    SecretDirection direction = SecretDirection::Initiator;

    friend bool operator==(const PendingSecret&, const PendingSecret&) = default;
};

enum class CertSlot { Current, Future };

/// One party's list of correspondent keys plus leap-of-faith secrets.
///
/// A certificate is invalid at exactly its validity_end. A future certificate
/// must extend coverage beyond the current one.
class Keystore {
public:
    // Throws std::invalid_argument for a future-slot write without a current
    // record, or a future cert that does not outlast the current one.
    void upsert_certificate(const Certificate& cert, CertSlot slot);

    // Certificate covering `now`, rolling the future cert over when the
    // current one has lapsed.
    std::optional<Certificate> lookup_valid_certificate(const Address& address, Instant now);

    // Drops records with no certificate valid at `now` after rollover.
    std::vector<Address> remove_expired(Instant now);

    // Records with now < current.validity_end <= now + max_check and no
    // future cert yet.
    std::vector<CorrespondentRecord> expiring_within(Instant now, Duration max_check) const;

    bool erase(const Address& address);

    const CorrespondentRecord* find(const Address& address) const;
    const std::map<Address, CorrespondentRecord>& records() const noexcept { return records_; }

    // Replaces any live secret for the same (peer, direction).
    void store_pending_secret(PendingSecret secret);
    std::optional<PendingSecret> take_pending_secret(const Address& peer, SecretDirection d);
    const PendingSecret* peek_pending_secret(const Address& peer, SecretDirection d) const;
    // Removes secrets with expires_at <= now and returns them.
    std::vector<PendingSecret> purge_expired_secrets(Instant now);

    std::vector<PendingSecret> pending_secrets() const;

    friend bool operator==(const Keystore&, const Keystore&) = default;

private:
    static void roll_over(CorrespondentRecord& rec, Instant now);

    std::map<Address, CorrespondentRecord> records_;
    std::map<std::pair<Address, SecretDirection>, PendingSecret> secrets_;
};

// Line-oriented text snapshot; grammar in docs/keystore-snapshot.md.
std::string write_snapshot(const Keystore& store);
// Throws ParseError naming the offending line.
Keystore read_snapshot(std::string_view text);

}  // namespace autokey

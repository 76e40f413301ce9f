#include "autokey/keystore.hpp"

namespace autokey {

std::string_view to_string(SecretDirection d) {
    return d == SecretDirection::Initiator ? "initiator" : "responder";
}

void Keystore::upsert_certificate(const Certificate& cert, CertSlot slot) {
    auto it = records_.find(cert.subject_address);
    if (slot == CertSlot::Current) {
        if (it == records_.end()) {
            records_.emplace(cert.subject_address,
                             CorrespondentRecord{cert.subject_address, cert, std::nullopt});
            return;
        }
        auto& rec = it->second;
        if (rec.current_cert == cert) {
            return;
        }
        rec.current_cert = cert;
        if (rec.future_cert && (rec.future_cert->validity_end <= cert.validity_end ||
                                *rec.future_cert == cert)) {
            rec.future_cert.reset();
        }
        return;
    }

    if (it == records_.end()) {
        throw std::invalid_argument("future certificate for " + cert.subject_address +
                                    " without a current record");
    }
    auto& rec = it->second;
    if (cert.validity_end <= rec.current_cert.validity_end) {
        throw std::invalid_argument("future certificate does not extend coverage");
    }
    rec.future_cert = cert;
}

void Keystore::roll_over(CorrespondentRecord& rec, Instant now) {
    if (rec.current_cert.validity_end <= now && rec.future_cert) {
        rec.current_cert = std::move(*rec.future_cert);
        rec.future_cert.reset();
    }
}

std::optional<Certificate> Keystore::lookup_valid_certificate(const Address& address,
                                                              Instant now) {
    auto it = records_.find(address);
    if (it == records_.end()) {
        return std::nullopt;
    }
    roll_over(it->second, now);
    if (it->second.current_cert.valid_at(now)) {
        return it->second.current_cert;
    }
    return std::nullopt;
}

std::vector<Address> Keystore::remove_expired(Instant now) {
    std::vector<Address> removed;
    for (auto it = records_.begin(); it != records_.end();) {
        roll_over(it->second, now);
        if (it->second.current_cert.validity_end <= now) {
            removed.push_back(it->first);
            it = records_.erase(it);
        } else {
            ++it;
        }
    }
    return removed;
}

std::vector<CorrespondentRecord> Keystore::expiring_within(Instant now, Duration max_check) const {
    std::vector<CorrespondentRecord> out;
    for (const auto& [addr, rec] : records_) {
        const auto end = rec.current_cert.validity_end;
        if (now < end && end <= now + max_check && !rec.future_cert) {
            out.push_back(rec);
        }
    }
    return out;
}

bool Keystore::erase(const Address& address) { return records_.erase(address) > 0; }

const CorrespondentRecord* Keystore::find(const Address& address) const {
    auto it = records_.find(address);
    return it == records_.end() ? nullptr : &it->second;
}

void Keystore::store_pending_secret(PendingSecret secret) {
    if (secret.secret.size() < 20) {
        throw std::invalid_argument("pending secret shorter than 20 characters");
    }
    auto key = std::make_pair(secret.peer, secret.direction);
    secrets_.insert_or_assign(std::move(key), std::move(secret));
}

std::optional<PendingSecret> Keystore::take_pending_secret(const Address& peer,
                                                           SecretDirection d) {
    auto it = secrets_.find({peer, d});
    if (it == secrets_.end()) {
        return std::nullopt;
    }
    auto out = std::move(it->second);
    secrets_.erase(it);
    return out;
}

const PendingSecret* Keystore::peek_pending_secret(const Address& peer, SecretDirection d) const {
    auto it = secrets_.find({peer, d});
    return it == secrets_.end() ? nullptr : &it->second;
}

std::vector<PendingSecret> Keystore::purge_expired_secrets(Instant now) {
    std::vector<PendingSecret> purged;
    for (auto it = secrets_.begin(); it != secrets_.end();) {
        if (it->second.expires_at <= now) {
            purged.push_back(std::move(it->second));
            it = secrets_.erase(it);
        } else {
            ++it;
        }
    }
    return purged;
}

std::vector<PendingSecret> Keystore::pending_secrets() const {
    std::vector<PendingSecret> out;
    out.reserve(secrets_.size());
    for (const auto& [key, s] : secrets_) {
        out.push_back(s);
    }
    return out;
}

}  // namespace autokey

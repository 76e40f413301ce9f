#include "autokey/adversary.hpp"

#include <algorithm>

namespace autokey {

std::string_view to_string(AdversaryMode m) {
    switch (m) {
        case AdversaryMode::None: return "none";
        case AdversaryMode::CompromiseAfter: return "compromise_after";
        case AdversaryMode::ActiveMitmDuringExchange: return "active_mitm";
        case AdversaryMode::MainChannelOnlyMitm: return "main_channel_only_mitm";
    }
    return "?";
}

AdversaryMode adversary_mode_from_string(std::string_view s) {
    for (auto m : {AdversaryMode::None, AdversaryMode::CompromiseAfter,
                   AdversaryMode::ActiveMitmDuringExchange, AdversaryMode::MainChannelOnlyMitm}) {
        if (to_string(m) == s) return m;
    }
    throw ParseError("adversary.mode", "unknown adversary mode '" + std::string(s) + "'");
}

Adversary::Adversary(AdversaryConfig config, const CryptoProvider& crypto, Rng rng)
    : config_(config), crypto_(crypto), rng_(std::move(rng)) {}

bool Adversary::intercepts(bool side_channel) const noexcept {
    switch (config_.mode) {
        case AdversaryMode::ActiveMitmDuringExchange: return true;
        case AdversaryMode::MainChannelOnlyMitm: return !side_channel;
        default: return false;
    }
}

bool Adversary::reads_mailboxes_at(Instant now) const noexcept {
    return config_.mode == AdversaryMode::CompromiseAfter && now >= config_.compromise_at;
}

void Adversary::observe(ByteView bytes) { observed_.emplace(bytes.begin(), bytes.end()); }

void Adversary::read(const Bytes& raw) { observe(raw); }

bool Adversary::observed_contains(std::string_view needle) const {
    if (needle.empty()) return false;
    return std::any_of(observed_.begin(), observed_.end(), [&](const Bytes& b) {
        return std::search(b.begin(), b.end(), needle.begin(), needle.end()) != b.end();
    });
}

const KeyPair& Adversary::impostor_for(const Certificate& real) {
    auto it = impostors_.find(real.subject_address);
    if (it == impostors_.end() ||
        it->second.public_part.validity_end < real.validity_end) {
        auto kp = crypto_.generate_keypair(real.subject_address, real.validity_start,
                                           real.validity_end, rng_);
        it = impostors_.insert_or_assign(real.subject_address, std::move(kp)).first;
    }
    return it->second;
}

void Adversary::resign(MailMessage& m, const Address& as) {
    auto it = impostors_.find(as);
    if (it == impostors_.end()) return;
    m.signature.reset();
    m.signature = crypto_.sign(it->second.private_part, signed_region(m));
}

Bytes Adversary::intercept(const Bytes& raw, bool side_channel, Instant now,
                           std::vector<Json>& actions) {
    (void)now;
    if (!intercepts(side_channel)) {
        return raw;
    }
    observe(raw);

    MailMessage m;
    try {
        m = parse_message(raw);
    } catch (const ParseError&) {
        return raw;
    }

    std::optional<MailMessage> replaced;
    switch (m.kind) {
        case MessageKind::PasswordMail:
            if (auto s = password_from_body(m.body)) {
                auto& known = secrets_by_sender_[m.from];
                if (std::find(known.begin(), known.end(), *s) == known.end()) known.push_back(*s);
                Json a;
                a["action"] = "password_read";
                a["message_id"] = m.message_id;
                actions.push_back(std::move(a));
            }
            break;
        case MessageKind::KeyExchangeMail: replaced = swap_exchange(m, actions); break;
        case MessageKind::KeyExchangeReply: replaced = swap_reply(m, actions); break;
        case MessageKind::UserMail: replaced = relay_user_mail(m, actions); break;
        case MessageKind::RekeyReply: replaced = forge_rekey_reply(m, actions); break;
        default: break;
    }
    return replaced ? serialize_message(*replaced) : raw;
}

std::optional<MailMessage> Adversary::swap_exchange(MailMessage m, std::vector<Json>& actions) {
    const auto* env = m.find_attachment(AttachmentKind::SymmetricEnvelope);
    auto known = secrets_by_sender_.find(m.from);
    if (!env || known == secrets_by_sender_.end()) return std::nullopt;

    for (const auto& secret : known->second) {
        DocumentContents contents;
        Certificate real;
        try {
            contents = open_symmetric_envelope(crypto_, env->bytes, secret);
            real = armor_decode(contents.armored_cert);
        } catch (const Error&) {
            continue;
        }
        observe(to_bytes(contents.original_text));
        real_certs_[m.from] = real;
        const auto fake_armor = armor_encode(impostor_for(real).public_part);

        std::vector<Attachment> attachments;
        attachments.push_back(
            {AttachmentKind::OpaqueDocument,
             encode_opaque_document(build_opaque_document(crypto_, rng_, contents.original_text,
                                                          fake_armor, secret))});
        attachments.push_back(
            {AttachmentKind::SymmetricEnvelope,
             build_symmetric_envelope(crypto_, rng_,
                                      {contents.explaining_text, contents.original_text, fake_armor},
                                      secret)});
        m.attachments = std::move(attachments);
        exchange_secret_[{m.from, m.to}] = secret;

        Json a;
        a["action"] = "exchange_cert_substituted";
        a["message_id"] = m.message_id;
        a["impersonated"] = m.from;
        actions.push_back(std::move(a));
        return m;
    }
    return std::nullopt;
}

std::optional<MailMessage> Adversary::swap_reply(MailMessage m, std::vector<Json>& actions) {
    // The reply travels responder -> initiator.
    auto it = exchange_secret_.find({m.to, m.from});
    const auto* env = m.find_attachment(AttachmentKind::SymmetricEnvelope);
    if (it == exchange_secret_.end() || !env) return std::nullopt;
    DocumentContents contents;
    Certificate real;
    try {
        contents = open_symmetric_envelope(crypto_, env->bytes, it->second);
        real = armor_decode(contents.armored_cert);
    } catch (const Error&) {
        return std::nullopt;
    }
    real_certs_[m.from] = real;
    contents.armored_cert = armor_encode(impostor_for(real).public_part);
    m.attachments = {{AttachmentKind::SymmetricEnvelope,
                      build_symmetric_envelope(crypto_, rng_, contents, it->second)}};
    compromised_.insert({m.to, m.from});

    Json a;
    a["action"] = "reply_cert_substituted";
    a["message_id"] = m.message_id;
    a["impersonated"] = m.from;
    actions.push_back(std::move(a));
    return m;
}

std::optional<MailMessage> Adversary::relay_user_mail(MailMessage m, std::vector<Json>& actions) {
    if (m.protection != Protection::EncryptedSigned) return std::nullopt;
    auto fake_to = impostors_.find(m.to);
    auto real_to = real_certs_.find(m.to);
    if (fake_to == impostors_.end() || real_to == real_certs_.end()) return std::nullopt;
    Bytes plain;
    try {
        plain = crypto_.pk_decrypt(fake_to->second.private_part, base64_decode(m.body));
    } catch (const Error&) {
        return std::nullopt;
    }
    observe(plain);
    m.body = base64_encode(crypto_.pk_encrypt(real_to->second, plain, rng_));
    resign(m, m.from);

    Json a;
    a["action"] = "user_mail_read_and_relayed";
    a["message_id"] = m.message_id;
    actions.push_back(std::move(a));
    return m;
}

std::optional<MailMessage> Adversary::forge_rekey_reply(MailMessage m, std::vector<Json>& actions) {
    // Subverted pairs already trust the impostor; only attack honest ones.
    if (compromised_.count({m.to, m.from}) || compromised_.count({m.from, m.to})) {
        return std::nullopt;
    }
    const auto* att = m.find_attachment(AttachmentKind::ArmoredCertificate);
    if (!att) return std::nullopt;
    Certificate announced;
    try {
        announced = armor_decode(to_string(att->bytes));
    } catch (const Error&) {
        return std::nullopt;
    }
    auto forged = crypto_.generate_keypair(m.from, announced.validity_start,
                                           announced.validity_end, rng_);
    for (auto& a : m.attachments) {
        if (a.kind == AttachmentKind::ArmoredCertificate) {
            a.bytes = to_bytes(armor_encode(forged.public_part));
        }
    }
    m.signature.reset();
    m.signature = crypto_.sign(forged.private_part, signed_region(m));

    Json a;
    a["action"] = "rekey_reply_forged";
    a["message_id"] = m.message_id;
    a["impersonated"] = m.from;
    actions.push_back(std::move(a));
    return m;
}

}  // namespace autokey

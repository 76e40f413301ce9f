#include "autokey/engine.hpp"

#include <algorithm>

#include "autokey/texts.hpp"

namespace autokey {

namespace {

constexpr std::size_t kSecretLength = 24;

std::string one_line(std::string_view s) {
    std::string out(s);
    std::replace(out.begin(), out.end(), '\n', ' ');
    std::replace(out.begin(), out.end(), '\r', ' ');
    return out;
}

}  // namespace

std::string_view to_string(TimerKind k) {
    switch (k) {
        case TimerKind::KeyExchange: return "key_exchange";
        case TimerKind::RekeyRequest: return "rekey_request";
        case TimerKind::ExchangeReply: return "exchange_reply";
    }
    return "?";
}

void EngineOutput::append(EngineOutput&& other) {
    std::move(other.outgoing.begin(), other.outgoing.end(), std::back_inserter(outgoing));
    std::move(other.commands.begin(), other.commands.end(), std::back_inserter(commands));
    std::move(other.events.begin(), other.events.end(), std::back_inserter(events));
}

Engine::Engine(EngineConfig config, const CryptoProvider& crypto, Rng rng, Instant now)
    : crypto_(crypto), rng_(std::move(rng)), config_(std::move(config)) {
    config_.policy.validate();
    if (config_.own_key_lifetime <= 0) {
        throw std::invalid_argument("own key lifetime must be positive");
    }
    own_keys_.push_back(
        crypto_.generate_keypair(config_.self, now, now + config_.own_key_lifetime, rng_));
    EngineOutput out;
    keystore_event(out, now, "own_key_generated", config_.self,
                   own_keys_.back().public_part.fingerprint);
    startup_events_ = std::move(out.events);
}

Event Engine::make_event(EventType type, Instant now, Json detail) const {
    Event e;
    e.type = type;
    e.at = now;
    e.party = config_.self;
    e.detail = std::move(detail);
    return e;
}

std::string Engine::next_message_id(std::string_view tag) {
    return std::string(tag) + "-" + std::to_string(++message_counter_) + "@" + config_.self;
}

bool Engine::owns_address(const Address& a) const {
    return a == config_.self || std::find(config_.own_side_channels.begin(),
                                          config_.own_side_channels.end(),
                                          a) != config_.own_side_channels.end();
}

std::size_t Engine::held_exchange_mails() const noexcept {
    std::size_t n = 0;
    for (const auto& [peer, v] : held_exchanges_) n += v.size();
    return n;
}

void Engine::register_side_channels(const Address& peer, std::vector<Address> channels) {
    side_channels_[peer] = std::move(channels);
}

void Engine::keystore_event(EngineOutput& out, Instant now, std::string_view change,
                            const Address& peer, const std::string& fingerprint) {
    Json d;
    d["change"] = change;
    d["peer"] = peer;
    if (!fingerprint.empty()) d["fingerprint"] = fingerprint;
    out.events.push_back(make_event(EventType::KeystoreChange, now, std::move(d)));
}

// ---------------------------------------------------------------------------
// Own keys

void Engine::roll_own_keys(Instant now, EngineOutput& out) {
    for (auto it = own_keys_.begin(); it != own_keys_.end();) {
        if (it->public_part.validity_end <= now) {
            keystore_event(out, now, "own_key_retired", config_.self, it->public_part.fingerprint);
            retired_keys_.push_back(std::move(*it));
            it = own_keys_.erase(it);
        } else {
            ++it;
        }
    }
    // Nobody asked for a new key before the old one ran out: renew without a gap.
    while (std::none_of(own_keys_.begin(), own_keys_.end(),
                        [&](const KeyPair& k) { return k.public_part.valid_at(now); })) {
        Instant start = now;
        if (!retired_keys_.empty()) {
            const auto last_end = retired_keys_.back().public_part.validity_end;
            if (last_end <= now && now < last_end + config_.own_key_lifetime) start = last_end;
        }
        own_keys_.push_back(crypto_.generate_keypair(config_.self, start,
                                                     start + config_.own_key_lifetime, rng_));
        keystore_event(out, now, "own_key_generated", config_.self,
                       own_keys_.back().public_part.fingerprint);
    }
}

const KeyPair& Engine::own_keypair(Instant now) {
    EngineOutput ignored;
    roll_own_keys(now, ignored);
    for (const auto& k : own_keys_) {
        if (k.public_part.valid_at(now)) return k;
    }
    throw InvariantViolation("no own key valid at " + std::to_string(now));
}

const Certificate& Engine::own_certificate(Instant now) { return own_keypair(now).public_part; }

void Engine::sign_message(MailMessage& m, Instant now) {
    m.signature.reset();
    m.signature = crypto_.sign(own_keypair(now).private_part, signed_region(m));
}

Bytes Engine::try_decrypt(ByteView ciphertext) const {
    for (const auto* keys : {&own_keys_, &retired_keys_}) {
        for (auto it = keys->rbegin(); it != keys->rend(); ++it) {
            try {
                return crypto_.pk_decrypt(it->private_part, ciphertext);
            } catch (const CryptoError&) {
            }
        }
    }
    throw CryptoError("no own key decrypts this message");
}

bool Engine::verify_from(const Address& sender, const MailMessage& m, bool current_only) const {
    const auto* rec = keystore_.find(sender);
    if (!rec || !m.signature) return false;
    const auto region = signed_region(m);
    if (crypto_.verify(rec->current_cert, region, *m.signature)) return true;
    return !current_only && rec->future_cert &&
           crypto_.verify(*rec->future_cert, region, *m.signature);
}

void Engine::add_inbox(InboxEntry entry) {
    if (inbox_ids_.insert(entry.message_id).second) {
        inbox_.push_back(std::move(entry));
    }
}

ServerCommand Engine::delete_command(const InboundMail& mail) {
    return ServerCommand{ServerCommand::Op::Delete, mail.mailbox, mail.slot, {}};
}

// ---------------------------------------------------------------------------
// Sending

MailMessage Engine::encrypted_user_mail(const UserSendRequest& request, const Certificate& peer,
                                        Instant now) {
    MailMessage m;
    m.message_id = request.message_id;
    m.from = config_.self;
    m.to = request.to;
    m.sent_at = now;
    m.kind = MessageKind::UserMail;
    m.protection = Protection::EncryptedSigned;
    m.subject = texts::secret_subject(request.to);
    m.body = base64_encode(
        crypto_.pk_encrypt(peer, encode_sealed_content({one_line(request.subject), request.body}), rng_));
    sign_message(m, now);
    return m;
}

EngineOutput Engine::send_mail(const UserSendRequest& request, Instant now) {
    EngineOutput out;
    roll_own_keys(now, out);

    auto decision = [&](std::string_view outcome) {
        Json d;
        d["message_id"] = request.message_id;
        d["to"] = request.to;
        d["outcome"] = outcome;
        out.events.push_back(make_event(EventType::UserSend, now, std::move(d)));
    };

    if (request.postcard_override || !config_.policy.encrypt_by_default) {
        MailMessage m;
        m.message_id = request.message_id;
        m.from = config_.self;
        m.to = request.to;
        m.sent_at = now;
        m.kind = MessageKind::Postcard;
        m.protection = Protection::Plain;
        m.subject = one_line(request.subject);
        m.body = request.body;
        decision(request.postcard_override ? "postcard_override" : "postcard_policy");
        out.outgoing.push_back(std::move(m));
        return out;
    }

    if (auto peer = keystore_.lookup_valid_certificate(request.to, now)) {
        decision("encrypted");
        out.outgoing.push_back(encrypted_user_mail(request, *peer, now));
        return out;
    }

    if (deferred_.count(request.to)) {
        // An exchange with this peer is already running; wait for its reply.
        decision("deferred");
        deferred_[request.to].push_back(request);
        return out;
    }

    out.append(initiate_key_exchange(request, now));
    return out;
}

EngineOutput Engine::initiate_key_exchange(const UserSendRequest& original, Instant now) {
    EngineOutput out;
    const auto& peer = original.to;
    std::vector<Address> channels;
    if (config_.policy.side_channels_enabled) {
        if (auto it = side_channels_.find(peer); it != side_channels_.end()) {
            channels = it->second;
        }
    }
    if (!config_.policy.leap_of_faith_enabled && channels.empty()) {
        Json d;
        d["message_id"] = original.message_id;
        d["peer"] = peer;
        d["reason"] = config_.policy.side_channels_enabled
                          ? "leap of faith disabled and no side channel known for peer"
                          : "leap of faith and side channels disabled";
        out.events.push_back(make_event(EventType::PolicyBlock, now, std::move(d)));
        return out;
    }
    if (channels.empty()) channels.push_back(peer);

    const auto secret = crypto_.random_secret(kSecretLength, rng_);
    issued_secrets_.push_back(secret);
    const auto armored = armor_encode(own_certificate(now));
    const auto original_text = render_original(
        {original.message_id, one_line(original.subject), original.body});

    std::vector<MailMessage> mails;
    for (const auto& channel : channels) {
        MailMessage pw;
        pw.message_id = next_message_id("pw");
        pw.from = config_.self;
        pw.to = channel;
        pw.sent_at = now;
        pw.kind = MessageKind::PasswordMail;
        pw.protection = Protection::Plain;
        pw.subject = texts::kPasswordSubject;
        pw.body = std::string(texts::kPasswordMail) + "\n\n" + secret;
        mails.push_back(std::move(pw));
    }

    MailMessage kx;
    kx.message_id = next_message_id("kx");
    kx.from = config_.self;
    kx.to = peer;
    kx.sent_at = now;
    kx.kind = MessageKind::KeyExchangeMail;
    kx.protection = Protection::SymmetricOnly;
    kx.subject = texts::kKeyExchangeSubject;
    kx.body = texts::kKeyExchangeMail;
    const auto doc = build_opaque_document(crypto_, rng_, original_text, armored, secret);
    kx.attachments.push_back({AttachmentKind::OpaqueDocument, encode_opaque_document(doc)});
    kx.attachments.push_back(
        {AttachmentKind::SymmetricEnvelope,
         build_symmetric_envelope(
             crypto_, rng_,
             {std::string(texts::kSymmetricEnvelope), original_text, armored}, secret)});
    mails.push_back(kx);

    keystore_.store_pending_secret(
        {peer, secret, now + config_.policy.leap_of_faith_periode, SecretDirection::Initiator});
    deferred_[peer].push_back(original);

    OutboxTimer timer{kx.message_id, peer, TimerKind::KeyExchange,
                      now + config_.policy.resend_interval, 0, mails};
    timers_[{peer, TimerKind::KeyExchange}] = std::move(timer);

    Json d;
    d["message_id"] = original.message_id;
    d["to"] = peer;
    d["outcome"] = "key_exchange";
    d["password_channels"] = channels;
    d["document_text"] = "opaque_document_notice";
    d["secret_expires_at"] = now + config_.policy.leap_of_faith_periode;
    out.events.push_back(make_event(EventType::UserSend, now, std::move(d)));
    out.outgoing = std::move(mails);
    return out;
}

// ---------------------------------------------------------------------------
// Receiving

EngineOutput Engine::receive(const InboundMail& mail, Instant now) {
    EngineOutput out;
    roll_own_keys(now, out);
    MailMessage m;
    try {
        m = parse_message(mail.raw);
    } catch (const ParseError& e) {
        Json d;
        d["slot"] = mail.slot;
        d["mailbox"] = mail.mailbox;
        d["status"] = "unparseable";
        d["error"] = e.what();
        out.events.push_back(make_event(EventType::MailIn, now, std::move(d)));
        return out;
    }
    switch (m.kind) {
        case MessageKind::PasswordMail: out.append(handle_password_mail(mail, m, now)); break;
        case MessageKind::KeyExchangeMail: out.append(handle_key_exchange_mail(mail, m, now)); break;
        case MessageKind::KeyExchangeReply: out.append(handle_key_exchange_reply(mail, m, now)); break;
        case MessageKind::RekeyRequest: out.append(handle_rekey_request(mail, m, now)); break;
        case MessageKind::RekeyReply: out.append(handle_rekey_reply(mail, m, now)); break;
        case MessageKind::UserMail:
        case MessageKind::Postcard: out.append(handle_user_mail(mail, m, now)); break;
    }
    return out;
}

namespace {

Json mail_in(const MailMessage& m, const InboundMail& mail, std::string_view status) {
    Json d;
    d["message_id"] = m.message_id;
    d["kind"] = to_string(m.kind);
    d["from"] = m.from;
    d["mailbox"] = mail.mailbox;
    d["slot"] = mail.slot;
    d["status"] = status;
    return d;
}

}  // namespace

EngineOutput Engine::handle_password_mail(const InboundMail& mail, const MailMessage& m,
                                          Instant now) {
    EngineOutput out;
    const auto secret = password_from_body(m.body);
    if (!secret) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "malformed_password")));
        return out;
    }
    keystore_.store_pending_secret(
        {m.from, *secret, now + config_.policy.leap_of_faith_periode, SecretDirection::Responder});
    out.commands.push_back(delete_command(mail));
    out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "secret_stored")));
    out.append(process_held_exchanges(m.from, now));
    return out;
}

EngineOutput Engine::process_held_exchanges(const Address& peer, Instant now) {
    EngineOutput out;
    auto it = held_exchanges_.find(peer);
    if (it == held_exchanges_.end()) return out;
    auto held = std::move(it->second);
    held_exchanges_.erase(it);
    for (const auto& mail : held) {
        out.append(handle_key_exchange_mail(mail, parse_message(mail.raw), now));
    }
    return out;
}

EngineOutput Engine::handle_key_exchange_mail(const InboundMail& mail, const MailMessage& m,
                                              Instant now) {
    EngineOutput out;
    const auto* pending = keystore_.peek_pending_secret(m.from, SecretDirection::Responder);

    if (!pending) {
        auto reply_timer = timers_.find({m.from, TimerKind::ExchangeReply});
        if (processed_exchanges_.count(m.message_id) && reply_timer != timers_.end()) {
            // Duplicate of an exchange already answered: the reply was probably
            // lost, so send the cached one again.
            out.outgoing = reply_timer->second.messages;
            out.commands.push_back(delete_command(mail));
            out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "duplicate_reply_resent")));
            return out;
        }
        auto& held = held_exchanges_[m.from];
        if (std::none_of(held.begin(), held.end(),
                         [&](const InboundMail& h) { return h.mailbox == mail.mailbox && h.slot == mail.slot; })) {
            held.push_back(mail);
        }
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "awaiting_password")));
        return out;
    }

    const auto secret = pending->secret;
    const auto* envelope = m.find_attachment(AttachmentKind::SymmetricEnvelope);
    DocumentContents contents;
    Certificate sender_cert;
    OriginalMail original;
    try {
        if (!envelope) throw ParseError("attachment", "no symmetric envelope");
        contents = open_symmetric_envelope(crypto_, envelope->bytes, secret);
        sender_cert = armor_decode(contents.armored_cert);
        if (sender_cert.subject_address != m.from || !sender_cert.valid_at(now)) {
            throw ParseError("certificate", "certificate does not belong to sender or is not valid");
        }
        original = parse_original(contents.original_text);
    } catch (const Error& e) {
        Json d = mail_in(m, mail, "envelope_rejected");
        d["error"] = e.what();
        out.events.push_back(make_event(EventType::MailIn, now, std::move(d)));
        return out;
    }

    keystore_.upsert_certificate(sender_cert, CertSlot::Current);
    keystore_event(out, now, "peer_cert_stored", m.from, sender_cert.fingerprint);
    processed_exchanges_.insert(m.message_id);

    add_inbox({original.message_id, m.from, original.subject, original.body, now, false,
               "key_exchange"});

    // Keep the restored original on the server, readable only with our key.
    MailMessage archived;
    archived.message_id = original.message_id;
    archived.from = m.from;
    archived.to = config_.self;
    archived.sent_at = m.sent_at;
    archived.kind = MessageKind::UserMail;
    archived.protection = Protection::EncryptedSigned;
    archived.subject = texts::secret_subject(config_.self);
    archived.body = base64_encode(crypto_.pk_encrypt(
        own_certificate(now), encode_sealed_content({original.subject, original.body}), rng_));
    sign_message(archived, now);
    out.commands.push_back(
        ServerCommand{ServerCommand::Op::Replace, mail.mailbox, mail.slot, serialize_message(archived)});

    MailMessage reply;
    reply.message_id = next_message_id("kxr");
    reply.from = config_.self;
    reply.to = m.from;
    reply.sent_at = now;
    reply.kind = MessageKind::KeyExchangeReply;
    reply.protection = Protection::SymmetricOnly;
    reply.subject = texts::kKeyExchangeReplySubject;
    reply.body = texts::kKeyExchangeReply;
    reply.attachments.push_back(
        {AttachmentKind::SymmetricEnvelope,
         build_symmetric_envelope(
             crypto_, rng_,
             {std::string(texts::kKeyExchangeReply), "", armor_encode(own_certificate(now))},
             secret)});

    keystore_.take_pending_secret(m.from, SecretDirection::Responder);
    timers_[{m.from, TimerKind::ExchangeReply}] =
        OutboxTimer{reply.message_id, m.from, TimerKind::ExchangeReply,
                    now + config_.policy.resend_interval, 0, {reply}};
    out.outgoing.push_back(std::move(reply));
    out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "exchange_answered")));

    // Other copies of the same exchange mail are now redundant.
    if (auto it = held_exchanges_.find(m.from); it != held_exchanges_.end()) {
        auto& held = it->second;
        for (auto h = held.begin(); h != held.end();) {
            if (h->slot == mail.slot && h->mailbox == mail.mailbox) {
                h = held.erase(h);
            } else if (parse_message(h->raw).message_id == m.message_id) {
                out.commands.push_back(delete_command(*h));
                h = held.erase(h);
            } else {
                ++h;
            }
        }
        if (held.empty()) held_exchanges_.erase(it);
    }
    return out;
}

EngineOutput Engine::release_deferred(const Address& peer, Instant now) {
    EngineOutput out;
    auto it = deferred_.find(peer);
    if (it == deferred_.end()) return out;
    auto cert = keystore_.lookup_valid_certificate(peer, now);
    for (const auto& req : it->second) {
        out.outgoing.push_back(encrypted_user_mail(req, *cert, now));
        Json d;
        d["message_id"] = req.message_id;
        d["to"] = peer;
        d["outcome"] = "released_encrypted";
        out.events.push_back(make_event(EventType::UserSend, now, std::move(d)));
    }
    deferred_.erase(it);
    return out;
}

EngineOutput Engine::handle_key_exchange_reply(const InboundMail& mail, const MailMessage& m,
                                               Instant now) {
    EngineOutput out;
    out.commands.push_back(delete_command(mail));
    const auto* pending = keystore_.peek_pending_secret(m.from, SecretDirection::Initiator);
    if (!pending) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_no_secret")));
        return out;
    }
    Certificate cert;
    try {
        DocumentContents contents;
        if (const auto* env = m.find_attachment(AttachmentKind::SymmetricEnvelope)) {
            contents = open_symmetric_envelope(crypto_, env->bytes, pending->secret);
        } else if (const auto* doc = m.find_attachment(AttachmentKind::OpaqueDocument)) {
            contents = open_opaque_document(crypto_, decode_opaque_document(doc->bytes),
                                            pending->secret);
        } else {
            throw ParseError("attachment", "reply carries no encrypted attachment");
        }
        cert = armor_decode(contents.armored_cert);
        if (cert.subject_address != m.from || !cert.valid_at(now)) {
            throw ParseError("certificate", "certificate does not belong to sender or is not valid");
        }
    } catch (const Error& e) {
        // Keep the secret: the peer may send a good reply later.
        out.commands.clear();
        Json d = mail_in(m, mail, "reply_rejected");
        d["error"] = e.what();
        out.events.push_back(make_event(EventType::MailIn, now, std::move(d)));
        return out;
    }

    keystore_.upsert_certificate(cert, CertSlot::Current);
    keystore_event(out, now, "peer_cert_stored", m.from, cert.fingerprint);
    keystore_.take_pending_secret(m.from, SecretDirection::Initiator);
    timers_.erase({m.from, TimerKind::KeyExchange});
    out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "exchange_completed")));
    out.append(release_deferred(m.from, now));
    return out;
}

EngineOutput Engine::handle_user_mail(const InboundMail& mail, const MailMessage& m, Instant now) {
    EngineOutput out;
    if (m.kind == MessageKind::Postcard || m.protection == Protection::Plain) {
        add_inbox({m.message_id, m.from, m.subject, m.body, now, false, "postcard"});
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "plain_delivered")));
        return out;
    }
    SealedContent inner;
    try {
        inner = decode_sealed_content(try_decrypt(base64_decode(m.body)));
    } catch (const Error& e) {
        Json d = mail_in(m, mail, "undecryptable");
        d["error"] = e.what();
        out.events.push_back(make_event(EventType::MailIn, now, std::move(d)));
        return out;
    }
    keystore_.lookup_valid_certificate(m.from, now);
    const bool verified = verify_from(m.from, m, false);
    add_inbox({m.message_id, m.from, inner.subject, inner.body, now, verified, "direct"});
    if (verified) {
        // Proof that the peer holds our certificate.
        timers_.erase({m.from, TimerKind::ExchangeReply});
    }
    out.events.push_back(make_event(EventType::MailIn, now,
                                    mail_in(m, mail, verified ? "decrypted_verified" : "decrypted_unverified")));
    return out;
}

// ---------------------------------------------------------------------------
// Rekeying

MailMessage Engine::build_rekey_request(const CorrespondentRecord& record, Instant now) {
    MailMessage m;
    m.message_id = next_message_id("rk");
    m.from = config_.self;
    m.to = record.address;
    m.sent_at = now;
    m.kind = MessageKind::RekeyRequest;
    m.protection = Protection::Plain;
    m.subject = texts::kRekeyRequestSubject;
    m.body = texts::rekey_request(record.current_cert.fingerprint);
    m.attachments.push_back(
        {AttachmentKind::ArmoredCertificate, to_bytes(armor_encode(own_certificate(now)))});
    sign_message(m, now);
    return m;
}

EngineOutput Engine::handle_rekey_request(const InboundMail& mail, const MailMessage& m,
                                          Instant now) {
    EngineOutput out;
    out.commands.push_back(delete_command(mail));
    keystore_.lookup_valid_certificate(m.from, now);
    if (!keystore_.find(m.from)) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_unknown_sender")));
        return out;
    }
    if (!verify_from(m.from, m, false)) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_bad_signature")));
        return out;
    }
    const auto& own = own_keypair(now);
    const auto own_end = own.public_part.validity_end;
    if (own_end > now + config_.policy.max_check) {
        const auto fp = keystore_.find(m.from)->current_cert.fingerprint;
        keystore_.erase(m.from);
        keystore_event(out, now, "peer_cert_removed_rekey_check_failed", m.from, fp);
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "rekey_check_failed")));
        return out;
    }

    const KeyPair* next = nullptr;
    for (const auto& k : own_keys_) {
        if (k.public_part.validity_start >= own_end) next = &k;
    }
    if (!next) {
        own_keys_.push_back(crypto_.generate_keypair(config_.self, own_end,
                                                     own_end + config_.own_key_lifetime, rng_));
        next = &own_keys_.back();
        keystore_event(out, now, "own_key_generated", config_.self, next->public_part.fingerprint);
    }
    const auto next_cert = next->public_part;

    auto peer_cert = keystore_.lookup_valid_certificate(m.from, now);
    if (!peer_cert) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_no_valid_peer_cert")));
        return out;
    }
    MailMessage reply;
    reply.message_id = next_message_id("rkr");
    reply.from = config_.self;
    reply.to = m.from;
    reply.sent_at = now;
    reply.kind = MessageKind::RekeyReply;
    reply.protection = Protection::EncryptedSigned;
    reply.subject = texts::kRekeyReplySubject;
    reply.body = base64_encode(
        crypto_.pk_encrypt(*peer_cert, encode_sealed_content({reply.subject, std::string(texts::kRekeyReply)}), rng_));
    reply.attachments.push_back(
        {AttachmentKind::ArmoredCertificate, to_bytes(armor_encode(next_cert))});
    sign_message(reply, now);
    out.outgoing.push_back(std::move(reply));
    out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "rekey_answered")));
    return out;
}

EngineOutput Engine::handle_rekey_reply(const InboundMail& mail, const MailMessage& m,
                                        Instant now) {
    EngineOutput out;
    out.commands.push_back(delete_command(mail));
    keystore_.lookup_valid_certificate(m.from, now);
    const auto* rec = keystore_.find(m.from);
    if (!rec) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_unknown_sender")));
        return out;
    }
    // Must be signed with the key we already hold.
    if (!verify_from(m.from, m, true)) {
        out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "ignored_bad_signature")));
        return out;
    }
    Certificate cert;
    try {
        try_decrypt(base64_decode(m.body));
        const auto* att = m.find_attachment(AttachmentKind::ArmoredCertificate);
        if (!att) throw ParseError("attachment", "no certificate attached");
        cert = armor_decode(to_string(att->bytes));
        if (cert.subject_address != m.from) throw ParseError("certificate", "subject mismatch");
        if (cert.validity_end <= rec->current_cert.validity_end) {
            throw ParseError("certificate", "new key does not extend coverage");
        }
    } catch (const Error& e) {
        Json d = mail_in(m, mail, "rekey_reply_rejected");
        d["error"] = e.what();
        out.events.push_back(make_event(EventType::MailIn, now, std::move(d)));
        return out;
    }
    keystore_.upsert_certificate(cert, CertSlot::Future);
    keystore_event(out, now, "peer_future_cert_stored", m.from, cert.fingerprint);
    timers_.erase({m.from, TimerKind::RekeyRequest});
    out.events.push_back(make_event(EventType::MailIn, now, mail_in(m, mail, "rekey_completed")));
    return out;
}

// ---------------------------------------------------------------------------
// Timers

EngineOutput Engine::on_clock_tick(Instant now) {
    EngineOutput out;
    roll_own_keys(now, out);

    for (const auto& peer : keystore_.remove_expired(now)) {
        keystore_event(out, now, "peer_cert_expired", peer, "");
        if (timers_.erase({peer, TimerKind::RekeyRequest})) {
            Json d;
            d["peer"] = peer;
            d["process"] = "rekeying";
            d["reason"] = "no valid reply before the key expired";
            out.events.push_back(make_event(EventType::PermanentFailure, now, std::move(d)));
        }
    }

    for (const auto& s : keystore_.purge_expired_secrets(now)) {
        if (s.direction == SecretDirection::Responder) {
            Json d;
            d["change"] = "responder_secret_expired";
            d["peer"] = s.peer;
            out.events.push_back(make_event(EventType::KeystoreChange, now, std::move(d)));
            continue;
        }
        Json d;
        d["peer"] = s.peer;
        d["process"] = "key_exchange";
        d["reason"] = "no reply before the exchange secret expired";
        Json dropped = Json::array();
        if (auto it = deferred_.find(s.peer); it != deferred_.end()) {
            for (const auto& r : it->second) dropped.push_back(r.message_id);
            deferred_.erase(it);
        }
        d["dropped_messages"] = std::move(dropped);
        timers_.erase({s.peer, TimerKind::KeyExchange});
        out.events.push_back(make_event(EventType::PermanentFailure, now, std::move(d)));
    }

    for (const auto& rec : keystore_.expiring_within(now, config_.policy.max_check)) {
        if (timers_.count({rec.address, TimerKind::RekeyRequest})) continue;
        auto req = build_rekey_request(rec, now);
        timers_[{rec.address, TimerKind::RekeyRequest}] =
            OutboxTimer{req.message_id, rec.address, TimerKind::RekeyRequest,
                        now + config_.policy.resend_interval, 0, {req}};
        out.outgoing.push_back(std::move(req));
    }

    for (auto it = timers_.begin(); it != timers_.end();) {
        auto& t = it->second;
        if (now < t.next_resend_at || t.resend_count >= config_.policy.max_resends) {
            ++it;
            continue;
        }
        ++t.resend_count;
        t.next_resend_at = now + config_.policy.resend_interval;
        out.outgoing.insert(out.outgoing.end(), t.messages.begin(), t.messages.end());
        if (t.kind == TimerKind::KeyExchange) {
            if (auto* s = keystore_.peek_pending_secret(t.peer, SecretDirection::Initiator)) {
                auto refreshed = *s;
                refreshed.expires_at = now + config_.policy.leap_of_faith_periode;
                keystore_.store_pending_secret(std::move(refreshed));
            }
        }
        if (t.kind == TimerKind::ExchangeReply && t.resend_count >= config_.policy.max_resends) {
            it = timers_.erase(it);
        } else {
            ++it;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> Engine::check_invariants(Instant now) const {
    std::vector<std::string> problems;
    const auto valid_own = std::count_if(own_keys_.begin(), own_keys_.end(), [&](const KeyPair& k) {
        return k.public_part.valid_at(now);
    });
    if (valid_own != 1) {
        problems.push_back(config_.self + ": " + std::to_string(valid_own) + " own keys valid at " +
                           std::to_string(now));
    }
    for (const auto& [peer, reqs] : deferred_) {
        if (!keystore_.peek_pending_secret(peer, SecretDirection::Initiator)) {
            problems.push_back(config_.self + ": deferred mail for " + peer + " without secret");
        }
    }
    for (const auto& s : keystore_.pending_secrets()) {
        if (s.direction == SecretDirection::Initiator && !deferred_.count(s.peer)) {
            problems.push_back(config_.self + ": initiator secret for " + s.peer + " without deferred mail");
        }
        if (s.secret.size() < kMinSecretLength) {
            problems.push_back(config_.self + ": short secret for " + s.peer);
        }
    }
    for (const auto& [key, t] : timers_) {
        if (t.resend_count > config_.policy.max_resends) {
            problems.push_back(config_.self + ": timer " + t.message_id + " exceeded max_resends");
        }
    }
    for (const auto& [addr, rec] : keystore_.records()) {
        if (rec.current_cert.subject_address != addr || !fingerprint_matches(rec.current_cert)) {
            problems.push_back(config_.self + ": bad current cert for " + addr);
        }
        if (rec.future_cert && (!fingerprint_matches(*rec.future_cert) ||
                                rec.future_cert->validity_end <= rec.current_cert.validity_end)) {
            problems.push_back(config_.self + ": bad future cert for " + addr);
        }
    }
    return problems;
}

}  // namespace autokey

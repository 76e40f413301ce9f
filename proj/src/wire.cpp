#include "autokey/wire.hpp"

#include "autokey/byte_codec.hpp"
#include "autokey/texts.hpp"

namespace autokey {

namespace {

constexpr std::string_view kMessageMagic = "AKM1";

bool known_kind(std::uint8_t v) { return v >= 1 && v <= 7; }
bool known_protection(std::uint8_t v) { return v >= 1 && v <= 3; }
bool known_attachment(std::uint8_t v) { return v >= 1 && v <= 3; }

Bytes encode(const MailMessage& m, bool with_signature) {
    ByteWriter w;
    w.raw(to_bytes(kMessageMagic));
    w.u8(static_cast<std::uint8_t>(m.kind));
    w.u8(static_cast<std::uint8_t>(m.protection));
    w.str(m.message_id);
    w.str(m.from);
    w.str(m.to);
    w.i64(m.sent_at);
    w.str(m.subject);
    w.str(m.body);
    w.u32(static_cast<std::uint32_t>(m.attachments.size()));
    for (const auto& a : m.attachments) {
        w.u8(static_cast<std::uint8_t>(a.kind));
        w.blob(a.bytes);
    }
    if (with_signature && m.signature) {
        w.u8(1);
        w.blob(*m.signature);
    } else {
        w.u8(0);
    }
    return w.take();
}

}  // namespace

std::string_view to_string(MessageKind k) {
    switch (k) {
        case MessageKind::UserMail: return "UserMail";
        case MessageKind::PasswordMail: return "PasswordMail";
        case MessageKind::KeyExchangeMail: return "KeyExchangeMail";
        case MessageKind::KeyExchangeReply: return "KeyExchangeReply";
        case MessageKind::RekeyRequest: return "RekeyRequest";
        case MessageKind::RekeyReply: return "RekeyReply";
        case MessageKind::Postcard: return "Postcard";
    }
    return "?";
}

std::string_view to_string(Protection p) {
    switch (p) {
        case Protection::EncryptedSigned: return "EncryptedSigned";
        case Protection::SymmetricOnly: return "SymmetricOnly";
        case Protection::Plain: return "Plain";
    }
    return "?";
}

std::string_view to_string(AttachmentKind k) {
    switch (k) {
        case AttachmentKind::ArmoredCertificate: return "ArmoredCertificate";
        case AttachmentKind::OpaqueDocument: return "OpaqueDocument";
        case AttachmentKind::SymmetricEnvelope: return "SymmetricEnvelope";
    }
    return "?";
}

const Attachment* MailMessage::find_attachment(AttachmentKind k) const {
    for (const auto& a : attachments) {
        if (a.kind == k) return &a;
    }
    return nullptr;
}

void validate_message(const MailMessage& m) {
    auto fail = [](const std::string& why) { throw std::invalid_argument(why); };
    switch (m.kind) {
        case MessageKind::PasswordMail:
            if (m.protection != Protection::Plain) fail("PasswordMail must be Plain");
            if (!m.attachments.empty()) fail("PasswordMail carries no attachments");
            break;
        case MessageKind::KeyExchangeMail:
            if (m.protection != Protection::SymmetricOnly) {
                fail("KeyExchangeMail secrets travel only in symmetric attachments");
            }
            if (!m.find_attachment(AttachmentKind::OpaqueDocument) ||
                !m.find_attachment(AttachmentKind::SymmetricEnvelope)) {
                fail("KeyExchangeMail needs an opaque document and a symmetric envelope");
            }
            break;
        case MessageKind::KeyExchangeReply:
            if (m.protection != Protection::SymmetricOnly) fail("KeyExchangeReply must be SymmetricOnly");
            if (!m.find_attachment(AttachmentKind::OpaqueDocument) &&
                !m.find_attachment(AttachmentKind::SymmetricEnvelope)) {
                fail("KeyExchangeReply needs an encrypted attachment");
            }
            break;
        case MessageKind::RekeyReply:
            if (m.protection != Protection::EncryptedSigned) fail("RekeyReply must be EncryptedSigned");
            break;
        case MessageKind::Postcard:
            if (m.protection != Protection::Plain) fail("Postcard must be Plain");
            if (!m.attachments.empty()) fail("Postcard carries no attachments");
            break;
        case MessageKind::UserMail:
        case MessageKind::RekeyRequest:
            break;
    }
    if (m.protection == Protection::EncryptedSigned && !m.signature) {
        fail("EncryptedSigned message without signature");
    }
    for (const auto& a : m.attachments) {
        if (a.kind == AttachmentKind::ArmoredCertificate) {
            armor_decode(to_string(a.bytes));
        }
    }
}

Bytes serialize_message(const MailMessage& m) {
    validate_message(m);
    return encode(m, true);
}

Bytes signed_region(const MailMessage& m) { return encode(m, false); }

MailMessage parse_message(ByteView bytes) {
    ByteReader r(bytes, "message");
    if (r.raw(kMessageMagic.size(), "magic") != to_bytes(kMessageMagic)) {
        throw ParseError("message.magic", "not an autokey message");
    }
    MailMessage m;
    const auto kind = r.u8("kind");
    if (!known_kind(kind)) throw ParseError("message.kind", "unknown kind tag " + std::to_string(kind));
    m.kind = static_cast<MessageKind>(kind);
    const auto prot = r.u8("protection");
    if (!known_protection(prot)) {
        throw ParseError("message.protection", "unknown protection tag " + std::to_string(prot));
    }
    m.protection = static_cast<Protection>(prot);
    m.message_id = r.str("message_id");
    m.from = r.str("from");
    m.to = r.str("to");
    m.sent_at = r.i64("sent_at");
    m.subject = r.str("subject");
    m.body = r.str("body");
    const auto n = r.u32("attachments");
    if (n > bytes.size()) throw ParseError("message.attachments", "implausible count");
    for (std::uint32_t i = 0; i < n; ++i) {
        const auto k = r.u8("attachment.kind");
        if (!known_attachment(k)) {
            throw ParseError("message.attachment.kind", "unknown attachment tag " + std::to_string(k));
        }
        m.attachments.push_back({static_cast<AttachmentKind>(k), r.blob("attachment.bytes")});
    }
    const auto has_sig = r.u8("signature_flag");
    if (has_sig > 1) throw ParseError("message.signature_flag", "flag must be 0 or 1");
    if (has_sig == 1) m.signature = r.blob("signature");
    r.expect_end();
    try {
        validate_message(m);
    } catch (const ParseError& e) {
        throw ParseError("message.attachment", e.what());
    } catch (const std::invalid_argument& e) {
        throw ParseError("message.protection", e.what());
    }
    return m;
}

std::string render_original(const OriginalMail& m) {
    return "Message-Id: " + m.message_id + "\nSubject: " + m.subject + "\n\n" + m.body;
}

OriginalMail parse_original(std::string_view text) {
    OriginalMail m;
    auto take_line = [&](std::string_view prefix, std::string& out) {
        if (text.substr(0, prefix.size()) != prefix) {
            throw ParseError("original", "expected '" + std::string(prefix) + "'");
        }
        const auto nl = text.find('\n');
        if (nl == std::string_view::npos) throw ParseError("original", "truncated header");
        out = std::string(text.substr(prefix.size(), nl - prefix.size()));
        text.remove_prefix(nl + 1);
    };
    take_line("Message-Id: ", m.message_id);
    take_line("Subject: ", m.subject);
    if (text.substr(0, 1) != "\n") throw ParseError("original", "missing blank line");
    text.remove_prefix(1);
    m.body = std::string(text);
    return m;
}

Bytes encode_sealed_content(const SealedContent& c) {
    ByteWriter w;
    w.str(c.subject);
    w.str(c.body);
    return w.take();
}

SealedContent decode_sealed_content(ByteView bytes) {
    ByteReader r(bytes, "sealed");
    SealedContent c;
    c.subject = r.str("subject");
    c.body = r.str("body");
    r.expect_end();
    return c;
}

std::optional<std::string> password_from_body(std::string_view body) {
    if (body.substr(0, texts::kPasswordMail.size()) != texts::kPasswordMail) {
        return std::nullopt;
    }
    const auto nl = body.rfind('\n');
    if (nl == std::string_view::npos) return std::nullopt;
    auto secret = body.substr(nl + 1);
    if (secret.size() < kMinSecretLength ||
        secret.find_first_not_of(kSecretAlphabet) != std::string_view::npos) {
        return std::nullopt;
    }
    return std::string(secret);
}

}  // namespace autokey

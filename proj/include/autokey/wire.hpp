#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "autokey/crypto_provider.hpp"

namespace autokey {

enum class MessageKind : std::uint8_t {
    UserMail = 1,
    PasswordMail = 2,
    KeyExchangeMail = 3,
    KeyExchangeReply = 4,
    RekeyRequest = 5,
    RekeyReply = 6,
    Postcard = 7,
};

enum class Protection : std::uint8_t {
    EncryptedSigned = 1,
    SymmetricOnly = 2,
    Plain = 3,
};

enum class AttachmentKind : std::uint8_t {
    ArmoredCertificate = 1,
    OpaqueDocument = 2,
    SymmetricEnvelope = 3,
};

std::string_view to_string(MessageKind k);
std::string_view to_string(Protection p);
std::string_view to_string(AttachmentKind k);

struct Attachment {
    AttachmentKind kind = AttachmentKind::ArmoredCertificate;
    Bytes bytes;

    friend bool operator==(const Attachment&, const Attachment&) = default;
};

struct MailMessage {
    std::string message_id;
    Address from;
    Address to;
    Instant sent_at = 0;
    MessageKind kind = MessageKind::UserMail;
    Protection protection = Protection::Plain;
    std::string subject;
    std::string body;
    std::vector<Attachment> attachments;
    std::optional<Bytes> signature;

    const Attachment* find_attachment(AttachmentKind k) const;

    friend bool operator==(const MailMessage&, const MailMessage&) = default;
};

// Throws std::invalid_argument naming the broken rule.
void validate_message(const MailMessage& m);

// Canonical encoding; see docs/wire-format.md.
Bytes serialize_message(const MailMessage& m);
// Throws ParseError naming the offending field.
MailMessage parse_message(ByteView bytes);
// Bytes covered by the signature: the encoding with the signature absent.
Bytes signed_region(const MailMessage& m);

constexpr std::array<std::uint8_t, 8> kOpaqueMagic = {'S', 'E', 'C', 'D', 'O', 'C', '0', '1'};
constexpr std::size_t kOpaqueSaltBytes = 16;

/// Password-protected container handed to receivers without an engine.
struct OpaqueDocument {
    std::array<std::uint8_t, 8> magic = kOpaqueMagic;
    Bytes kdf_salt;
    Bytes ciphertext;

    friend bool operator==(const OpaqueDocument&, const OpaqueDocument&) = default;
};

Bytes encode_opaque_document(const OpaqueDocument& doc);
OpaqueDocument decode_opaque_document(ByteView bytes);

// Clear-text layout shared by the opaque document and the symmetric
// envelope: explaining text, blank line, original text, blank line, armor.
struct DocumentContents {
    std::string explaining_text;
    std::string original_text;
    std::string armored_cert;

    friend bool operator==(const DocumentContents&, const DocumentContents&) = default;
};

std::string compose_document_text(const DocumentContents& c);
// Throws ParseError when the armor markers are missing.
DocumentContents split_document_text(std::string_view text);

// Throws std::invalid_argument for a password shorter than 20 characters.
OpaqueDocument build_opaque_document(const CryptoProvider& crypto, Rng& rng,
                                     std::string_view original_text,
                                     std::string_view armored_cert, std::string_view password,
                                     std::string_view explaining_text = {});
// Throws CryptoError on a wrong password or tampering, ParseError on a
// structurally broken payload.
DocumentContents open_opaque_document(const CryptoProvider& crypto, const OpaqueDocument& doc,
                                      std::string_view password);

Bytes build_symmetric_envelope(const CryptoProvider& crypto, Rng& rng,
                               const DocumentContents& contents, std::string_view password);
DocumentContents open_symmetric_envelope(const CryptoProvider& crypto, ByteView envelope,
                                         std::string_view password);

// The original user mail as it travels inside exchange containers.
struct OriginalMail {
    std::string message_id;
    std::string subject;
    std::string body;

    friend bool operator==(const OriginalMail&, const OriginalMail&) = default;
};

std::string render_original(const OriginalMail& m);
OriginalMail parse_original(std::string_view text);

// Clear text sealed inside an EncryptedSigned body.
struct SealedContent {
    std::string subject;
    std::string body;
};

Bytes encode_sealed_content(const SealedContent& c);
SealedContent decode_sealed_content(ByteView bytes);

// Secret on the last line of a PasswordMail body, if well formed.
std::optional<std::string> password_from_body(std::string_view body);

}  // namespace autokey

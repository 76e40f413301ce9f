#pragma once

#include <string>
#include <string_view>

namespace autokey::texts {

// Human-facing protocol texts. Receivers without an engine rely on these to
// complete an exchange by hand, so they are fixed byte for byte.

constexpr std::string_view kPasswordMail =
    "There will be an encrypted email for you in the near future. Please use this password to "
    "decrypt the email.";

constexpr std::string_view kOpaqueDocument =
    "The sender of this message wants to exchange a public key with you. Please reply with a "
    "public key in an ASCII armor in an encrypted PDF using the same password as this PDF.";

constexpr std::string_view kSymmetricEnvelope =
    "The sender of this message wants to exchange a public key with you. Please reply with a "
    "public key in an ASCII armor, encrypted with the same password as this message.";

constexpr std::string_view kKeyExchangeMail =
    "This message contains an encrypted email and an encrypted PDF. A password for these files "
    "was sent to you before.";

constexpr std::string_view kKeyExchangeReply =
    "This message contains my public key in an ASCII armor, encrypted with the password you "
    "sent me before.";

constexpr std::string_view kRekeyReply =
    "The attached certificate holds my new public key. It takes over when my current key "
    "expires.";

constexpr std::string_view kRekeyRequestPrefix = "Your public key with the fingerprint ";
constexpr std::string_view kRekeyRequestSuffix =
    " is about to expire. Please send a new key. Please send the mail by replying to this mail "
    "and attaching a certificate with the new key.";

inline std::string rekey_request(std::string_view fingerprint) {
    std::string out(kRekeyRequestPrefix);
    out.append(fingerprint).append(kRekeyRequestSuffix);
    return out;
}

// Subject line shown for protected mail ("secret message for xy").
inline std::string secret_subject(std::string_view to) {
    return "Secret message for " + std::string(to);
}

constexpr std::string_view kPasswordSubject = "Password for a secret message";
constexpr std::string_view kKeyExchangeSubject = "A secret message is waiting for you";
constexpr std::string_view kKeyExchangeReplySubject = "My public key";
constexpr std::string_view kRekeyRequestSubject = "Please send a new key";
constexpr std::string_view kRekeyReplySubject = "My new public key";

}  // namespace autokey::texts

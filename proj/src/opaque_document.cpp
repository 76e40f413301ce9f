#include "autokey/byte_codec.hpp"
#include "autokey/texts.hpp"
#include "autokey/wire.hpp"

namespace autokey {

namespace {

constexpr std::string_view kSeparator = "\n\n";

void check_password(std::string_view password) {
    if (password.size() < kMinSecretLength) {
        throw std::invalid_argument("document password must be at least 20 characters");
    }
}

}  // namespace

Bytes encode_opaque_document(const OpaqueDocument& doc) {
    ByteWriter w;
    w.raw(doc.magic);
    w.blob(doc.kdf_salt);
    w.blob(doc.ciphertext);
    return w.take();
}

OpaqueDocument decode_opaque_document(ByteView bytes) {
    ByteReader r(bytes, "opaque_document");
    OpaqueDocument doc;
    const auto magic = r.raw(doc.magic.size(), "magic");
    if (!std::equal(magic.begin(), magic.end(), kOpaqueMagic.begin())) {
        throw ParseError("opaque_document.magic", "not a SECDOC01 container");
    }
    doc.kdf_salt = r.blob("kdf_salt");
    doc.ciphertext = r.blob("ciphertext");
    r.expect_end();
    return doc;
}

std::string compose_document_text(const DocumentContents& c) {
    std::string out = c.explaining_text;
    out.append(kSeparator);
    if (!c.original_text.empty()) {
        out.append(c.original_text).append(kSeparator);
    }
    out.append(c.armored_cert);
    return out;
}

DocumentContents split_document_text(std::string_view text) {
    const auto armor = text.rfind(kArmorBegin);
    if (armor == std::string_view::npos || text.find(kArmorEnd, armor) == std::string_view::npos) {
        throw ParseError("document.armor", "no armored certificate in document");
    }
    DocumentContents c;
    c.armored_cert = std::string(text.substr(armor));
    auto head = text.substr(0, armor);
    const auto sep = head.find(kSeparator);
    if (sep == std::string_view::npos) {
        c.explaining_text = std::string(head);
        return c;
    }
    c.explaining_text = std::string(head.substr(0, sep));
    head.remove_prefix(sep + kSeparator.size());
    if (head.size() >= kSeparator.size() && head.substr(head.size() - kSeparator.size()) == kSeparator) {
        head.remove_suffix(kSeparator.size());
    }
    c.original_text = std::string(head);
    return c;
}

OpaqueDocument build_opaque_document(const CryptoProvider& crypto, Rng& rng,
                                     std::string_view original_text,
                                     std::string_view armored_cert, std::string_view password,
                                     std::string_view explaining_text) {
    check_password(password);
    OpaqueDocument doc;
    doc.kdf_salt = rng.bytes(kOpaqueSaltBytes);
    const auto key = crypto.derive_key(password, doc.kdf_salt);
    const DocumentContents contents{
        std::string(explaining_text.empty() ? texts::kOpaqueDocument : explaining_text),
        std::string(original_text), std::string(armored_cert)};
    doc.ciphertext = crypto.sym_encrypt(key, to_bytes(compose_document_text(contents)), rng);
    return doc;
}

DocumentContents open_opaque_document(const CryptoProvider& crypto, const OpaqueDocument& doc,
                                      std::string_view password) {
    if (doc.magic != kOpaqueMagic) {
        throw ParseError("opaque_document.magic", "not a SECDOC01 container");
    }
    if (password.empty()) {
        throw CryptoError("empty document password");
    }
    const auto key = crypto.derive_key(password, doc.kdf_salt);
    const auto plain = crypto.sym_decrypt(key, doc.ciphertext);
    return split_document_text(to_string(plain));
}

Bytes build_symmetric_envelope(const CryptoProvider& crypto, Rng& rng,
                               const DocumentContents& contents, std::string_view password) {
    check_password(password);
    return crypto.sym_encrypt(crypto.string_to_key(password),
                              to_bytes(compose_document_text(contents)), rng);
}

DocumentContents open_symmetric_envelope(const CryptoProvider& crypto, ByteView envelope,
                                         std::string_view password) {
    if (password.empty()) {
        throw CryptoError("empty envelope password");
    }
    const auto plain = crypto.sym_decrypt(crypto.string_to_key(password), envelope);
    return split_document_text(to_string(plain));
}

}  // namespace autokey

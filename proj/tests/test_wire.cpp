#include <doctest.h>

#include "autokey/texts.hpp"
#include "autokey/wire.hpp"
#include "support.hpp"

using namespace autokey;
using autokey::testing::from_hex;
using autokey::testing::provider;

namespace {

// Reference encodings from tests/oracle/crypto_vectors.py.
constexpr std::string_view kPostcardHex =
    "414b4d310703000000026d310000000361407800000003624079000000000000003c00000002486900000005"
    "48656c6c6f0000000000";
constexpr std::string_view kSignedRegionHex =
    "414b4d310101000000026d320000000361407800000003624079fffffffffffffffb0000000173000000016200"
    "0000010200000002010200";

constexpr std::string_view kPassword = "Zq8wK2mN4pR7tV1xY3bD5fH6";

MailMessage postcard() {
    MailMessage m;
    m.message_id = "m1";
    m.from = "a@x";
    m.to = "b@y";
    m.sent_at = 60;
    m.kind = MessageKind::Postcard;
    m.protection = Protection::Plain;
    m.subject = "Hi";
    m.body = "Hello";
    return m;
}

std::string random_text(Rng& rng, std::size_t max_len) {
    std::string s(rng.below(max_len + 1), ' ');
    for (auto& c : s) c = static_cast<char>(rng.below(256));
    return s;
}

std::string armored(Rng& rng) {
    const auto kp = provider().generate_keypair("p@x", 0, 1000, rng);
    return armor_encode(kp.public_part);
}

MailMessage random_message(Rng& rng) {
    MailMessage m;
    m.message_id = random_text(rng, 20);
    m.from = random_text(rng, 30);
    m.to = random_text(rng, 30);
    m.sent_at = static_cast<Instant>(rng.next_u64());
    m.subject = random_text(rng, 40);
    m.body = random_text(rng, 200);
    auto blob = [&] { return rng.bytes(rng.below(100)); };
    switch (rng.below(7)) {
        case 0:
            m.kind = MessageKind::UserMail;
            m.protection = Protection::EncryptedSigned;
            m.signature = rng.bytes(64);
            break;
        case 1:
            m.kind = MessageKind::PasswordMail;
            m.protection = Protection::Plain;
            break;
        case 2:
            m.kind = MessageKind::KeyExchangeMail;
            m.protection = Protection::SymmetricOnly;
            m.attachments = {{AttachmentKind::OpaqueDocument, blob()}, {AttachmentKind::SymmetricEnvelope, blob()}};
            break;
        case 3:
            m.kind = MessageKind::KeyExchangeReply;
            m.protection = Protection::SymmetricOnly;
            m.attachments = {{AttachmentKind::SymmetricEnvelope, blob()}};
            break;
        case 4:
            m.kind = MessageKind::RekeyRequest;
            m.protection = Protection::Plain;
            m.attachments = {{AttachmentKind::ArmoredCertificate, to_bytes(armored(rng))}};
            m.signature = rng.bytes(64);
            break;
        case 5:
            m.kind = MessageKind::RekeyReply;
            m.protection = Protection::EncryptedSigned;
            m.attachments = {{AttachmentKind::ArmoredCertificate, to_bytes(armored(rng))}};
            m.signature = rng.bytes(64);
            break;
        default:
            m.kind = MessageKind::Postcard;
            m.protection = Protection::Plain;
            break;
    }
    return m;
}

}  // namespace

TEST_SUITE("message codec") {
    TEST_CASE("encoding matches the reference layout") {
        CHECK(to_hex(serialize_message(postcard())) == kPostcardHex);
        CHECK(parse_message(from_hex(kPostcardHex)) == postcard());
    }

    TEST_CASE("signature covers the encoding with the signature flag cleared") {
        MailMessage m;
        m.message_id = "m2";
        m.from = "a@x";
        m.to = "b@y";
        m.sent_at = -5;
        m.kind = MessageKind::UserMail;
        m.protection = Protection::EncryptedSigned;
        m.subject = "s";
        m.body = "b";
        m.attachments = {{AttachmentKind::OpaqueDocument, {1, 2}}};
        m.signature = Bytes(64, 0xaa);
        CHECK(to_hex(signed_region(m)) == kSignedRegionHex);
        const auto full = serialize_message(m);
        CHECK(to_hex(full) == std::string(kSignedRegionHex.substr(0, kSignedRegionHex.size() - 2)) + "01" +
                                  "00000040" + std::string(128, 'a'));
        CHECK(parse_message(full) == m);
    }

    TEST_CASE("randomized roundtrips") {
        Rng rng(11, "wire");
        for (int i = 0; i < 1000; ++i) {
            const auto m = random_message(rng);
            const auto bytes = serialize_message(m);
            REQUIRE(parse_message(bytes) == m);
            REQUIRE(serialize_message(parse_message(bytes)) == bytes);
        }
    }

    TEST_CASE("every truncation is a parse error") {
        Rng rng(12, "truncate");
        for (int round = 0; round < 7; ++round) {
            const auto bytes = serialize_message(random_message(rng));
            for (std::size_t n = 0; n < bytes.size(); ++n) {
                CHECK_THROWS_AS(parse_message(ByteView(bytes).first(n)), ParseError);
            }
        }
    }

    TEST_CASE("single-byte flips either fail to parse or parse canonically") {
        Rng rng(13, "flip");
        for (int round = 0; round < 20; ++round) {
            const auto bytes = serialize_message(random_message(rng));
            for (std::size_t i = 0; i < bytes.size(); ++i) {
                auto bad = bytes;
                bad[i] ^= static_cast<std::uint8_t>(1 + rng.below(255));
                try {
                    const auto m = parse_message(bad);
                    REQUIRE(serialize_message(m) == bad);
                } catch (const ParseError&) {
                }
            }
        }
    }

    TEST_CASE("trailing bytes are rejected") {
        auto bytes = serialize_message(postcard());
        bytes.push_back(0);
        CHECK_THROWS_AS(parse_message(bytes), ParseError);
    }

    TEST_CASE("unknown tags name the field") {
        auto field_of = [](Bytes b) {
            try {
                parse_message(b);
            } catch (const ParseError& e) {
                return e.field();
            }
            return std::string("accepted");
        };
        auto bytes = serialize_message(postcard());
        auto bad = bytes;
        bad[4] = 9;
        CHECK(field_of(bad) == "message.kind");
        bad = bytes;
        bad[5] = 0;
        CHECK(field_of(bad) == "message.protection");
        bad = bytes;
        bad[0] = 'X';
        CHECK(field_of(bad) == "message.magic");
        bad = bytes;
        bad.back() = 2;
        CHECK(field_of(bad) == "message.signature_flag");
    }

    TEST_CASE("protection rules per kind") {
        auto m = postcard();
        m.protection = Protection::EncryptedSigned;
        m.signature = Bytes(64);
        CHECK_THROWS_AS(serialize_message(m), std::invalid_argument);

        MailMessage pw = postcard();
        pw.kind = MessageKind::PasswordMail;
        pw.attachments = {{AttachmentKind::OpaqueDocument, {1}}};
        CHECK_THROWS_AS(serialize_message(pw), std::invalid_argument);

        MailMessage kx = postcard();
        kx.kind = MessageKind::KeyExchangeMail;
        kx.protection = Protection::Plain;
        kx.attachments = {{AttachmentKind::OpaqueDocument, {1}}, {AttachmentKind::SymmetricEnvelope, {2}}};
        CHECK_THROWS_AS(serialize_message(kx), std::invalid_argument);
        kx.protection = Protection::SymmetricOnly;
        kx.attachments.pop_back();
        CHECK_THROWS_AS(serialize_message(kx), std::invalid_argument);

        MailMessage um = postcard();
        um.kind = MessageKind::UserMail;
        um.protection = Protection::EncryptedSigned;
        CHECK_THROWS_AS(serialize_message(um), std::invalid_argument);

        MailMessage rk = postcard();
        rk.kind = MessageKind::RekeyRequest;
        rk.attachments = {{AttachmentKind::ArmoredCertificate, to_bytes("not armor")}};
        CHECK_THROWS_AS(serialize_message(rk), ParseError);
    }
}

TEST_SUITE("exchange containers") {
    TEST_CASE("opaque document roundtrip with the default explaining text") {
        Rng rng(14, "doc");
        const auto armor = armored(rng);
        const auto original = render_original({"user-1@a", "Lunch", "Noon?\n\nBring an umbrella."});
        const auto doc = build_opaque_document(provider(), rng, original, armor, kPassword);
        const auto decoded = decode_opaque_document(encode_opaque_document(doc));
        CHECK(decoded == doc);
        const auto contents = open_opaque_document(provider(), decoded, kPassword);
        CHECK(contents.explaining_text == texts::kOpaqueDocument);
        CHECK(contents.original_text == original);
        CHECK(contents.armored_cert == armor);
        CHECK(parse_original(contents.original_text).body == "Noon?\n\nBring an umbrella.");
    }

    TEST_CASE("opaque document rejects wrong passwords and short passwords") {
        Rng rng(15, "doc");
        const auto doc = build_opaque_document(provider(), rng, "", armored(rng), kPassword);
        CHECK_THROWS_AS(open_opaque_document(provider(), doc, "Zq8wK2mN4pR7tV1xY3bD5fH7"), CryptoError);
        CHECK_THROWS_AS(open_opaque_document(provider(), doc, ""), CryptoError);
        CHECK_THROWS_AS(build_opaque_document(provider(), rng, "", armored(rng), "too-short"),
                        std::invalid_argument);
    }

    TEST_CASE("opaque document container tampering") {
        Rng rng(16, "doc");
        const auto bytes = encode_opaque_document(build_opaque_document(provider(), rng, "x", armored(rng), kPassword));
        for (std::size_t i = 0; i < bytes.size(); ++i) {
            auto bad = bytes;
            bad[i] ^= 0x10;
            try {
                const auto doc = decode_opaque_document(bad);
                CHECK_THROWS(open_opaque_document(provider(), doc, kPassword));
            } catch (const ParseError&) {
            }
        }
    }

    TEST_CASE("symmetric envelope roundtrip") {
        Rng rng(17, "env");
        const DocumentContents c{std::string(texts::kSymmetricEnvelope), "", armored(rng)};
        const auto env = build_symmetric_envelope(provider(), rng, c, kPassword);
        CHECK(open_symmetric_envelope(provider(), env, kPassword) == c);
        CHECK_THROWS_AS(open_symmetric_envelope(provider(), env, "Zq8wK2mN4pR7tV1xY3bD5fH7"), CryptoError);
    }

    TEST_CASE("document text layout") {
        const DocumentContents c{"Explain.", "Message-Id: m\nSubject: s\n\nbody", "-----BEGIN CERTIFICATE-----\nAA\n-----END CERTIFICATE-----\n"};
        const auto text = compose_document_text(c);
        CHECK(text == c.explaining_text + "\n\n" + c.original_text + "\n\n" + c.armored_cert);
        CHECK(split_document_text(text) == c);
        CHECK_THROWS_AS(split_document_text("no certificate"), ParseError);
    }

    TEST_CASE("a quoted armor inside the original text does not confuse the split") {
        const std::string quoted = "-----BEGIN CERTIFICATE-----\nQQ==\n-----END CERTIFICATE-----\n";
        const DocumentContents c{"Explain.", "Message-Id: m\nSubject: s\n\n" + quoted, quoted};
        CHECK(split_document_text(compose_document_text(c)) == c);
    }

    TEST_CASE("original mail rendering") {
        const OriginalMail m{"id-1", "Subject", "line one\nline two"};
        CHECK(render_original(m) == "Message-Id: id-1\nSubject: Subject\n\nline one\nline two");
        CHECK(parse_original(render_original(m)) == m);
        CHECK_THROWS_AS(parse_original("Subject: x\n\n"), ParseError);
    }

    TEST_CASE("password extraction") {
        const auto body = std::string(texts::kPasswordMail) + "\n\n" + std::string(kPassword);
        CHECK(password_from_body(body) == std::string(kPassword));
        CHECK_FALSE(password_from_body("Hello\n\n" + std::string(kPassword)));
        CHECK_FALSE(password_from_body(std::string(texts::kPasswordMail) + "\n\nshort"));
        CHECK_FALSE(password_from_body(std::string(texts::kPasswordMail) + "\n\nhas space in it 12345678"));
    }
}

TEST_CASE("protocol texts are fixed byte for byte") {
    CHECK(texts::kPasswordMail ==
          "There will be an encrypted email for you in the near future. Please use this password to "
          "decrypt the email.");
    CHECK(texts::kOpaqueDocument ==
          "The sender of this message wants to exchange a public key with you. Please reply with a "
          "public key in an ASCII armor in an encrypted PDF using the same password as this PDF.");
    CHECK(texts::kKeyExchangeMail ==
          "This message contains an encrypted email and an encrypted PDF. A password for these files "
          "was sent to you before.");
    CHECK(texts::rekey_request("00ff") ==
          "Your public key with the fingerprint 00ff is about to expire. Please send a new key. Please "
          "send the mail by replying to this mail and attaching a certificate with the new key.");
    CHECK(texts::secret_subject("bob@example.net") == "Secret message for bob@example.net");
}

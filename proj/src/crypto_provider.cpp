#include "autokey/crypto_provider.hpp"

#include <sodium.h>

namespace autokey {

namespace {

constexpr std::string_view kKdfTag = "autokey/s2k/v1";

std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> curve_public(ByteView ed_public) {
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> out{};
    if (ed_public.size() != crypto_sign_PUBLICKEYBYTES ||
        crypto_sign_ed25519_pk_to_curve25519(out.data(), ed_public.data()) != 0) {
        throw CryptoError("certificate does not hold a usable public key");
    }
    return out;
}

std::array<std::uint8_t, crypto_box_NONCEBYTES> box_nonce(ByteView ephemeral_pk,
                                                          ByteView recipient_pk) {
    std::array<std::uint8_t, crypto_box_NONCEBYTES> nonce{};
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, nonce.size());
    crypto_generichash_update(&st, ephemeral_pk.data(), ephemeral_pk.size());
    crypto_generichash_update(&st, recipient_pk.data(), recipient_pk.size());
    crypto_generichash_final(&st, nonce.data(), nonce.size());
    return nonce;
}

}  // namespace

PrivateKey::~PrivateKey() {
    if (!bytes_.empty()) {
        sodium_memzero(bytes_.data(), bytes_.size());
    }
}

std::string CryptoProvider::random_secret(std::size_t length, Rng& rng) const {
    if (length < kMinSecretLength) {
        throw std::invalid_argument("random secret must be at least 20 characters");
    }
    std::string out;
    out.reserve(length);
    while (out.size() < length) {
        out.push_back(kSecretAlphabet[rng.below(kSecretAlphabet.size())]);
    }
    return out;
}

DeterministicProvider::DeterministicProvider() { ensure_sodium(); }

KeyPair DeterministicProvider::generate_keypair(const Address& subject, Instant start,
                                                Instant end, Rng& rng) const {
    if (start >= end) {
        throw std::invalid_argument("keypair validity window must satisfy start < end");
    }
    std::array<std::uint8_t, crypto_sign_SEEDBYTES> seed{};
    rng.fill(seed);
    Bytes pk(crypto_sign_PUBLICKEYBYTES);
    Bytes sk(crypto_sign_SECRETKEYBYTES);
    crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
    sodium_memzero(seed.data(), seed.size());
    return KeyPair{make_certificate(subject, std::move(pk), start, end), PrivateKey(std::move(sk))};
}

Bytes DeterministicProvider::sign(const PrivateKey& key, ByteView payload) const {
    if (key.bytes().size() != crypto_sign_SECRETKEYBYTES) {
        throw CryptoError("malformed private key");
    }
    Bytes sig(crypto_sign_BYTES);
    crypto_sign_detached(sig.data(), nullptr, payload.data(), payload.size(), key.bytes().data());
    return sig;
}

bool DeterministicProvider::verify(const Certificate& cert, ByteView payload,
                                   ByteView signature) const noexcept {
    if (signature.size() != crypto_sign_BYTES ||
        cert.public_key.size() != crypto_sign_PUBLICKEYBYTES) {
        return false;
    }
    return crypto_sign_verify_detached(signature.data(), payload.data(), payload.size(),
                                       cert.public_key.data()) == 0;
}

Bytes DeterministicProvider::pk_encrypt(const Certificate& cert, ByteView plaintext,
                                        Rng& rng) const {
    const auto recipient = curve_public(cert.public_key);

    std::array<std::uint8_t, crypto_box_SEEDBYTES> seed{};
    rng.fill(seed);
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> epk{};
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> esk{};
    crypto_box_seed_keypair(epk.data(), esk.data(), seed.data());

    const auto nonce = box_nonce(epk, recipient);
    Bytes out(epk.size() + crypto_box_MACBYTES + plaintext.size());
    std::copy(epk.begin(), epk.end(), out.begin());
    const int rc = crypto_box_easy(out.data() + epk.size(), plaintext.data(), plaintext.size(),
                                   nonce.data(), recipient.data(), esk.data());
    sodium_memzero(esk.data(), esk.size());
    sodium_memzero(seed.data(), seed.size());
    if (rc != 0) throw CryptoError("recipient key rejected");
    return out;
}

Bytes DeterministicProvider::pk_decrypt(const PrivateKey& key, ByteView ciphertext) const {
    if (key.bytes().size() != crypto_sign_SECRETKEYBYTES) {
        throw CryptoError("malformed private key");
    }
    if (ciphertext.size() < crypto_box_PUBLICKEYBYTES + crypto_box_MACBYTES) {
        throw CryptoError("ciphertext too short");
    }
    std::array<std::uint8_t, crypto_box_SECRETKEYBYTES> sk{};
    crypto_sign_ed25519_sk_to_curve25519(sk.data(), key.bytes().data());
    std::array<std::uint8_t, crypto_box_PUBLICKEYBYTES> own_pk{};
    crypto_scalarmult_base(own_pk.data(), sk.data());

    const auto epk = ciphertext.first(crypto_box_PUBLICKEYBYTES);
    const auto body = ciphertext.subspan(crypto_box_PUBLICKEYBYTES);
    const auto nonce = box_nonce(epk, own_pk);
    Bytes out(body.size() - crypto_box_MACBYTES);
    const int rc = crypto_box_open_easy(out.data(), body.data(), body.size(), nonce.data(),
                                        epk.data(), sk.data());
    sodium_memzero(sk.data(), sk.size());
    if (rc != 0) {
        throw CryptoError("public-key decryption failed");
    }
    return out;
}

Bytes DeterministicProvider::sym_encrypt(const SymmetricKey& key, ByteView plaintext,
                                         Rng& rng) const {
    Bytes out(crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES + plaintext.size());
    rng.fill(std::span(out).first(crypto_secretbox_NONCEBYTES));
    crypto_secretbox_easy(out.data() + crypto_secretbox_NONCEBYTES, plaintext.data(),
                          plaintext.size(), out.data(), key.key_bytes.data());
    return out;
}

Bytes DeterministicProvider::sym_decrypt(const SymmetricKey& key, ByteView ciphertext) const {
    if (ciphertext.size() < crypto_secretbox_NONCEBYTES + crypto_secretbox_MACBYTES) {
        throw CryptoError("ciphertext too short");
    }
    const auto nonce = ciphertext.first(crypto_secretbox_NONCEBYTES);
    const auto body = ciphertext.subspan(crypto_secretbox_NONCEBYTES);
    Bytes out(body.size() - crypto_secretbox_MACBYTES);
    if (crypto_secretbox_open_easy(out.data(), body.data(), body.size(), nonce.data(),
                                   key.key_bytes.data()) != 0) {
        throw CryptoError("symmetric decryption failed");
    }
    return out;
}

SymmetricKey DeterministicProvider::derive_key(std::string_view passphrase, ByteView salt) const {
    if (passphrase.empty()) {
        throw std::invalid_argument("string_to_key: empty passphrase");
    }
    if (salt.size() > crypto_generichash_KEYBYTES_MAX) {
        throw std::invalid_argument("string_to_key: salt too long");
    }
    SymmetricKey key;
    crypto_generichash_state st;
    crypto_generichash_init(&st, salt.empty() ? nullptr : salt.data(), salt.size(),
                            key.key_bytes.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(kKdfTag.data()),
                              kKdfTag.size());
    const std::uint8_t sep = 0;
    crypto_generichash_update(&st, &sep, 1);
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(passphrase.data()),
                              passphrase.size());
    crypto_generichash_final(&st, key.key_bytes.data(), key.key_bytes.size());
    return key;
}

}  // namespace autokey

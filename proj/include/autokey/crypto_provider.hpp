#pragma once

#include <array>
#include <string>

#include "autokey/certificate.hpp"
#include "autokey/rng.hpp"

namespace autokey {

// Printable alphabet for leap-of-faith secrets.
constexpr std::string_view kSecretAlphabet =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::size_t kMinSecretLength = 20;

/// Secret key material. Never part of any serialized message; wiped on
/// destruction.
class PrivateKey {
public:
    PrivateKey() = default;
    explicit PrivateKey(Bytes bytes) : bytes_(std::move(bytes)) {}
    PrivateKey(const PrivateKey&) = default;
    PrivateKey(PrivateKey&&) noexcept = default;
    PrivateKey& operator=(const PrivateKey&) = default;
    PrivateKey& operator=(PrivateKey&&) noexcept = default;
    ~PrivateKey();

    ByteView bytes() const noexcept { return bytes_; }

    friend bool operator==(const PrivateKey&, const PrivateKey&) = default;

private:
    Bytes bytes_;
};

struct KeyPair {
    Certificate public_part;
    PrivateKey private_part;
};

struct SymmetricKey {
    std::array<std::uint8_t, 32> key_bytes{};

    friend bool operator==(const SymmetricKey&, const SymmetricKey&) = default;
};

/// Every primitive the protocol consumes. Implementations are immutable;
/// all randomness comes from the caller's Rng and nothing reads a clock.
class CryptoProvider {
public:
    virtual ~CryptoProvider() = default;

    // Throws std::invalid_argument when start >= end.
    virtual KeyPair generate_keypair(const Address& subject, Instant start, Instant end,
                                     Rng& rng) const = 0;

    virtual Bytes sign(const PrivateKey& key, ByteView payload) const = 0;
    // Never throws; malformed input yields false.
    virtual bool verify(const Certificate& cert, ByteView payload,
                        ByteView signature) const noexcept = 0;

    virtual Bytes pk_encrypt(const Certificate& cert, ByteView plaintext, Rng& rng) const = 0;
    // Throws CryptoError on a wrong key or tampered ciphertext.
    virtual Bytes pk_decrypt(const PrivateKey& key, ByteView ciphertext) const = 0;

    virtual Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng) const = 0;
    // Throws CryptoError on a wrong key or tampered ciphertext.
    virtual Bytes sym_decrypt(const SymmetricKey& key, ByteView ciphertext) const = 0;

    // Passphrase -> key. An empty salt gives the plain string-to-key used for
    // symmetric envelopes. Throws std::invalid_argument on an empty passphrase.
    virtual SymmetricKey derive_key(std::string_view passphrase, ByteView salt) const = 0;

    SymmetricKey string_to_key(std::string_view passphrase) const {
        return derive_key(passphrase, {});
    }

    // `length` characters from kSecretAlphabet. Throws std::invalid_argument
    // when length < kMinSecretLength.
    std::string random_secret(std::size_t length, Rng& rng) const;
};

/// Libsodium-backed provider. Deterministic: identical Rng state and call
/// sequence produce identical bytes.
///
///   keys        Ed25519 (seed from rng); the X25519 form is used for encryption
///   pk_encrypt  ephemeral X25519 (seed from rng) || crypto_box, nonce = H(epk || pk)
///   sym_encrypt nonce (rng) || crypto_secretbox
///   derive_key  BLAKE2b-256 keyed by salt over a domain tag and the passphrase
class DeterministicProvider final : public CryptoProvider {
public:
    DeterministicProvider();

    KeyPair generate_keypair(const Address& subject, Instant start, Instant end,
                             Rng& rng) const override;
    Bytes sign(const PrivateKey& key, ByteView payload) const override;
    bool verify(const Certificate& cert, ByteView payload,
                ByteView signature) const noexcept override;
    Bytes pk_encrypt(const Certificate& cert, ByteView plaintext, Rng& rng) const override;
    Bytes pk_decrypt(const PrivateKey& key, ByteView ciphertext) const override;
    Bytes sym_encrypt(const SymmetricKey& key, ByteView plaintext, Rng& rng) const override;
    Bytes sym_decrypt(const SymmetricKey& key, ByteView ciphertext) const override;
    SymmetricKey derive_key(std::string_view passphrase, ByteView salt) const override;
};

}  // namespace autokey

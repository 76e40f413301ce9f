#include "autokey/rng.hpp"

#include <sodium.h>

#include <mutex>

namespace autokey {

void ensure_sodium() {
    static std::once_flag once;
    static bool ok = false;
    std::call_once(once, [] { ok = sodium_init() >= 0; });
    if (!ok) {
        throw Error("libsodium initialization failed");
    }
}

std::string to_hex(ByteView bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

std::string base64_encode(ByteView bytes) {
    ensure_sodium();
    const auto len = sodium_base64_encoded_len(bytes.size(), sodium_base64_VARIANT_ORIGINAL);
    std::string out(len, '\0');
    sodium_bin2base64(out.data(), out.size(), bytes.data(), bytes.size(),
                      sodium_base64_VARIANT_ORIGINAL);
    out.resize(len - 1);  // drop terminator
    return out;
}

Bytes base64_decode(std::string_view text) {
    ensure_sodium();
    Bytes out(text.size() / 4 * 3 + 3);
    std::size_t written = 0;
    const char* end = nullptr;
    if (sodium_base642bin(out.data(), out.size(), text.data(), text.size(), nullptr, &written,
                          &end, sodium_base64_VARIANT_ORIGINAL) != 0 ||
        end != text.data() + text.size()) {
        throw ParseError("base64", "invalid base64 text");
    }
    out.resize(written);
    // Reject encodings with non-zero padding bits.
    if (base64_encode(out) != text) {
        throw ParseError("base64", "non-canonical base64 text");
    }
    return out;
}

Rng::Rng(std::uint64_t seed, std::string_view stream) {
    ensure_sodium();
    static constexpr std::string_view kTag = "autokey/rng/v1";
    std::array<std::uint8_t, 8> seed_le{};
    for (int i = 0; i < 8; ++i) {
        seed_le[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    }
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, key_.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(kTag.data()), kTag.size());
    crypto_generichash_update(&st, seed_le.data(), seed_le.size());
    crypto_generichash_update(&st, reinterpret_cast<const unsigned char*>(stream.data()),
                              stream.size());
    crypto_generichash_final(&st, key_.data(), key_.size());
}

void Rng::refill() {
    std::array<std::uint8_t, crypto_stream_chacha20_ietf_NONCEBYTES> nonce{};
    for (int i = 0; i < 8; ++i) {
        nonce[i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
    }
    crypto_stream_chacha20_ietf(block_.data(), block_.size(), nonce.data(), key_.data());
    ++counter_;
    pos_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (pos_ == block_.size()) {
            refill();
        }
        b = block_[pos_++];
    }
}

Bytes Rng::bytes(std::size_t n) {
    Bytes out(n);
    fill(out);
    return out;
}

std::uint64_t Rng::next_u64() {
    std::array<std::uint8_t, 8> buf{};
    fill(buf);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
        v |= static_cast<std::uint64_t>(buf[i]) << (8 * i);
    }
    return v;
}

double Rng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) {
        throw std::invalid_argument("Rng::below: zero bound");
    }
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
    for (;;) {
        auto v = next_u64();
        if (v < limit) {
            return v % bound;
        }
    }
}

}  // namespace autokey

#pragma once

#include <string>

#include "autokey/common.hpp"

namespace autokey {

// Big-endian, length-prefixed field writer shared by the certificate and
// message encodings.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }

    void u32(std::uint32_t v) {
        for (int shift = 24; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(v >> shift));
        }
    }

    void i64(std::int64_t v) {
        const auto u = static_cast<std::uint64_t>(v);
        for (int shift = 56; shift >= 0; shift -= 8) {
            out_.push_back(static_cast<std::uint8_t>(u >> shift));
        }
    }

    void raw(ByteView b) { out_.insert(out_.end(), b.begin(), b.end()); }

    void blob(ByteView b) {
        u32(static_cast<std::uint32_t>(b.size()));
        raw(b);
    }

    void str(std::string_view s) {
        blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
    }

    Bytes take() { return std::move(out_); }

private:
    Bytes out_;
};

class ByteReader {
public:
    ByteReader(ByteView in, std::string context) : in_(in), context_(std::move(context)) {}

    std::uint8_t u8(std::string_view field) {
        need(1, field);
        return in_[pos_++];
    }

    std::uint32_t u32(std::string_view field) {
        need(4, field);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v = (v << 8) | in_[pos_++];
        }
        return v;
    }

    std::int64_t i64(std::string_view field) {
        need(8, field);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v = (v << 8) | in_[pos_++];
        }
        return static_cast<std::int64_t>(v);
    }

    Bytes raw(std::size_t n, std::string_view field = "magic") {
        need(n, field);
        Bytes out(in_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  in_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
        pos_ += n;
        return out;
    }

    Bytes blob(std::string_view field) {
        const auto n = u32(field);
        return raw(n, field);
    }

    std::string str(std::string_view field) { return to_string(blob(field)); }

    bool at_end() const noexcept { return pos_ == in_.size(); }

    void expect_end() const {
        if (!at_end()) {
            throw ParseError(context_, "trailing bytes");
        }
    }

private:
    void need(std::size_t n, std::string_view field) const {
        if (in_.size() - pos_ < n) {
            throw ParseError(context_ + "." + std::string(field), "truncated");
        }
    }

    ByteView in_;
    std::size_t pos_ = 0;
    std::string context_;
};

}  // namespace autokey

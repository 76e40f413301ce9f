#include <doctest.h>

#include <algorithm>

#include "autokey/keystore.hpp"
#include "support.hpp"

using namespace autokey;

namespace {

Certificate cert(const Address& who, Instant start, Instant end, std::uint8_t key_byte = 1) {
    return make_certificate(who, Bytes(32, key_byte), start, end);
}

PendingSecret secret(const Address& peer, Instant expires, SecretDirection d = SecretDirection::Initiator) {
    return {peer, "ABCDEFGHIJKLMNOPQRSTUVWX", expires, d};
}

}  // namespace

TEST_CASE("current certificate lookup honours the validity window") {
    Keystore ks;
    ks.upsert_certificate(cert("bob@x", 100, 200), CertSlot::Current);
    CHECK_FALSE(ks.lookup_valid_certificate("bob@x", 99));
    CHECK(ks.lookup_valid_certificate("bob@x", 100));
    CHECK(ks.lookup_valid_certificate("bob@x", 199));
    CHECK_FALSE(ks.lookup_valid_certificate("bob@x", 200));
    CHECK_FALSE(ks.lookup_valid_certificate("carol@x", 150));
}

TEST_CASE("future certificate rolls over at the old end without a gap") {
    Keystore ks;
    const auto old_cert = cert("bob@x", 0, 200, 1);
    const auto next = cert("bob@x", 200, 400, 2);
    ks.upsert_certificate(old_cert, CertSlot::Current);
    ks.upsert_certificate(next, CertSlot::Future);
    CHECK(*ks.lookup_valid_certificate("bob@x", 199) == old_cert);
    CHECK(*ks.lookup_valid_certificate("bob@x", 200) == next);
    CHECK_FALSE(ks.find("bob@x")->future_cert);
    CHECK(ks.remove_expired(300).empty());
    CHECK(ks.remove_expired(400) == std::vector<Address>{"bob@x"});
}

TEST_CASE("future slot needs a current record and must extend coverage") {
    Keystore ks;
    CHECK_THROWS_AS(ks.upsert_certificate(cert("bob@x", 200, 400), CertSlot::Future), std::invalid_argument);
    ks.upsert_certificate(cert("bob@x", 0, 200), CertSlot::Current);
    CHECK_THROWS_AS(ks.upsert_certificate(cert("bob@x", 100, 200, 2), CertSlot::Future), std::invalid_argument);
    CHECK_NOTHROW(ks.upsert_certificate(cert("bob@x", 200, 201, 2), CertSlot::Future));
}

TEST_CASE("replacing the current certificate drops a stale future one") {
    Keystore ks;
    ks.upsert_certificate(cert("bob@x", 0, 200, 1), CertSlot::Current);
    ks.upsert_certificate(cert("bob@x", 200, 400, 2), CertSlot::Future);
    ks.upsert_certificate(cert("bob@x", 50, 500, 3), CertSlot::Current);
    CHECK_FALSE(ks.find("bob@x")->future_cert);
}

TEST_CASE("remove_expired drops only lapsed records") {
    Keystore ks;
    ks.upsert_certificate(cert("a@x", 0, 100), CertSlot::Current);
    ks.upsert_certificate(cert("b@x", 0, 101), CertSlot::Current);
    CHECK(ks.remove_expired(100) == std::vector<Address>{"a@x"});
    CHECK(ks.find("b@x"));
    CHECK(ks.erase("b@x"));
    CHECK_FALSE(ks.erase("b@x"));
}

TEST_CASE("expiring_within agrees with a brute-force scan") {
    Rng rng(77, "expiring");
    for (int round = 0; round < 200; ++round) {
        Keystore ks;
        const Instant now = 1000;
        const Duration max_check = 1 + static_cast<Duration>(rng.below(500));
        std::vector<CorrespondentRecord> all;
        const int n = 1 + static_cast<int>(rng.below(12));
        for (int i = 0; i < n; ++i) {
            const Address who = "p" + std::to_string(i) + "@x";
            const Instant start = static_cast<Instant>(rng.below(1000));
            const Instant end = now - 200 + static_cast<Instant>(rng.below(1200));
            if (end <= start) continue;
            ks.upsert_certificate(cert(who, start, end), CertSlot::Current);
            if (rng.below(4) == 0) ks.upsert_certificate(cert(who, end, end + 1000, 9), CertSlot::Future);
        }
        // Oracle: step second by second through the window and see whether the
        // certificate stops being usable somewhere inside it.
        std::vector<Address> expected;
        for (const auto& [addr, rec] : ks.records()) {
            if (rec.future_cert) continue;
            bool lapses = false;
            bool usable_now = rec.current_cert.validity_end > now;
            for (Instant t = now + 1; usable_now && t <= now + max_check && !lapses; ++t) {
                lapses = t >= rec.current_cert.validity_end;
            }
            if (lapses) expected.push_back(addr);
        }
        std::vector<Address> got;
        for (const auto& r : ks.expiring_within(now, max_check)) got.push_back(r.address);
        REQUIRE(got == expected);
    }
}

TEST_CASE("pending secrets are keyed by peer and direction") {
    Keystore ks;
    ks.store_pending_secret(secret("bob@x", 50));
    ks.store_pending_secret(secret("bob@x", 60, SecretDirection::Responder));
    CHECK(ks.pending_secrets().size() == 2);
    CHECK(ks.peek_pending_secret("bob@x", SecretDirection::Initiator)->expires_at == 50);
    const auto taken = ks.take_pending_secret("bob@x", SecretDirection::Initiator);
    REQUIRE(taken);
    CHECK_FALSE(ks.take_pending_secret("bob@x", SecretDirection::Initiator));
    CHECK(ks.pending_secrets().size() == 1);
}

TEST_CASE("storing a secret again restarts its lifetime") {
    Keystore ks;
    ks.store_pending_secret(secret("bob@x", 50));
    ks.store_pending_secret(secret("bob@x", 90));
    CHECK(ks.pending_secrets().size() == 1);
    CHECK(ks.purge_expired_secrets(60).empty());
    CHECK(ks.purge_expired_secrets(90).size() == 1);
}

TEST_CASE("short secrets are refused") {
    Keystore ks;
    CHECK_THROWS_AS(ks.store_pending_secret({"bob@x", "short", 10, SecretDirection::Initiator}),
                    std::invalid_argument);
}

TEST_SUITE("snapshot") {
    TEST_CASE("roundtrip preserves records and secrets") {
        Keystore ks;
        ks.upsert_certificate(cert("bob@x", 0, 200, 1), CertSlot::Current);
        ks.upsert_certificate(cert("bob@x", 200, 400, 2), CertSlot::Future);
        ks.upsert_certificate(cert("carol@y", 10, 20, 3), CertSlot::Current);
        ks.store_pending_secret(secret("dave@z", 500, SecretDirection::Responder));
        const auto text = write_snapshot(ks);
        CHECK(text.rfind("autokey-keystore 1\n", 0) == 0);
        CHECK(read_snapshot(text) == ks);
        CHECK(write_snapshot(read_snapshot(text)) == text);
    }

    TEST_CASE("empty keystore") {
        CHECK(read_snapshot(write_snapshot(Keystore{})) == Keystore{});
    }

    TEST_CASE("malformed lines name the line") {
        const std::string header = "autokey-keystore 1\n";
        auto line_of = [](const std::string& text) {
            try {
                read_snapshot(text);
            } catch (const ParseError& e) {
                return e.field();
            }
            return std::string("accepted");
        };
        CHECK(line_of("") == "header");
        CHECK(line_of("bogus\n") == "line 1");
        CHECK(line_of(header + "record bob@x notbase64\n") == "line 2");
        CHECK(line_of(header + "\n# note\nsecret bob@x sideways 10 ABCDEFGHIJKLMNOPQRSTUVWX\n") == "line 4");
        CHECK(line_of(header + "secret bob@x initiator ten ABCDEFGHIJKLMNOPQRSTUVWX\n") == "line 2");
        CHECK(line_of(header + "secret bob@x initiator 10 short\n") == "line 2");
        Keystore ks;
        ks.upsert_certificate(cert("bob@x", 0, 200), CertSlot::Current);
        auto text = write_snapshot(ks);
        text.replace(text.find("bob@x"), 5, "eve@x");
        CHECK(line_of(text) == "line 2");
    }
}

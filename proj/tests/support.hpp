#pragma once

#include <memory>
#include <string>

#include "autokey/crypto_provider.hpp"
#include "autokey/mailsim.hpp"

namespace autokey::testing {

inline const Address kAlice = "alice@example.org";
inline const Address kBob = "bob@example.net";

inline const DeterministicProvider& provider() {
    static const DeterministicProvider p;
    return p;
}

inline Bytes from_hex(std::string_view hex) {
    Bytes out;
    for (std::size_t i = 0; i + 1 < hex.size(); i += 2) {
        out.push_back(static_cast<std::uint8_t>(std::stoi(std::string(hex.substr(i, 2)), nullptr, 16)));
    }
    return out;
}

inline std::unique_ptr<Simulation> two_party(SimConfig cfg = {}, PolicyConfig alice = {},
                                             PolicyConfig bob = {}, EngineFactory factory = {}) {
    auto sim = std::make_unique<Simulation>(cfg, provider());
    AccountOptions a;
    a.address = kAlice;
    a.policy = alice;
    a.factory = factory;
    sim->create_account(a);
    AccountOptions b;
    b.address = kBob;
    b.policy = bob;
    b.factory = factory;
    sim->create_account(b);
    return sim;
}

inline std::size_t count_events(const std::vector<Event>& t, EventType type) {
    std::size_t n = 0;
    for (const auto& e : t) n += e.type == type;
    return n;
}

// Events of `type` whose detail[key] equals value.
inline std::vector<Event> events_where(const std::vector<Event>& t, EventType type,
                                       const std::string& key, const std::string& value) {
    std::vector<Event> out;
    for (const auto& e : t) {
        if (e.type == type && e.detail.contains(key) && e.detail[key] == value) out.push_back(e);
    }
    return out;
}

}  // namespace autokey::testing

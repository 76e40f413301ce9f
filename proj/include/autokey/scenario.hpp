#pragma once

#include <optional>
#include <string>
#include <vector>

#include "autokey/mailsim.hpp"

namespace autokey {

struct AccountSpec {
    Address address;
    std::vector<Address> side_channels;
    bool engine = true;
    // Answers applied first; explicit policy fields override them.
    std::optional<std::vector<bool>> questionnaire;
    PolicyConfig policy;
    Duration own_key_lifetime = 365 * kDay;
};

struct SendSpec {
    Address from;
    Address to;
    std::string subject;
    std::string body;
    bool postcard = false;
};

struct TimelineEntry {
    Instant at = 0;
    std::optional<SendSpec> send;
};

struct ScenarioSpec {
    std::string name;
    std::uint64_t seed = 0;
    double loss_rate = 0.0;
    AdversaryConfig adversary;
    std::vector<AccountSpec> accounts;
    // Pairs whose current certificates are installed in each other's keystore
    // before the run starts.
    std::vector<std::pair<Address, Address>> introductions;
    std::vector<TimelineEntry> timeline;
    Instant until = 0;
};

// "90", "90s", "15m", "36h", "14d". Throws ParseError naming `field`.
Duration parse_duration(const Json& value, const std::string& field);

// Throws ParseError on malformed JSON, unknown keys, a missing seed, a
// timeline that is not strictly increasing, or references to unknown
// accounts.
ScenarioSpec parse_scenario(std::string_view text);
ScenarioSpec load_scenario(const std::string& path);

struct ScenarioRun {
    std::unique_ptr<Simulation> sim;
};

// Builds the simulation and plays the timeline through `until`, then calls
// finish(). Throws InvariantViolation if an engine breaks an invariant; the
// partial transcript stays readable through `partial` when provided.
ScenarioRun play_scenario(const ScenarioSpec& spec, const CryptoProvider& crypto,
                          const EngineFactory& factory = {},
                          std::vector<Event>* partial = nullptr);

}  // namespace autokey

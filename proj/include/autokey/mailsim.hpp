#pragma once

#include <functional>
#include <map>
#include <memory>
#include <queue>
#include <vector>

#include "autokey/adversary.hpp"
#include "autokey/engine.hpp"

namespace autokey {

using EngineFactory =
    std::function<std::unique_ptr<Engine>(EngineConfig, const CryptoProvider&, Rng, Instant)>;

struct AccountOptions {
    Address address;
    std::vector<Address> side_channels;
    bool attach_engine = true;
    PolicyConfig policy;
    Duration own_key_lifetime = 365 * kDay;
    // Defaults to constructing a plain Engine.
    EngineFactory factory;
};

struct SimConfig {
    std::uint64_t seed = 1;
    double loss_rate = 0.0;
    Duration transit_delay = kMinute;
    Duration tick = kHour;
    AdversaryConfig adversary;
    // Share every account's side channels with every engine's address book.
    bool publish_side_channels = true;
};

struct StoredMail {
    std::uint64_t slot = 0;
    Bytes raw;
    Instant stored_at = 0;
};

struct Account {
    Address primary;
    std::vector<Address> side_channels;
    std::unique_ptr<Engine> engine;
    PolicyConfig policy;
};

/// Discrete-event mail network with a virtual clock.
///
/// Events at the same instant run in insertion order, and deliveries due at
/// an instant run before that instant's clock tick. Every random choice is
/// drawn from streams derived from the seed, so identical inputs give an
/// identical transcript.
class Simulation {
public:
    Simulation(SimConfig config, const CryptoProvider& crypto);

    // Throws std::invalid_argument for an address already in use.
    std::size_t create_account(AccountOptions options);

    // Queues a user's mail at the current instant. Returns its message id.
    std::string user_send(const Address& from, const Address& to, std::string subject,
                          std::string body, bool postcard_override = false);

    // Runs deliveries and ticks with time <= until.
    std::vector<Event> advance_clock(Instant until);

    void execute_server_command(const Address& owner, const ServerCommand& cmd);

    // Installs each engine's current certificate in the other's keystore, as
    // if the two had verified keys in person.
    void introduce(const Address& a, const Address& b);

    // Appends convergence and adversary summaries and the terminal event.
    void finish();

    Instant now() const noexcept { return now_; }
    const std::vector<Event>& transcript() const noexcept { return transcript_; }
    const Adversary& adversary() const noexcept { return adversary_; }
    const std::vector<Account>& accounts() const noexcept { return accounts_; }

    const Account* account(const Address& any_address) const;
    Engine* engine(const Address& primary);
    const Engine* engine(const Address& primary) const;
    const std::vector<StoredMail>& mailbox(const Address& address) const;
    // Bodies of every non-postcard user mail submitted so far.
    const std::vector<std::string>& protected_bodies() const noexcept { return protected_bodies_; }
    // Raw bytes of every message submitted to the network.
    const std::vector<Bytes>& wire_log() const noexcept { return wire_log_; }

private:
    struct Pending {
        Instant at;
        std::uint64_t seq;
        Address destination;
        Bytes raw;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const {
            return a.at != b.at ? a.at > b.at : a.seq > b.seq;
        }
    };

    void log(Event e);
    void log(EventType type, const Address& party, Json detail);
    void dispatch(Account& from, EngineOutput&& out);
    void submit(const Address& sender, const MailMessage& m);
    void deliver(const Pending& p);
    void tick();
    void check_invariants();
    void read_all_mailboxes();
    Account* owner_of(const Address& address);

    SimConfig config_;
    const CryptoProvider& crypto_;
    Rng network_rng_;
    Adversary adversary_;
    Instant now_ = 0;
    Instant next_tick_;
    std::uint64_t seq_ = 0;
    std::uint64_t slot_counter_ = 0;
    std::uint64_t user_counter_ = 0;
    std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
    std::vector<Account> accounts_;
    std::map<Address, std::size_t> address_index_;
    std::map<Address, std::vector<StoredMail>> mailboxes_;
    std::vector<Event> transcript_;
    std::vector<std::string> protected_bodies_;
    std::vector<Bytes> wire_log_;
    bool finished_ = false;
};

// Names of the fixed protocol texts found in a plain body.
std::vector<std::string> texts_in_body(std::string_view body);

}  // namespace autokey

#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "autokey/events.hpp"
#include "autokey/keystore.hpp"
#include "autokey/policy.hpp"
#include "autokey/wire.hpp"

namespace autokey {

struct UserSendRequest {
    std::string message_id;
    Address to;
    std::string subject;
    std::string body;
    bool postcard_override = false;
};

// A stored copy of a mail on one of the party's mail servers.
struct InboundMail {
    Address mailbox;
    std::uint64_t slot = 0;
    Bytes raw;
};

struct ServerCommand {
    enum class Op { Delete, Replace };
    Op op = Op::Delete;
    Address mailbox;
    std::uint64_t slot = 0;
    Bytes replacement;
};

struct EngineOutput {
    std::vector<MailMessage> outgoing;
    std::vector<ServerCommand> commands;
    std::vector<Event> events;

    void append(EngineOutput&& other);
};

enum class TimerKind { KeyExchange, RekeyRequest, ExchangeReply };

std::string_view to_string(TimerKind k);

struct OutboxTimer {
    std::string message_id;
    Address peer;
    TimerKind kind = TimerKind::KeyExchange;
    Instant next_resend_at = 0;
    int resend_count = 0;
    std::vector<MailMessage> messages;
};

// Decrypted view of a mail as the user sees it.
struct InboxEntry {
    std::string message_id;
    Address from;
    std::string subject;
    std::string body;
    Instant received_at = 0;
    bool signature_valid = false;
    std::string source;  // "direct", "key_exchange" or "postcard"
};

struct EngineConfig {
    Address self;
    std::vector<Address> own_side_channels;
    PolicyConfig policy;
    Duration own_key_lifetime = 365 * kDay;
};

/// Per-party protocol state machine.
///
/// Every entry point takes the current virtual time and returns the mails to
/// send, the commands for the party's mail servers, and transcript events.
/// The user is never asked anything: decisions come from PolicyConfig.
class Engine {
public:
    Engine(EngineConfig config, const CryptoProvider& crypto, Rng rng, Instant now);
    virtual ~Engine() = default;

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    virtual EngineOutput send_mail(const UserSendRequest& request, Instant now);
    EngineOutput initiate_key_exchange(const UserSendRequest& original, Instant now);

    // Parses the stored bytes and dispatches on the message kind.
    EngineOutput receive(const InboundMail& mail, Instant now);

    EngineOutput handle_password_mail(const InboundMail& mail, const MailMessage& m, Instant now);
    EngineOutput handle_key_exchange_mail(const InboundMail& mail, const MailMessage& m,
                                          Instant now);
    EngineOutput handle_key_exchange_reply(const InboundMail& mail, const MailMessage& m,
                                           Instant now);
    EngineOutput handle_rekey_request(const InboundMail& mail, const MailMessage& m, Instant now);
    EngineOutput handle_rekey_reply(const InboundMail& mail, const MailMessage& m, Instant now);
    EngineOutput handle_user_mail(const InboundMail& mail, const MailMessage& m, Instant now);

    EngineOutput on_clock_tick(Instant now);

    MailMessage build_rekey_request(const CorrespondentRecord& record, Instant now);

    // Side channels harvested from the address book for `peer`.
    void register_side_channels(const Address& peer, std::vector<Address> channels);

    // Empty when every invariant holds.
    std::vector<std::string> check_invariants(Instant now) const;

    const Address& self() const noexcept { return config_.self; }
    const EngineConfig& config() const noexcept { return config_; }
    const PolicyConfig& policy() const noexcept { return config_.policy; }
    const Keystore& keystore() const noexcept { return keystore_; }
    Keystore& mutable_keystore() noexcept { return keystore_; }
    const std::vector<KeyPair>& own_keys() const noexcept { return own_keys_; }
    const std::vector<KeyPair>& retired_keys() const noexcept { return retired_keys_; }
    const std::vector<InboxEntry>& inbox() const noexcept { return inbox_; }
    const std::map<Address, std::vector<UserSendRequest>>& deferred_mail() const noexcept {
        return deferred_;
    }
    const std::map<std::pair<Address, TimerKind>, OutboxTimer>& timers() const noexcept {
        return timers_;
    }
    const std::vector<std::string>& issued_secrets() const noexcept { return issued_secrets_; }
    std::size_t held_exchange_mails() const noexcept;

    // Own certificate valid at `now`; rolls the own key set forward first.
    const Certificate& own_certificate(Instant now);

    bool owns_address(const Address& a) const;

protected:
    Event make_event(EventType type, Instant now, Json detail = Json::object()) const;
    std::string next_message_id(std::string_view tag);

    // Signs `m` in place with the own key valid at `now`.
    void sign_message(MailMessage& m, Instant now);
    MailMessage encrypted_user_mail(const UserSendRequest& request, const Certificate& peer,
                                    Instant now);

    const CryptoProvider& crypto_;
    Rng rng_;

private:
    const KeyPair& own_keypair(Instant now);
    void roll_own_keys(Instant now, EngineOutput& out);
    Bytes try_decrypt(ByteView ciphertext) const;
    bool verify_from(const Address& sender, const MailMessage& m, bool current_only) const;
    void add_inbox(InboxEntry entry);
    void keystore_event(EngineOutput& out, Instant now, std::string_view change,
                        const Address& peer, const std::string& fingerprint);
    EngineOutput release_deferred(const Address& peer, Instant now);
    EngineOutput process_held_exchanges(const Address& peer, Instant now);
    static ServerCommand delete_command(const InboundMail& mail);

    EngineConfig config_;
    Keystore keystore_;
    std::vector<KeyPair> own_keys_;
    std::vector<KeyPair> retired_keys_;
    std::map<Address, std::vector<Address>> side_channels_;
    std::map<Address, std::vector<UserSendRequest>> deferred_;
    std::map<std::pair<Address, TimerKind>, OutboxTimer> timers_;
    std::map<Address, std::vector<InboundMail>> held_exchanges_;
    std::set<std::string> processed_exchanges_;
    std::vector<InboxEntry> inbox_;
    std::set<std::string> inbox_ids_;
    std::vector<std::string> issued_secrets_;
    std::uint64_t message_counter_ = 0;
    std::vector<Event> startup_events_;

public:
    // Events produced while constructing the engine (own key generation).
    std::vector<Event> take_startup_events() { return std::exchange(startup_events_, {}); }
};

}  // namespace autokey

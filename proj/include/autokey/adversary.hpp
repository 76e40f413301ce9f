#pragma once

#include <map>
#include <optional>
#include <set>
#include <vector>

#include "autokey/events.hpp"
#include "autokey/wire.hpp"

namespace autokey {

enum class AdversaryMode {
    None,
    // Read access to every mailbox from `compromise_at` on.
    CompromiseAfter,
    // Controls every channel while keys are exchanged: reads passwords,
    // swaps certificates, then relays the mail it can now read.
    ActiveMitmDuringExchange,
    // Same capabilities, but never sees side-channel deliveries.
    MainChannelOnlyMitm,
};

std::string_view to_string(AdversaryMode m);
AdversaryMode adversary_mode_from_string(std::string_view s);

struct AdversaryConfig {
    AdversaryMode mode = AdversaryMode::None;
    Instant compromise_at = 0;
};

/// Scripted attacker. It intercepts, decrypts what it has passwords or keys
/// for, substitutes certificates and re-encrypts; it does not search.
class Adversary {
public:
    Adversary(AdversaryConfig config, const CryptoProvider& crypto, Rng rng);

    const AdversaryConfig& config() const noexcept { return config_; }

    bool intercepts(bool side_channel) const noexcept;
    bool reads_mailboxes_at(Instant now) const noexcept;

    // Mail in transit. Returns the bytes to deliver; `actions` receives a
    // description of every substitution.
    Bytes intercept(const Bytes& raw, bool side_channel, Instant now, std::vector<Json>& actions);

    // Stored mail read through a compromised account.
    void read(const Bytes& raw);

    bool observed_contains(std::string_view needle) const;
    std::size_t observed_count() const noexcept { return observed_.size(); }

    const std::map<Address, Certificate>& learned_certs() const noexcept { return real_certs_; }
    const std::map<Address, KeyPair>& impostor_keys() const noexcept { return impostors_; }
    // Pairs (initiator, responder) whose exchange was subverted.
    const std::set<std::pair<Address, Address>>& compromised_pairs() const noexcept {
        return compromised_;
    }

private:
    void observe(ByteView bytes);
    const KeyPair& impostor_for(const Certificate& real);
    std::optional<MailMessage> swap_exchange(MailMessage m, std::vector<Json>& actions);
    std::optional<MailMessage> swap_reply(MailMessage m, std::vector<Json>& actions);
    std::optional<MailMessage> relay_user_mail(MailMessage m, std::vector<Json>& actions);
    std::optional<MailMessage> forge_rekey_reply(MailMessage m, std::vector<Json>& actions);
    void resign(MailMessage& m, const Address& as);

    AdversaryConfig config_;
    const CryptoProvider& crypto_;
    Rng rng_;
    std::set<Bytes> observed_;
    std::map<Address, std::vector<std::string>> secrets_by_sender_;
    std::map<std::pair<Address, Address>, std::string> exchange_secret_;
    std::map<Address, Certificate> real_certs_;
    std::map<Address, KeyPair> impostors_;
    std::set<std::pair<Address, Address>> compromised_;
};

}  // namespace autokey

#include "autokey/mailsim.hpp"

#include <sodium.h>

#include <algorithm>

#include "autokey/texts.hpp"

namespace autokey {

namespace {

std::string short_digest(ByteView bytes) {
    std::array<std::uint8_t, 8> out{};
    crypto_generichash(out.data(), out.size(), bytes.data(), bytes.size(), nullptr, 0);
    return to_hex(out);
}

bool contains(std::string_view hay, std::string_view needle) {
    return hay.find(needle) != std::string_view::npos;
}

}  // namespace

std::vector<std::string> texts_in_body(std::string_view body) {
    std::vector<std::string> out;
    if (contains(body, texts::kPasswordMail)) out.emplace_back("password_notice");
    if (contains(body, texts::kKeyExchangeMail)) out.emplace_back("key_exchange_notice");
    if (contains(body, texts::kKeyExchangeReply)) out.emplace_back("key_exchange_reply_notice");
    if (contains(body, texts::kRekeyRequestPrefix) && contains(body, texts::kRekeyRequestSuffix)) {
        out.emplace_back("rekey_request_notice");
    }
    return out;
}

Simulation::Simulation(SimConfig config, const CryptoProvider& crypto)
    : config_(config),
      crypto_(crypto),
      network_rng_(config.seed, "network"),
      adversary_(config.adversary, crypto, Rng(config.seed, "adversary")),
      next_tick_(config.tick) {
    if (config_.loss_rate < 0.0 || config_.loss_rate > 1.0) {
        throw std::invalid_argument("loss rate must lie in [0, 1]");
    }
    if (config_.tick <= 0 || config_.transit_delay < 0) {
        throw std::invalid_argument("tick must be positive and transit delay non-negative");
    }
}

void Simulation::log(Event e) {
    e.id = transcript_.size() + 1;
    transcript_.push_back(std::move(e));
}

void Simulation::log(EventType type, const Address& party, Json detail) {
    Event e;
    e.type = type;
    e.at = now_;
    e.party = party;
    e.detail = std::move(detail);
    log(std::move(e));
}

std::size_t Simulation::create_account(AccountOptions options) {
    std::vector<Address> all = options.side_channels;
    all.push_back(options.address);
    for (const auto& a : all) {
        if (a.empty()) throw std::invalid_argument("empty address");
        if (address_index_.count(a)) throw std::invalid_argument("address already in use: " + a);
    }
    if (std::set<Address>(all.begin(), all.end()).size() != all.size()) {
        throw std::invalid_argument("duplicate address within account " + options.address);
    }
    const auto index = accounts_.size();
    for (const auto& a : all) {
        address_index_[a] = index;
        mailboxes_[a];
    }

    Account acct;
    acct.primary = options.address;
    acct.side_channels = options.side_channels;
    acct.policy = options.policy;
    if (options.attach_engine) {
        EngineConfig ec{options.address, options.side_channels, options.policy,
                        options.own_key_lifetime};
        Rng rng(config_.seed, "engine/" + options.address);
        acct.engine = options.factory ? options.factory(std::move(ec), crypto_, std::move(rng), now_)
                                      : std::make_unique<Engine>(std::move(ec), crypto_, std::move(rng), now_);
    }

    Json d;
    d["engine"] = options.attach_engine;
    d["side_channels"] = options.side_channels;
    if (options.attach_engine) {
        const auto& p = options.policy;
        d["max_check"] = p.max_check;
        d["leap_of_faith_periode"] = p.leap_of_faith_periode;
        d["resend_interval"] = p.resend_interval;
        d["max_resends"] = p.max_resends;
        d["leap_of_faith_enabled"] = p.leap_of_faith_enabled;
        d["side_channels_enabled"] = p.side_channels_enabled;
        d["encrypt_by_default"] = p.encrypt_by_default;
        d["postcard_available"] = true;
        d["own_key_lifetime"] = options.own_key_lifetime;
    }
    log(EventType::PolicyConfigured, options.address, std::move(d));
    if (acct.engine) {
        for (auto& e : acct.engine->take_startup_events()) log(std::move(e));
    }

    if (config_.publish_side_channels) {
        for (auto& other : accounts_) {
            if (other.engine && !acct.side_channels.empty()) {
                other.engine->register_side_channels(acct.primary, acct.side_channels);
            }
            if (acct.engine && !other.side_channels.empty()) {
                acct.engine->register_side_channels(other.primary, other.side_channels);
            }
        }
    }
    accounts_.push_back(std::move(acct));
    return index;
}

void Simulation::introduce(const Address& a, const Address& b) {
    auto* ea = engine(a);
    auto* eb = engine(b);
    if (!ea || !eb || ea == eb) throw std::invalid_argument("introduce needs two distinct engine accounts");
    auto install = [&](Engine& holder, Engine& peer) {
        const auto cert = peer.own_certificate(now_);
        holder.mutable_keystore().upsert_certificate(cert, CertSlot::Current);
        Json d;
        d["change"] = "peer_cert_introduced";
        d["peer"] = peer.self();
        d["fingerprint"] = cert.fingerprint;
        log(EventType::KeystoreChange, holder.self(), std::move(d));
    };
    install(*ea, *eb);
    install(*eb, *ea);
    check_invariants();
}

Account* Simulation::owner_of(const Address& address) {
    auto it = address_index_.find(address);
    return it == address_index_.end() ? nullptr : &accounts_[it->second];
}

const Account* Simulation::account(const Address& any_address) const {
    auto it = address_index_.find(any_address);
    return it == address_index_.end() ? nullptr : &accounts_[it->second];
}

Engine* Simulation::engine(const Address& primary) {
    auto* a = owner_of(primary);
    return a ? a->engine.get() : nullptr;
}

const Engine* Simulation::engine(const Address& primary) const {
    const auto* a = account(primary);
    return a ? a->engine.get() : nullptr;
}

const std::vector<StoredMail>& Simulation::mailbox(const Address& address) const {
    auto it = mailboxes_.find(address);
    if (it == mailboxes_.end()) throw std::invalid_argument("unknown mailbox " + address);
    return it->second;
}

std::string Simulation::user_send(const Address& from, const Address& to, std::string subject,
                                  std::string body, bool postcard_override) {
    auto* acct = owner_of(from);
    if (!acct || acct->primary != from || !acct->engine) {
        throw std::invalid_argument("user_send needs the primary address of an engine account: " + from);
    }
    UserSendRequest req{"user-" + std::to_string(++user_counter_) + "@" + from, to,
                        std::move(subject), std::move(body), postcard_override};
    Json d;
    d["message_id"] = req.message_id;
    d["to"] = to;
    d["postcard_override"] = postcard_override;
    log(EventType::UserRequest, from, std::move(d));
    if (!postcard_override && acct->policy.encrypt_by_default) {
        protected_bodies_.push_back(req.body);
    }
    dispatch(*acct, acct->engine->send_mail(req, now_));
    check_invariants();
    return req.message_id;
}

void Simulation::dispatch(Account& from, EngineOutput&& out) {
    for (auto& e : out.events) log(std::move(e));
    for (const auto& cmd : out.commands) execute_server_command(from.primary, cmd);
    for (const auto& m : out.outgoing) submit(from.primary, m);
}

void Simulation::execute_server_command(const Address& owner, const ServerCommand& cmd) {
    const auto* acct = owner_of(cmd.mailbox);
    const bool owned = acct && acct->primary == owner;
    auto& box = mailboxes_[cmd.mailbox];
    auto it = std::find_if(box.begin(), box.end(),
                           [&](const StoredMail& s) { return s.slot == cmd.slot; });
    Json d;
    d["mailbox"] = cmd.mailbox;
    d["slot"] = cmd.slot;
    d["noop"] = !owned || it == box.end();
    if (owned && it != box.end()) {
        if (cmd.op == ServerCommand::Op::Delete) {
            box.erase(it);
        } else {
            it->raw = cmd.replacement;
            d["digest"] = short_digest(cmd.replacement);
        }
    }
    log(cmd.op == ServerCommand::Op::Delete ? EventType::ServerDelete : EventType::ServerReplace,
        owner, std::move(d));
}

void Simulation::submit(const Address& sender, const MailMessage& m) {
    auto raw = serialize_message(m);
    wire_log_.push_back(raw);

    const auto* sender_acct = owner_of(sender);
    Json d;
    d["message_id"] = m.message_id;
    d["from"] = m.from;
    d["to"] = m.to;
    d["kind"] = to_string(m.kind);
    d["protection"] = to_string(m.protection);
    d["signed"] = m.signature.has_value();
    d["engine"] = sender_acct && sender_acct->engine;
    d["bytes"] = raw.size();
    d["digest"] = short_digest(raw);
    if (m.kind != MessageKind::Postcard) d["subject"] = m.subject;
    d["texts"] = texts_in_body(m.body);
    log(EventType::MailOut, sender, std::move(d));

    const auto* dest = owner_of(m.to);
    if (!dest) {
        Json b;
        b["message_id"] = m.message_id;
        b["to"] = m.to;
        log(EventType::Bounce, sender, std::move(b));
        return;
    }
    if (network_rng_.uniform() < config_.loss_rate) {
        Json l;
        l["message_id"] = m.message_id;
        l["to"] = m.to;
        log(EventType::Drop, sender, std::move(l));
        return;
    }
    const bool side_channel = dest->primary != m.to;
    std::vector<Json> actions;
    auto delivered = adversary_.intercept(raw, side_channel, now_, actions);
    for (auto& a : actions) log(EventType::Adversary, "adversary", std::move(a));
    queue_.push(Pending{now_ + config_.transit_delay, seq_++, m.to, std::move(delivered)});
}

void Simulation::deliver(const Pending& p) {
    auto* acct = owner_of(p.destination);
    StoredMail stored{++slot_counter_, p.raw, now_};
    mailboxes_[p.destination].push_back(stored);

    Json d;
    d["mailbox"] = p.destination;
    d["slot"] = stored.slot;
    try {
        const auto m = parse_message(p.raw);
        d["message_id"] = m.message_id;
        d["kind"] = to_string(m.kind);
    } catch (const ParseError&) {
        d["message_id"] = nullptr;
    }
    log(EventType::Deliver, acct->primary, std::move(d));

    if (adversary_.reads_mailboxes_at(now_)) adversary_.read(p.raw);
    if (acct->engine) {
        dispatch(*acct, acct->engine->receive({p.destination, stored.slot, p.raw}, now_));
    }
    check_invariants();
}

void Simulation::read_all_mailboxes() {
    for (const auto& [addr, box] : mailboxes_) {
        for (const auto& s : box) adversary_.read(s.raw);
    }
}

void Simulation::tick() {
    log(EventType::Tick, "", Json::object());
    if (adversary_.reads_mailboxes_at(now_)) read_all_mailboxes();
    for (auto& acct : accounts_) {
        if (acct.engine) dispatch(acct, acct.engine->on_clock_tick(now_));
    }
    check_invariants();
}

void Simulation::check_invariants() {
    std::string problems;
    for (const auto& acct : accounts_) {
        if (!acct.engine) continue;
        for (const auto& p : acct.engine->check_invariants(now_)) {
            problems += p + "; ";
        }
    }
    if (!problems.empty()) throw InvariantViolation(problems);
}

std::vector<Event> Simulation::advance_clock(Instant until) {
    if (until < now_) throw std::invalid_argument("advance_clock cannot move time backwards");
    if (finished_) throw std::logic_error("simulation already finished");
    const auto first = transcript_.size();
    for (;;) {
        const Instant next_delivery = queue_.empty() ? INT64_MAX : queue_.top().at;
        const Instant t = std::min(next_delivery, next_tick_);
        if (t > until) break;
        now_ = t;
        if (next_delivery <= next_tick_) {
            const auto p = queue_.top();
            queue_.pop();
            deliver(p);
        } else {
            tick();
            next_tick_ += config_.tick;
        }
    }
    now_ = until;
    return {transcript_.begin() + static_cast<std::ptrdiff_t>(first), transcript_.end()};
}

void Simulation::finish() {
    if (finished_) return;
    if (adversary_.reads_mailboxes_at(now_)) read_all_mailboxes();

    auto holds = [](const Engine& a, const Engine& b) -> std::string {
        const auto* rec = a.keystore().find(b.self());
        if (!rec) return "none";
        for (const auto* keys : {&b.own_keys(), &b.retired_keys()}) {
            for (const auto& k : *keys) {
                if (k.public_part == rec->current_cert) return "authentic";
            }
        }
        return "foreign";
    };
    for (std::size_t i = 0; i < accounts_.size(); ++i) {
        for (std::size_t j = i + 1; j < accounts_.size(); ++j) {
            const auto* a = accounts_[i].engine.get();
            const auto* b = accounts_[j].engine.get();
            if (!a || !b) continue;
            Json d;
            d["a"] = a->self();
            d["b"] = b->self();
            d["a_holds_b"] = holds(*a, *b);
            d["b_holds_a"] = holds(*b, *a);
            log(EventType::Convergence, "", std::move(d));
        }
    }

    bool secret_seen = false;
    for (const auto& acct : accounts_) {
        if (!acct.engine) continue;
        for (const auto& s : acct.engine->issued_secrets()) {
            secret_seen = secret_seen || adversary_.observed_contains(s);
        }
    }
    bool plaintext_seen = false;
    for (const auto& body : protected_bodies_) {
        plaintext_seen = plaintext_seen || adversary_.observed_contains(body);
    }
    std::size_t actions = 0;
    for (const auto& e : transcript_) actions += e.type == EventType::Adversary;
    Json r;
    r["mode"] = to_string(adversary_.config().mode);
    r["observed_items"] = adversary_.observed_count();
    r["secret_observed"] = secret_seen;
    r["plaintext_observed"] = plaintext_seen;
    r["actions"] = actions;
    Json pairs = Json::array();
    for (const auto& [a, b] : adversary_.compromised_pairs()) pairs.push_back(Json::array({a, b}));
    r["compromised_pairs"] = std::move(pairs);
    log(EventType::AdversaryReport, "adversary", std::move(r));

    std::size_t prompts = 0;
    for (const auto& e : transcript_) prompts += e.type == EventType::UserPrompt;
    Json end;
    end["events"] = transcript_.size() + 1;
    end["user_prompts"] = prompts;
    log(EventType::End, "", std::move(end));
    finished_ = true;
}

}  // namespace autokey

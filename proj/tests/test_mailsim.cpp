#include <doctest.h>

#include <fstream>
#include <sstream>

#include "autokey/scenario.hpp"
#include "support.hpp"

using namespace autokey;
using namespace autokey::testing;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string scenario_path(const std::string& name) {
    return std::string(AUTOKEY_SOURCE_DIR) + "/scenarios/" + name + ".json";
}

const Json& report(const std::vector<Event>& t) {
    for (const auto& e : t) {
        if (e.type == EventType::AdversaryReport) return e.detail;
    }
    FAIL("no adversary report");
    static const Json none;
    return none;
}

const Json& convergence(const std::vector<Event>& t) {
    for (const auto& e : t) {
        if (e.type == EventType::Convergence) return e.detail;
    }
    FAIL("no convergence event");
    static const Json none;
    return none;
}

// Alice writes to Bob once, Bob answers a day later.
std::unique_ptr<Simulation> conversation(SimConfig cfg, PolicyConfig alice = {}, PolicyConfig bob = {},
                                         bool side_channels = false, Instant until = 3 * kDay) {
    auto sim = std::make_unique<Simulation>(cfg, provider());
    AccountOptions a;
    a.address = kAlice;
    a.policy = alice;
    AccountOptions b;
    b.address = kBob;
    b.policy = bob;
    if (side_channels) {
        a.side_channels = {"alice@chat.example"};
        b.side_channels = {"bob@chat.example"};
    }
    sim->create_account(a);
    sim->create_account(b);
    sim->user_send(kAlice, kBob, "Lunch", "Meet at noon by the fountain");
    sim->advance_clock(kDay);
    sim->user_send(kBob, kAlice, "Re: Lunch", "Fine, see you there");
    sim->advance_clock(until);
    sim->finish();
    return sim;
}

}  // namespace

TEST_SUITE("accounts") {
    TEST_CASE("addresses are unique across primaries and side channels") {
        Simulation sim({}, provider());
        AccountOptions a;
        a.address = kAlice;
        a.side_channels = {"alice@chat.example"};
        sim.create_account(a);
        AccountOptions clash;
        clash.address = "alice@chat.example";
        CHECK_THROWS_AS(sim.create_account(clash), std::invalid_argument);
        clash.address = "x@y";
        clash.side_channels = {kAlice};
        CHECK_THROWS_AS(sim.create_account(clash), std::invalid_argument);
        clash.side_channels = {"x@y"};
        CHECK_THROWS_AS(sim.create_account(clash), std::invalid_argument);
        CHECK(sim.accounts().size() == 1);
        CHECK(sim.account("alice@chat.example")->primary == kAlice);
    }

    TEST_CASE("a non-adopter's mailbox simply accumulates") {
        Simulation sim({}, provider());
        AccountOptions a;
        a.address = kAlice;
        sim.create_account(a);
        AccountOptions c;
        c.address = "carol@example.com";
        c.attach_engine = false;
        sim.create_account(c);
        CHECK_THROWS_AS(sim.user_send("carol@example.com", kAlice, "s", "b"), std::invalid_argument);
        sim.user_send(kAlice, "carol@example.com", "s", "secret words");
        sim.advance_clock(10 * kDay);
        const auto& box = sim.mailbox("carol@example.com");
        CHECK(box.size() == 2 + 2 * static_cast<std::size_t>(PolicyConfig{}.max_resends));
        CHECK(events_where(sim.transcript(), EventType::PermanentFailure, "process", "key_exchange").size() == 1);
        for (const auto& raw : sim.wire_log()) {
            CHECK(to_string(raw).find("secret words") == std::string::npos);
        }
    }
}

TEST_SUITE("clock") {
    TEST_CASE("an idle network only ticks") {
        Simulation sim({}, provider());
        const auto events = sim.advance_clock(5 * kHour);
        REQUIRE(events.size() == 5);
        for (std::size_t i = 0; i < events.size(); ++i) {
            CHECK(events[i].type == EventType::Tick);
            CHECK(events[i].at == static_cast<Instant>(i + 1) * kHour);
            CHECK(events[i].id == i + 1);
        }
        CHECK(sim.now() == 5 * kHour);
        CHECK_THROWS_AS(sim.advance_clock(kHour), std::invalid_argument);
    }

    TEST_CASE("advancing in steps equals advancing at once") {
        auto split = two_party();
        auto whole = two_party();
        split->user_send(kAlice, kBob, "s", "b");
        whole->user_send(kAlice, kBob, "s", "b");
        for (Instant t = 7; t <= 2 * kDay; t += 7 * kMinute + 3) split->advance_clock(t);
        split->advance_clock(2 * kDay);
        whole->advance_clock(2 * kDay);
        CHECK(transcript_to_jsonl(split->transcript()) == transcript_to_jsonl(whole->transcript()));
    }

    TEST_CASE("deliveries due at a tick run before it") {
        SimConfig cfg;
        cfg.transit_delay = kHour;
        Simulation sim(cfg, provider());
        AccountOptions a;
        a.address = kAlice;
        AccountOptions b;
        b.address = kBob;
        sim.create_account(a);
        sim.create_account(b);
        sim.user_send(kAlice, kBob, "s", "b");
        const auto events = sim.advance_clock(kHour);
        std::size_t first_deliver = 0, first_tick = 0;
        for (const auto& e : events) {
            if (e.type == EventType::Deliver && !first_deliver) first_deliver = e.id;
            if (e.type == EventType::Tick && !first_tick) first_tick = e.id;
        }
        REQUIRE(first_deliver);
        REQUIRE(first_tick);
        CHECK(first_deliver < first_tick);
    }

    TEST_CASE("finish appends summaries once") {
        auto sim = two_party();
        sim->finish();
        sim->finish();
        const auto& t = sim->transcript();
        CHECK(t.back().type == EventType::End);
        CHECK(t.back().detail["events"] == t.size());
        CHECK(count_events(t, EventType::End) == 1);
        CHECK(count_events(t, EventType::Convergence) == 1);
        CHECK_THROWS_AS(sim->advance_clock(kDay), std::logic_error);
    }
}

TEST_SUITE("network") {
    TEST_CASE("loss is deterministic per seed") {
        SimConfig cfg;
        cfg.seed = 99;
        cfg.loss_rate = 0.5;
        const auto a = transcript_to_jsonl(conversation(cfg)->transcript());
        const auto b = transcript_to_jsonl(conversation(cfg)->transcript());
        CHECK(a == b);
        cfg.seed = 100;
        CHECK(transcript_to_jsonl(conversation(cfg)->transcript()) != a);
    }

    TEST_CASE("loss rate zero drops nothing and one drops everything") {
        SimConfig cfg;
        auto clean = conversation(cfg);
        CHECK(count_events(clean->transcript(), EventType::Drop) == 0);
        cfg.loss_rate = 1.0;
        auto dead = conversation(cfg, {}, {}, false, 10 * kDay);
        const auto& t = dead->transcript();
        CHECK(count_events(t, EventType::Deliver) == 0);
        CHECK(count_events(t, EventType::Drop) == count_events(t, EventType::MailOut));
        CHECK(count_events(t, EventType::PermanentFailure) == 2);
        SimConfig bad;
        bad.loss_rate = 1.5;
        CHECK_THROWS_AS(Simulation(bad, provider()), std::invalid_argument);
    }

    TEST_CASE("mail to an unknown address bounces") {
        auto sim = two_party();
        sim->user_send(kAlice, "nobody@nowhere", "s", "b", true);
        const auto bounces = events_where(sim->transcript(), EventType::Bounce, "to", "nobody@nowhere");
        CHECK(bounces.size() == 1);
    }

    TEST_CASE("commands on foreign or missing slots are no-ops") {
        auto sim = two_party();
        sim->user_send(kAlice, kBob, "s", "b", true);
        sim->advance_clock(kHour);
        const auto slot = sim->mailbox(kBob).at(0).slot;
        sim->execute_server_command(kAlice, {ServerCommand::Op::Delete, kBob, slot, {}});
        CHECK(sim->mailbox(kBob).size() == 1);
        CHECK(sim->transcript().back().detail["noop"] == true);
        sim->execute_server_command(kBob, {ServerCommand::Op::Delete, kBob, slot + 100, {}});
        CHECK(sim->transcript().back().detail["noop"] == true);
        sim->execute_server_command(kBob, {ServerCommand::Op::Delete, kBob, slot, {}});
        CHECK(sim->mailbox(kBob).empty());
        CHECK(sim->transcript().back().detail["noop"] == false);
    }

    TEST_CASE("the exchange leaves no password mail and no readable original on the server") {
        auto sim = two_party();
        sim->user_send(kAlice, kBob, "s", "only for bob");
        sim->advance_clock(kDay);
        for (const auto& stored : sim->mailbox(kBob)) {
            const auto m = parse_message(stored.raw);
            CHECK(m.kind != MessageKind::PasswordMail);
            CHECK(m.kind != MessageKind::KeyExchangeMail);
            CHECK(to_string(stored.raw).find("only for bob") == std::string::npos);
        }
        CHECK(count_events(sim->transcript(), EventType::UserPrompt) == 0);
    }
}

TEST_SUITE("adversaries") {
    TEST_CASE("a mailbox compromise after the exchange learns nothing") {
        SimConfig cfg;
        cfg.adversary = {AdversaryMode::CompromiseAfter, 2 * kDay};
        auto sim = conversation(cfg);
        const auto& r = report(sim->transcript());
        CHECK(r["secret_observed"] == false);
        CHECK(r["plaintext_observed"] == false);
        CHECK(r["observed_items"].get<std::size_t>() > 0);
        CHECK(convergence(sim->transcript())["a_holds_b"] == "authentic");
    }

    TEST_CASE("a compromise from the start sees the password") {
        SimConfig cfg;
        cfg.adversary = {AdversaryMode::CompromiseAfter, 0};
        auto sim = conversation(cfg);
        CHECK(report(sim->transcript())["secret_observed"] == true);
    }

    TEST_CASE("an active man in the middle during the exchange wins") {
        SimConfig cfg;
        cfg.adversary = {AdversaryMode::ActiveMitmDuringExchange, 0};
        auto sim = conversation(cfg);
        const auto& t = sim->transcript();
        const auto& c = convergence(t);
        CHECK(c["a_holds_b"] == "foreign");
        CHECK(c["b_holds_a"] == "foreign");
        const auto& r = report(t);
        CHECK(r["plaintext_observed"] == true);
        CHECK(r["compromised_pairs"].size() == 1);
        CHECK(count_events(t, EventType::UserPrompt) == 0);
        // Both users still read what the other wrote.
        REQUIRE(sim->engine(kBob)->inbox().size() >= 1);
        CHECK(sim->engine(kBob)->inbox()[0].body == "Meet at noon by the fountain");
    }

    TEST_CASE("a main-channel attacker wins without side channels and loses with them") {
        SimConfig cfg;
        cfg.adversary = {AdversaryMode::MainChannelOnlyMitm, 0};
        auto blind = conversation(cfg);
        CHECK(convergence(blind->transcript())["a_holds_b"] == "foreign");

        PolicyConfig p;
        p.side_channels_enabled = true;
        auto guarded = conversation(cfg, p, p, true);
        const auto& t = guarded->transcript();
        const auto& c = convergence(t);
        CHECK(c["a_holds_b"] == "authentic");
        CHECK(c["b_holds_a"] == "authentic");
        CHECK(report(t)["plaintext_observed"] == false);
        CHECK(report(t)["secret_observed"] == false);
    }

    TEST_CASE("forged rekey replies never install a certificate") {
        SimConfig cfg;
        cfg.adversary = {AdversaryMode::ActiveMitmDuringExchange, 0};
        auto sim = std::make_unique<Simulation>(cfg, provider());
        AccountOptions a;
        a.address = kAlice;
        a.own_key_lifetime = 30 * kDay;
        AccountOptions b = a;
        b.address = kBob;
        sim->create_account(a);
        sim->create_account(b);
        sim->introduce(kAlice, kBob);
        sim->advance_clock(40 * kDay);
        sim->finish();
        const auto& t = sim->transcript();
        CHECK(count_events(t, EventType::Adversary) > 0);
        const auto& c = convergence(t);
        // The genuine replies are swallowed, so the certificates lapse instead.
        CHECK(c["a_holds_b"] == "none");
        CHECK(c["b_holds_a"] == "none");
        CHECK(events_where(t, EventType::PermanentFailure, "process", "rekeying").size() == 2);
        CHECK(events_where(t, EventType::KeystoreChange, "change", "peer_future_cert_stored").empty());
    }
}

TEST_SUITE("rekeying in the network") {
    TEST_CASE("requests go out on the first tick inside the window") {
        auto sim = std::make_unique<Simulation>(SimConfig{}, provider());
        AccountOptions a;
        a.address = kAlice;
        a.own_key_lifetime = 30 * kDay;
        AccountOptions b = a;
        b.address = kBob;
        sim->create_account(a);
        sim->create_account(b);
        sim->introduce(kAlice, kBob);
        sim->advance_clock(31 * kDay);
        sim->finish();
        const auto& t = sim->transcript();
        const auto reqs = events_where(t, EventType::MailOut, "kind", "RekeyRequest");
        // Certificates end at 30d; 30d - 14d = 16d = 1382400 s, a whole hour.
        REQUIRE(reqs.size() == 2);
        for (const auto& e : reqs) CHECK(e.at == 1382400);
        CHECK(events_where(t, EventType::MailOut, "kind", "RekeyReply").size() == 2);
        CHECK(count_events(t, EventType::PermanentFailure) == 0);
        CHECK(convergence(t)["a_holds_b"] == "authentic");
    }
}

TEST_SUITE("golden") {
    TEST_CASE("two-party exchange transcript is stable") {
        auto run = play_scenario(load_scenario(scenario_path("happy_path")), provider());
        const auto text = transcript_to_jsonl(run.sim->transcript());
        CHECK(text == read_file(std::string(AUTOKEY_SOURCE_DIR) + "/tests/golden/two_party_exchange.jsonl"));
        CHECK(transcript_from_jsonl(text).size() == run.sim->transcript().size());
    }

    TEST_CASE("two-party exchange follows the expected skeleton") {
        auto run = play_scenario(load_scenario(scenario_path("happy_path")), provider());
        // Non-tick mail events in order, as (party, type, kind).
        std::vector<std::string> got;
        for (const auto& e : run.sim->transcript()) {
            if (e.at > 2 * kMinute) break;
            if (e.type == EventType::MailOut) got.push_back(e.party + " out " + e.detail["kind"].get<std::string>());
            if (e.type == EventType::ServerDelete) got.push_back(e.party + " delete");
            if (e.type == EventType::ServerReplace) got.push_back(e.party + " replace");
        }
        const std::vector<std::string> expected = {
            kAlice + " out PasswordMail",
            kAlice + " out KeyExchangeMail",
            kBob + " delete",
            kBob + " replace",
            kBob + " out KeyExchangeReply",
            kAlice + " delete",
            kAlice + " out UserMail",
        };
        CHECK(got == expected);
    }
}

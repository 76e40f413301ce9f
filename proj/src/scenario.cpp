#include "autokey/scenario.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace autokey {

namespace {

void reject_unknown(const Json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    for (const auto& [key, _] : obj.items()) {
        bool ok = false;
        for (const auto* a : allowed) ok = ok || key == a;
        if (!ok) throw ParseError(where + "." + key, "unknown field");
    }
}

const Json& require(const Json& obj, const char* key, const std::string& where) {
    auto it = obj.find(key);
    if (it == obj.end()) throw ParseError(where + "." + key, "missing");
    return *it;
}

std::string as_string(const Json& v, const std::string& field) {
    if (!v.is_string()) throw ParseError(field, "expected a string");
    return v.get<std::string>();
}

bool as_bool(const Json& v, const std::string& field) {
    if (!v.is_boolean()) throw ParseError(field, "expected true or false");
    return v.get<bool>();
}

std::vector<Address> as_addresses(const Json& v, const std::string& field) {
    if (!v.is_array()) throw ParseError(field, "expected a list of addresses");
    std::vector<Address> out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        out.push_back(as_string(v[i], field + "[" + std::to_string(i) + "]"));
    }
    return out;
}

PolicyConfig parse_policy(const Json& j, PolicyConfig p, const std::string& where) {
    if (!j.is_object()) throw ParseError(where, "expected an object");
    reject_unknown(j, where,
                   {"max_check", "leap_of_faith_periode", "resend_interval", "max_resends",
                    "leap_of_faith", "side_channels", "encrypt_by_default"});
    if (j.contains("max_check")) p.max_check = parse_duration(j["max_check"], where + ".max_check");
    if (j.contains("leap_of_faith_periode")) {
        p.leap_of_faith_periode =
            parse_duration(j["leap_of_faith_periode"], where + ".leap_of_faith_periode");
    }
    if (j.contains("resend_interval")) {
        p.resend_interval = parse_duration(j["resend_interval"], where + ".resend_interval");
    }
    if (j.contains("max_resends")) {
        if (!j["max_resends"].is_number_integer()) {
            throw ParseError(where + ".max_resends", "expected an integer");
        }
        p.max_resends = j["max_resends"].get<int>();
    }
    if (j.contains("leap_of_faith")) p.leap_of_faith_enabled = as_bool(j["leap_of_faith"], where + ".leap_of_faith");
    if (j.contains("side_channels")) {
        p.side_channels_enabled = as_bool(j["side_channels"], where + ".side_channels");
    }
    if (j.contains("encrypt_by_default")) {
        p.encrypt_by_default = as_bool(j["encrypt_by_default"], where + ".encrypt_by_default");
    }
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw ParseError(where, e.what());
    }
    return p;
}

AccountSpec parse_account(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where, "expected an object");
    reject_unknown(j, where,
                   {"address", "side_channels", "engine", "questionnaire", "policy", "own_key_lifetime"});
    AccountSpec a;
    a.address = as_string(require(j, "address", where), where + ".address");
    if (j.contains("side_channels")) a.side_channels = as_addresses(j["side_channels"], where + ".side_channels");
    if (j.contains("engine")) a.engine = as_bool(j["engine"], where + ".engine");
    PolicyConfig base;
    if (j.contains("questionnaire")) {
        const auto& q = j["questionnaire"];
        const auto field = where + ".questionnaire";
        if (!q.is_array() || q.size() != kQuestionnaire.size()) {
            throw ParseError(field, "expected " + std::to_string(kQuestionnaire.size()) + " answers");
        }
        std::vector<bool> answers;
        for (std::size_t i = 0; i < q.size(); ++i) {
            answers.push_back(as_bool(q[i], field + "[" + std::to_string(i) + "]"));
        }
        base = apply_questionnaire(answers);
        a.questionnaire = std::move(answers);
    }
    a.policy = j.contains("policy") ? parse_policy(j["policy"], base, where + ".policy") : base;
    if (j.contains("own_key_lifetime")) {
        a.own_key_lifetime = parse_duration(j["own_key_lifetime"], where + ".own_key_lifetime");
        if (a.own_key_lifetime <= 0) throw ParseError(where + ".own_key_lifetime", "must be positive");
    }
    return a;
}

SendSpec parse_send(const Json& j, const std::string& where) {
    if (!j.is_object()) throw ParseError(where, "expected an object");
    reject_unknown(j, where, {"from", "to", "subject", "body", "postcard"});
    SendSpec s;
    s.from = as_string(require(j, "from", where), where + ".from");
    s.to = as_string(require(j, "to", where), where + ".to");
    if (j.contains("subject")) s.subject = as_string(j["subject"], where + ".subject");
    s.body = as_string(require(j, "body", where), where + ".body");
    if (j.contains("postcard")) s.postcard = as_bool(j["postcard"], where + ".postcard");
    return s;
}

}  // namespace

Duration parse_duration(const Json& value, const std::string& field) {
    if (value.is_number_integer()) return value.get<Duration>();
    if (!value.is_string()) throw ParseError(field, "expected a duration such as \"36h\"");
    const auto s = value.get<std::string>();
    if (s.empty()) throw ParseError(field, "empty duration");
    Duration unit = 1;
    std::string digits = s;
    switch (s.back()) {
        case 's': unit = 1; digits.pop_back(); break;
        case 'm': unit = kMinute; digits.pop_back(); break;
        case 'h': unit = kHour; digits.pop_back(); break;
        case 'd': unit = kDay; digits.pop_back(); break;
        default: break;
    }
    if (digits.empty() || digits.size() > 12 ||
        digits.find_first_not_of("0123456789") != std::string::npos) {
        throw ParseError(field, "malformed duration '" + s + "'");
    }
    return std::stoll(digits) * unit;
}

ScenarioSpec parse_scenario(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError("scenario", e.what());
    }
    const std::string root = "scenario";
    if (!j.is_object()) throw ParseError(root, "expected an object");
    reject_unknown(j, root,
                   {"name", "seed", "loss_rate", "adversary", "accounts", "introductions", "timeline",
                    "until"});

    ScenarioSpec spec;
    spec.name = j.contains("name") ? as_string(j["name"], "scenario.name") : "unnamed";
    const auto& seed = require(j, "seed", root);
    if (!seed.is_number_unsigned()) throw ParseError("scenario.seed", "expected a non-negative integer");
    spec.seed = seed.get<std::uint64_t>();

    if (j.contains("loss_rate")) {
        const auto& l = j["loss_rate"];
        if (!l.is_number() || l.get<double>() < 0.0 || l.get<double>() > 1.0) {
            throw ParseError("scenario.loss_rate", "expected a number in [0, 1]");
        }
        spec.loss_rate = l.get<double>();
    }

    if (j.contains("adversary")) {
        const auto& a = j["adversary"];
        if (!a.is_object()) throw ParseError("scenario.adversary", "expected an object");
        reject_unknown(a, "scenario.adversary", {"mode", "at"});
        spec.adversary.mode =
            adversary_mode_from_string(as_string(require(a, "mode", "scenario.adversary"), "scenario.adversary.mode"));
        if (a.contains("at")) spec.adversary.compromise_at = parse_duration(a["at"], "scenario.adversary.at");
        if (spec.adversary.mode == AdversaryMode::CompromiseAfter && !a.contains("at")) {
            throw ParseError("scenario.adversary.at", "compromise_after needs an instant");
        }
    }

    const auto& accounts = require(j, "accounts", root);
    if (!accounts.is_array() || accounts.empty()) {
        throw ParseError("scenario.accounts", "expected a non-empty list");
    }
    std::set<Address> addresses, engines;
    for (std::size_t i = 0; i < accounts.size(); ++i) {
        const auto where = "scenario.accounts[" + std::to_string(i) + "]";
        auto a = parse_account(accounts[i], where);
        for (const auto& addr : a.side_channels) {
            if (!addresses.insert(addr).second) throw ParseError(where, "address reused: " + addr);
        }
        if (!addresses.insert(a.address).second) throw ParseError(where, "address reused: " + a.address);
        if (a.engine) engines.insert(a.address);
        spec.accounts.push_back(std::move(a));
    }

    if (j.contains("introductions")) {
        const auto& intro = j["introductions"];
        if (!intro.is_array()) throw ParseError("scenario.introductions", "expected a list of pairs");
        for (std::size_t i = 0; i < intro.size(); ++i) {
            const auto where = "scenario.introductions[" + std::to_string(i) + "]";
            const auto pair = as_addresses(intro[i], where);
            if (pair.size() != 2 || pair[0] == pair[1] || !engines.count(pair[0]) ||
                !engines.count(pair[1])) {
                throw ParseError(where, "expected two distinct engine accounts");
            }
            spec.introductions.emplace_back(pair[0], pair[1]);
        }
    }

    if (j.contains("timeline")) {
        const auto& tl = j["timeline"];
        if (!tl.is_array()) throw ParseError("scenario.timeline", "expected a list");
        for (std::size_t i = 0; i < tl.size(); ++i) {
            const auto where = "scenario.timeline[" + std::to_string(i) + "]";
            if (!tl[i].is_object()) throw ParseError(where, "expected an object");
            reject_unknown(tl[i], where, {"at", "send"});
            TimelineEntry e;
            e.at = parse_duration(require(tl[i], "at", where), where + ".at");
            if (!spec.timeline.empty() && e.at <= spec.timeline.back().at) {
                throw ParseError(where + ".at", "timeline instants must be strictly increasing");
            }
            if (e.at < 0) throw ParseError(where + ".at", "negative instant");
            if (tl[i].contains("send")) {
                e.send = parse_send(tl[i]["send"], where + ".send");
                if (!engines.count(e.send->from)) {
                    throw ParseError(where + ".send.from", "not an engine account: " + e.send->from);
                }
            }
            spec.timeline.push_back(std::move(e));
        }
    }

    spec.until = parse_duration(require(j, "until", root), "scenario.until");
    if (!spec.timeline.empty() && spec.until < spec.timeline.back().at) {
        throw ParseError("scenario.until", "ends before the last timeline entry");
    }
    return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("scenario", "cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

ScenarioRun play_scenario(const ScenarioSpec& spec, const CryptoProvider& crypto,
                          const EngineFactory& factory, std::vector<Event>* partial) {
    SimConfig cfg;
    cfg.seed = spec.seed;
    cfg.loss_rate = spec.loss_rate;
    cfg.adversary = spec.adversary;
    ScenarioRun run{std::make_unique<Simulation>(cfg, crypto)};
    auto& sim = *run.sim;
    try {
        for (const auto& a : spec.accounts) {
            AccountOptions o;
            o.address = a.address;
            o.side_channels = a.side_channels;
            o.attach_engine = a.engine;
            o.policy = a.policy;
            o.own_key_lifetime = a.own_key_lifetime;
            o.factory = factory;
            sim.create_account(std::move(o));
        }
        for (const auto& [a, b] : spec.introductions) sim.introduce(a, b);
        for (const auto& e : spec.timeline) {
            sim.advance_clock(e.at);
            if (e.send) {
                sim.user_send(e.send->from, e.send->to, e.send->subject, e.send->body, e.send->postcard);
            }
        }
        sim.advance_clock(spec.until);
        sim.finish();
    } catch (const InvariantViolation&) {
        if (partial) *partial = sim.transcript();
        throw;
    }
    return run;
}

}  // namespace autokey

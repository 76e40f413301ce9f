#include "autokey/audit.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>

#include "autokey/texts.hpp"

namespace autokey {

namespace {

using Ids = std::vector<std::uint64_t>;

const std::map<std::string, std::string>& expected_texts() {
    static const std::map<std::string, std::string> m = {
        {"PasswordMail", "password_notice"},
        {"KeyExchangeMail", "key_exchange_notice"},
        {"KeyExchangeReply", "key_exchange_reply_notice"},
        {"RekeyRequest", "rekey_request_notice"},
    };
    return m;
}

std::string str_field(const Json& j, const char* key) {
    auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get<std::string>() : std::string();
}

bool bool_field(const Json& j, const char* key) {
    auto it = j.find(key);
    return it != j.end() && it->is_boolean() && it->get<bool>();
}

struct TextCheck {
    Ids ok;
    Ids bad;
};

// Fixed protocol texts on every human-facing mail an engine sent, the
// explaining text on every opaque document, and the secret-message subject
// on every protected user mail.
TextCheck check_texts(const std::vector<Event>& t) {
    TextCheck c;
    for (const auto& e : t) {
        if (e.type == EventType::MailOut && bool_field(e.detail, "engine")) {
            const auto kind = str_field(e.detail, "kind");
            if (kind == "UserMail") {
                const auto expected = texts::secret_subject(str_field(e.detail, "to"));
                (str_field(e.detail, "subject") == expected ? c.ok : c.bad).push_back(e.id);
                continue;
            }
            auto it = expected_texts().find(kind);
            if (it == expected_texts().end()) continue;
            const auto& found = e.detail.value("texts", Json::array());
            const bool present = std::find(found.begin(), found.end(), it->second) != found.end();
            (present ? c.ok : c.bad).push_back(e.id);
        } else if (e.type == EventType::UserSend && str_field(e.detail, "outcome") == "key_exchange") {
            (str_field(e.detail, "document_text") == "opaque_document_notice" ? c.ok : c.bad)
                .push_back(e.id);
        }
    }
    return c;
}

GuidelineResult text_proxy(std::string id, const TextCheck& c, std::string proxy) {
    GuidelineResult r;
    r.guideline = std::move(id);
    r.partial = true;
    r.proxy = std::move(proxy);
    if (!c.bad.empty()) {
        r.verdict = Verdict::Fail;
        r.evidence = c.bad;
    } else if (!c.ok.empty()) {
        r.verdict = Verdict::Pass;
        r.evidence = c.ok;
    } else {
        r.note = "vacuous: no human-facing protocol mail in transcript";
    }
    return r;
}

}  // namespace

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::NotApplicable: return "not-applicable";
    }
    return "?";
}

bool AuditReport::passed() const {
    return std::none_of(guidelines.begin(), guidelines.end(),
                        [](const GuidelineResult& g) { return g.verdict == Verdict::Fail; });
}

const GuidelineResult& AuditReport::guideline(std::string_view id) const {
    for (const auto& g : guidelines) {
        if (g.guideline == id) return g;
    }
    throw std::out_of_range("no guideline " + std::string(id));
}

const SecurityFinding* AuditReport::finding(std::string_view name) const {
    for (const auto& f : findings) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

AuditReport evaluate_transcript(const std::vector<Event>& t, const Json& metadata) {
    if (t.empty() || t.back().type != EventType::End) {
        throw AuditError("transcript is truncated: no terminal event");
    }
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i].id != i + 1) throw AuditError("event ids are not consecutive at position " + std::to_string(i));
        if (i > 0 && t[i].at < t[i - 1].at) throw AuditError("time decreases at event " + std::to_string(t[i].id));
        if (t[i].type == EventType::End && i + 1 != t.size()) {
            throw AuditError("events after terminal event");
        }
    }
    const auto end_id = t.back().id;

    AuditReport report;
    report.metadata = metadata;

    Ids prompts, policies, postcard_sends, blocks, unguided_blocks;
    bool postcard_available = false;
    std::map<std::string, std::pair<std::string, std::uint64_t>> outcome_by_id;
    std::set<std::string> user_ids;
    for (const auto& e : t) {
        switch (e.type) {
            case EventType::UserPrompt: prompts.push_back(e.id); break;
            case EventType::PolicyConfigured:
                if (bool_field(e.detail, "engine")) {
                    policies.push_back(e.id);
                    postcard_available = postcard_available || bool_field(e.detail, "postcard_available");
                }
                break;
            case EventType::UserRequest: user_ids.insert(str_field(e.detail, "message_id")); break;
            case EventType::UserSend: {
                const auto outcome = str_field(e.detail, "outcome");
                const auto id = str_field(e.detail, "message_id");
                // A deferred mail later released keeps its first decision.
                if (!outcome_by_id.count(id) || outcome == "released_encrypted") {
                    outcome_by_id[id] = {outcome, e.id};
                }
                if (outcome == "postcard_override") postcard_sends.push_back(e.id);
                break;
            }
            case EventType::PolicyBlock:
                blocks.push_back(e.id);
                if (str_field(e.detail, "reason").empty()) unguided_blocks.push_back(e.id);
                break;
            default: break;
        }
    }

    const auto texts = check_texts(t);
    report.guidelines.push_back(
        text_proxy("G1", texts, "fixed explanatory texts and secret-message subjects in human-facing mails"));

    // G2: the user can configure trust management and send a postcard.
    {
        GuidelineResult r;
        r.guideline = "G2";
        r.proxy = "policy configurable per party and postcard override available or exercised";
        if (policies.empty()) {
            r.note = "vacuous: no engine-equipped party";
        } else if (postcard_available || !postcard_sends.empty()) {
            r.verdict = Verdict::Pass;
            r.evidence = policies;
            r.evidence.insert(r.evidence.end(), postcard_sends.begin(), postcard_sends.end());
        } else {
            r.verdict = Verdict::Fail;
            r.evidence = policies;
            r.note = "no postcard override offered";
        }
        report.guidelines.push_back(std::move(r));
    }

    auto zero_prompts = [&](std::string id, std::string proxy) {
        GuidelineResult r;
        r.guideline = std::move(id);
        r.proxy = std::move(proxy);
        if (prompts.empty()) {
            r.verdict = Verdict::Pass;
            r.evidence = {end_id};
        } else {
            r.verdict = Verdict::Fail;
            r.evidence = prompts;
        }
        return r;
    };
    report.guidelines.push_back(zero_prompts("G3", "zero user-prompt events"));
    report.guidelines.push_back(zero_prompts("G4", "zero user-prompt events"));
    report.guidelines.push_back(zero_prompts("G5", "zero user-prompt events"));

    // G6: protected by default; only an explicit decision yields a postcard.
    {
        GuidelineResult r;
        r.guideline = "G6";
        r.proxy = "every user mail left the engine EncryptedSigned unless sent as a postcard by override";
        Ids ok, bad;
        for (const auto& e : t) {
            if (e.type != EventType::MailOut || !bool_field(e.detail, "engine")) continue;
            const auto kind = str_field(e.detail, "kind");
            const auto id = str_field(e.detail, "message_id");
            const bool user_mail = user_ids.count(id) > 0;
            if (kind == "UserMail") {
                (str_field(e.detail, "protection") == "EncryptedSigned" ? ok : bad).push_back(e.id);
            } else if (kind == "Postcard") {
                auto it = outcome_by_id.find(id);
                const bool overridden = it != outcome_by_id.end() &&
                                        (it->second.first == "postcard_override" ||
                                         it->second.first == "postcard_policy");
                if (overridden) {
                    ok.push_back(e.id);
                    ok.push_back(it->second.second);
                } else {
                    bad.push_back(e.id);
                }
            } else if (user_mail) {
                bad.push_back(e.id);
            }
        }
        if (!bad.empty()) {
            r.verdict = Verdict::Fail;
            r.evidence = bad;
        } else if (!ok.empty()) {
            r.verdict = Verdict::Pass;
            r.evidence = ok;
        } else {
            r.note = "vacuous: no user mail left any engine";
        }
        report.guidelines.push_back(std::move(r));
    }

    {
        auto r = zero_prompts("G7", "zero user-prompt events and fixed non-alarming protocol texts");
        r.partial = true;
        if (r.verdict == Verdict::Pass && !texts.bad.empty()) {
            r.verdict = Verdict::Fail;
            r.evidence = texts.bad;
        }
        r.note = "G7 and G8 share the zero-prompt proxy; their wording overlaps";
        report.guidelines.push_back(std::move(r));
    }
    {
        auto r = zero_prompts("G8", "zero user-prompt events and every blocked send states its reason");
        r.partial = true;
        if (r.verdict == Verdict::Pass && !unguided_blocks.empty()) {
            r.verdict = Verdict::Fail;
            r.evidence = unguided_blocks;
        } else if (r.verdict == Verdict::Pass) {
            r.evidence.insert(r.evidence.end(), blocks.begin(), blocks.end());
        }
        r.note = "G7 and G8 share the zero-prompt proxy; their wording overlaps";
        report.guidelines.push_back(std::move(r));
    }
    {
        auto r = text_proxy("G9", texts, "each kind of human-facing mail carries its one fixed text");
        r.note = "look and feel inside a mail client is not checkable";
        report.guidelines.push_back(std::move(r));
    }

    // Security findings.
    Ids convergence_ids, authentic_ids, foreign_ids, failures;
    const Event* adversary_report = nullptr;
    for (const auto& e : t) {
        if (e.type == EventType::Convergence) {
            const auto a = str_field(e.detail, "a_holds_b");
            const auto b = str_field(e.detail, "b_holds_a");
            if (a == "none" && b == "none") continue;
            convergence_ids.push_back(e.id);
            if (a == "authentic" && b == "authentic") authentic_ids.push_back(e.id);
            if (a == "foreign" || b == "foreign") foreign_ids.push_back(e.id);
        } else if (e.type == EventType::PermanentFailure) {
            failures.push_back(e.id);
        } else if (e.type == EventType::AdversaryReport) {
            adversary_report = &e;
        }
    }
    const Ids adv_ids = adversary_report ? Ids{adversary_report->id} : Ids{end_id};
    const Json adv = adversary_report ? adversary_report->detail : Json::object();

    report.findings.push_back(
        {"convergence",
         convergence_ids.empty() ? "none"
         : authentic_ids.size() == convergence_ids.size() ? "achieved"
         : foreign_ids.empty() ? "partial"
                               : "compromised",
         convergence_ids});

    const auto mode = str_field(adv, "mode");
    const bool mitm_mode = mode == "active_mitm" || mode == "main_channel_only_mitm";
    const bool compromised = !foreign_ids.empty() || (adv.contains("compromised_pairs") &&
                                                      !adv["compromised_pairs"].empty());
    report.findings.push_back({"mitm",
                               compromised  ? "MITM succeeded"
                               : mitm_mode  ? "MITM failed"
                                            : "not attempted",
                               compromised && !foreign_ids.empty() ? foreign_ids : adv_ids});
    report.findings.push_back(
        {"secret_leak", bool_field(adv, "secret_observed") ? "leak detected" : "none", adv_ids});
    report.findings.push_back(
        {"plaintext_leak", bool_field(adv, "plaintext_observed") ? "leak detected" : "none", adv_ids});
    report.findings.push_back({"permanent_failures", std::to_string(failures.size()),
                               failures.empty() ? Ids{end_id} : failures});
    report.findings.push_back(
        {"policy_blocks", std::to_string(blocks.size()), blocks.empty() ? Ids{end_id} : blocks});
    return report;
}

Json report_to_json(const AuditReport& report) {
    Json j;
    j["metadata"] = report.metadata;
    j["passed"] = report.passed();
    Json gs = Json::array();
    for (const auto& g : report.guidelines) {
        Json x;
        x["guideline"] = g.guideline;
        x["verdict"] = to_string(g.verdict);
        x["partial"] = g.partial;
        x["proxy"] = g.proxy;
        x["evidence"] = g.evidence;
        if (!g.note.empty()) x["note"] = g.note;
        gs.push_back(std::move(x));
    }
    j["guidelines"] = std::move(gs);
    Json fs = Json::array();
    for (const auto& f : report.findings) {
        Json x;
        x["finding"] = f.name;
        x["value"] = f.value;
        x["evidence"] = f.evidence;
        fs.push_back(std::move(x));
    }
    j["findings"] = std::move(fs);
    return j;
}

namespace {

std::string cite(const Ids& ids) {
    constexpr std::size_t kShown = 6;
    std::string out;
    for (std::size_t i = 0; i < ids.size() && i < kShown; ++i) {
        if (i) out += ",";
        out += "#" + std::to_string(ids[i]);
    }
    if (ids.size() > kShown) out += ",+" + std::to_string(ids.size() - kShown);
    return out;
}

std::string pad(std::string s, std::size_t w) {
    if (s.size() < w) s.append(w - s.size(), ' ');
    return s;
}

}  // namespace

std::string report_table(const AuditReport& report) {
    std::ostringstream os;
    os << pad("guideline", 11) << pad("verdict", 26) << "evidence\n";
    for (const auto& g : report.guidelines) {
        std::string v(to_string(g.verdict));
        if (g.partial) v += " (partial)";
        os << pad(g.guideline, 11) << pad(v, 26) << (g.evidence.empty() ? "-" : cite(g.evidence))
           << "\n";
        os << "           " << g.proxy << "\n";
        if (!g.note.empty()) os << "           note: " << g.note << "\n";
    }
    os << "\n" << pad("finding", 20) << pad("value", 18) << "evidence\n";
    for (const auto& f : report.findings) {
        os << pad(f.name, 20) << pad(f.value, 18) << cite(f.evidence) << "\n";
    }
    os << "\noverall: " << (report.passed() ? "pass" : "fail") << "\n";
    return os.str();
}

}  // namespace autokey

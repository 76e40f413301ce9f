#include "autokey/events.hpp"

#include <array>

namespace autokey {

namespace {

constexpr std::array<std::pair<EventType, std::string_view>, 19> kNames = {{
    {EventType::PolicyConfigured, "PolicyConfigured"},
    {EventType::UserRequest, "UserRequest"},
    {EventType::UserSend, "UserSend"},
    {EventType::UserPrompt, "UserPrompt"},
    {EventType::MailOut, "MailOut"},
    {EventType::Drop, "Drop"},
    {EventType::Bounce, "Bounce"},
    {EventType::Deliver, "Deliver"},
    {EventType::MailIn, "MailIn"},
    {EventType::ServerDelete, "ServerDelete"},
    {EventType::ServerReplace, "ServerReplace"},
    {EventType::KeystoreChange, "KeystoreChange"},
    {EventType::PolicyBlock, "PolicyBlock"},
    {EventType::PermanentFailure, "PermanentFailure"},
    {EventType::Adversary, "Adversary"},
    {EventType::Tick, "Tick"},
    {EventType::Convergence, "Convergence"},
    {EventType::AdversaryReport, "AdversaryReport"},
    {EventType::End, "End"},
}};

}  // namespace

std::string_view to_string(EventType t) {
    for (const auto& [type, name] : kNames) {
        if (type == t) return name;
    }
    return "?";
}

EventType event_type_from_string(std::string_view s) {
    for (const auto& [type, name] : kNames) {
        if (name == s) return type;
    }
    throw ParseError("type", "unknown event type '" + std::string(s) + "'");
}

Json event_to_json(const Event& e) {
    Json j;
    j["id"] = e.id;
    j["t"] = e.at;
    j["type"] = to_string(e.type);
    j["party"] = e.party;
    j["detail"] = e.detail;
    return j;
}

Event event_from_json(const Json& j) {
    try {
        Event e;
        e.id = j.at("id").get<std::uint64_t>();
        e.at = j.at("t").get<Instant>();
        e.type = event_type_from_string(j.at("type").get<std::string>());
        e.party = j.at("party").get<std::string>();
        e.detail = j.at("detail");
        return e;
    } catch (const Json::exception& ex) {
        throw ParseError("event", ex.what());
    }
}

std::string transcript_to_jsonl(const std::vector<Event>& events) {
    std::string out;
    for (const auto& e : events) {
        out += event_to_json(e).dump();
        out += '\n';
    }
    return out;
}

std::vector<Event> transcript_from_jsonl(std::string_view text) {
    std::vector<Event> out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        const auto line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (line.empty()) continue;
        Json j = Json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("line " + std::to_string(line_no), "invalid JSON");
        }
        try {
            out.push_back(event_from_json(j));
        } catch (const ParseError& e) {
            throw ParseError("line " + std::to_string(line_no), e.what());
        }
    }
    return out;
}

}  // namespace autokey

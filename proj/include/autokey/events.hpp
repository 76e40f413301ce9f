#pragma once

#include <json.hpp>
#include <string_view>
#include <vector>

#include "autokey/common.hpp"

namespace autokey {

using Json = nlohmann::ordered_json;

enum class EventType {
    PolicyConfigured,
    UserRequest,
    UserSend,
    UserPrompt,
    MailOut,
    Drop,
    Bounce,
    Deliver,
    MailIn,
    ServerDelete,
    ServerReplace,
    KeystoreChange,
    PolicyBlock,
    PermanentFailure,
    Adversary,
    Tick,
    Convergence,
    AdversaryReport,
    End,
};

std::string_view to_string(EventType t);
EventType event_type_from_string(std::string_view s);

/// One transcript record. `id` is assigned when the event enters a transcript.
struct Event {
    std::uint64_t id = 0;
    EventType type = EventType::Tick;
    Instant at = 0;
    Address party;
    Json detail = Json::object();
};

Json event_to_json(const Event& e);
Event event_from_json(const Json& j);

std::string transcript_to_jsonl(const std::vector<Event>& events);
// Throws ParseError on malformed lines.
std::vector<Event> transcript_from_jsonl(std::string_view text);

}  // namespace autokey

#pragma once

#include <string>
#include <vector>

#include "autokey/events.hpp"

namespace autokey {

// Raised for transcripts that cannot be audited (missing terminal event,
// out-of-order ids).
class AuditError : public Error {
public:
    using Error::Error;
};

enum class Verdict { Pass, Fail, NotApplicable };

std::string_view to_string(Verdict v);

struct GuidelineResult {
    std::string guideline;  // "G1" .. "G9"
    Verdict verdict = Verdict::NotApplicable;
    // Only a slice of the guideline is machine-checkable.
    bool partial = false;
    std::string proxy;
    std::vector<std::uint64_t> evidence;
    std::string note;
};

struct SecurityFinding {
    std::string name;
    std::string value;
    std::vector<std::uint64_t> evidence;
};

struct AuditReport {
    Json metadata = Json::object();
    std::vector<GuidelineResult> guidelines;
    std::vector<SecurityFinding> findings;

    bool passed() const;
    const GuidelineResult& guideline(std::string_view id) const;
    const SecurityFinding* finding(std::string_view name) const;
};

// Pure function of its inputs. Throws AuditError on a truncated transcript.
AuditReport evaluate_transcript(const std::vector<Event>& transcript,
                                const Json& metadata = Json::object());

Json report_to_json(const AuditReport& report);
std::string report_table(const AuditReport& report);

}  // namespace autokey

#include "autokey/policy.hpp"

#include <sstream>

namespace autokey {

void PolicyConfig::validate() const {
    if (max_check <= 0 || leap_of_faith_periode <= 0 || resend_interval <= 0) {
        throw std::invalid_argument("policy durations must be positive");
    }
    if (max_resends < 1) {
        throw std::invalid_argument("policy max_resends must be at least 1");
    }
}

PolicyConfig apply_questionnaire(const std::vector<bool>& answers, const PolicyConfig& base) {
    if (answers.size() != kQuestionnaire.size()) {
        throw std::invalid_argument("questionnaire expects " +
                                    std::to_string(kQuestionnaire.size()) + " answers, got " +
                                    std::to_string(answers.size()));
    }
    PolicyConfig p = base;
    p.leap_of_faith_enabled = !answers[0];
    p.side_channels_enabled = answers[1];
    p.encrypt_by_default = !answers[2];
    return p;
}

std::string describe_policy(const PolicyConfig& p) {
    auto yes_no = [](bool b) { return b ? "yes" : "no"; };
    std::ostringstream out;
    out << "max_check_seconds: " << p.max_check << '\n'
        << "leap_of_faith_periode_seconds: " << p.leap_of_faith_periode << '\n'
        << "resend_interval_seconds: " << p.resend_interval << '\n'
        << "max_resends: " << p.max_resends << '\n'
        << "leap_of_faith_enabled: " << yes_no(p.leap_of_faith_enabled) << '\n'
        << "side_channels_enabled: " << yes_no(p.side_channels_enabled) << '\n'
        << "encrypt_by_default: " << yes_no(p.encrypt_by_default) << '\n';
    return out.str();
}

}  // namespace autokey

#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "autokey/common.hpp"

namespace autokey {

struct PolicyConfig {
    Duration max_check = 14 * kDay;
    Duration leap_of_faith_periode = 3 * kDay;
    Duration resend_interval = 24 * kHour;
    int max_resends = 3;
    bool leap_of_faith_enabled = true;
    bool side_channels_enabled = false;
    bool encrypt_by_default = true;

    // Throws std::invalid_argument when a duration is not positive or
    // max_resends < 1.
    void validate() const;

    friend bool operator==(const PolicyConfig&, const PolicyConfig&) = default;
};

// Installation-time questions, in the order answers are expected. A "yes"
// to the first one turns the leap of faith off.
constexpr std::array<std::string_view, 3> kQuestionnaire = {
    "An attacker may already be reading my mail accounts the first time I write to someone.",
    "I have other mail accounts or messengers this program may use to deliver one-time "
    "passwords.",
    "Most of my mail is like a public postcard that anyone may read.",
};

// Throws std::invalid_argument unless answers.size() == kQuestionnaire.size().
PolicyConfig apply_questionnaire(const std::vector<bool>& answers,
                                 const PolicyConfig& base = PolicyConfig{});

std::string describe_policy(const PolicyConfig& policy);

}  // namespace autokey

#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace ecg {

// The fifteen handcrafted diagnostic rules, numbered 1..15.
enum class RuleId : int {
    poor_r_wave_progression = 1,
    arrhythmia,
    tachycardia,
    bradycardia,
    right_axis_deviation,
    left_axis_deviation,
    low_qrs_voltage,
    qt_prolongation,
    clockwise_rotation,
    counterclockwise_rotation,
    first_degree_av_block,
    abnormal_q_waves,
    t_wave_change,
    right_atrial_enlargement,
    left_ventricular_high_voltage,
};

inline constexpr int kRuleCount = 15;

inline constexpr std::array<std::string_view, kRuleCount> kRuleSlugs = {
    "poor_r_wave_progression", "arrhythmia",
    "tachycardia",             "bradycardia",
    "right_axis_deviation",    "left_axis_deviation",
    "low_qrs_voltage",         "qt_prolongation",
    "clockwise_rotation",      "counterclockwise_rotation",
    "first_degree_av_block",   "abnormal_q_waves",
    "t_wave_change",           "right_atrial_enlargement",
    "left_ventricular_high_voltage",
};

constexpr std::string_view rule_slug(RuleId id) { return kRuleSlugs[static_cast<int>(id) - 1]; }

constexpr std::array<RuleId, kRuleCount> all_rules() {
    std::array<RuleId, kRuleCount> out{};
    for (int i = 0; i < kRuleCount; ++i) out[i] = static_cast<RuleId>(i + 1);
    return out;
}

// Accepts either the number ("3") or the slug ("tachycardia").
std::optional<RuleId> parse_rule_id(std::string_view text);

}  // namespace ecg

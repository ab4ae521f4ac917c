#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace vibrodiag {

/// Machine condition classes. The integer codes are fixed and appear in
/// feature CSVs and model files.
enum class ConditionLabel : int {
  Normal = 0,
  Misalignment = 1,
  Unbalance = 2,
  BearingFault = 3,
};

inline constexpr int kNumConditions = 4;

inline constexpr std::array<ConditionLabel, kNumConditions> kAllConditions = {
    ConditionLabel::Normal, ConditionLabel::Misalignment,
    ConditionLabel::Unbalance, ConditionLabel::BearingFault};

constexpr int to_code(ConditionLabel label) noexcept {
  return static_cast<int>(label);
}

constexpr std::optional<ConditionLabel> from_code(int code) noexcept {
  if (code < 0 || code >= kNumConditions) return std::nullopt;
  return static_cast<ConditionLabel>(code);
}

constexpr std::string_view label_name(ConditionLabel label) noexcept {
  switch (label) {
    case ConditionLabel::Normal: return "Normal";
    case ConditionLabel::Misalignment: return "Misalignment";
    case ConditionLabel::Unbalance: return "Unbalance";
    case ConditionLabel::BearingFault: return "BearingFault";
  }
  return "?";
}

// Default on-disk directory for each condition.
constexpr std::string_view default_dir_name(ConditionLabel label) noexcept {
  switch (label) {
    case ConditionLabel::Normal: return "normal";
    case ConditionLabel::Misalignment: return "misalignment";
    case ConditionLabel::Unbalance: return "unbalance";
    case ConditionLabel::BearingFault: return "bearing";
  }
  return "";
}

}  // namespace vibrodiag

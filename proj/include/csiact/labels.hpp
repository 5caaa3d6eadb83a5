#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "csiact/error.hpp"

namespace csiact {

enum class ActivityLabel { Sitting = 0, Standing = 1 };

constexpr std::string_view to_string(ActivityLabel label) noexcept {
  return label == ActivityLabel::Sitting ? "sitting" : "standing";
}

inline std::optional<ActivityLabel> parse_activity(std::string_view token) noexcept {
  if (token == "sitting") return ActivityLabel::Sitting;
  if (token == "standing") return ActivityLabel::Standing;
  return std::nullopt;
}

/// Class index used throughout the classifiers. Index order is the label
/// dictionary order, which is always lexicographic so that "lowest index"
/// and "lexicographically first" tie-breaks coincide.
using ClassId = int;

class LabelDictionary {
 public:
  LabelDictionary() = default;

  /// Builds a dictionary from arbitrary tokens; duplicates are collapsed and
  /// the result is sorted.
  explicit LabelDictionary(std::vector<std::string> names) : names_(std::move(names)) {
    std::sort(names_.begin(), names_.end());
    names_.erase(std::unique(names_.begin(), names_.end()), names_.end());
  }

  static LabelDictionary activities() { return LabelDictionary({"sitting", "standing"}); }

  std::size_t size() const noexcept { return names_.size(); }
  const std::vector<std::string>& names() const noexcept { return names_; }
  const std::string& name(ClassId id) const { return names_.at(static_cast<std::size_t>(id)); }

  std::optional<ClassId> find(std::string_view token) const noexcept {
    auto it = std::lower_bound(names_.begin(), names_.end(), token);
    if (it == names_.end() || *it != token) return std::nullopt;
    return static_cast<ClassId>(it - names_.begin());
  }

  ClassId id(std::string_view token) const {
    if (auto found = find(token)) return *found;
    throw Error(Errc::UnknownLabel, "label '" + std::string(token) + "' not in dictionary");
  }

  bool operator==(const LabelDictionary&) const = default;

 private:
  std::vector<std::string> names_;
};

constexpr ClassId class_of(ActivityLabel label) noexcept { return static_cast<ClassId>(label); }

}  // namespace csiact

// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Closed token banks that instruction slots are filled from, plus the
/// category-aware tables (structural attributes, addable details, and the
/// bidirectional detail-replacement pairs).

#include <algorithm>
#include <array>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace vtedit {

enum class GarmentCategory { upper_body, lower_body, dresses };

inline constexpr std::array<GarmentCategory, 3> kAllCategories = {
    GarmentCategory::upper_body, GarmentCategory::lower_body, GarmentCategory::dresses};

inline constexpr std::string_view to_string(GarmentCategory c) {
  switch (c) {
    case GarmentCategory::upper_body: return "upper_body";
    case GarmentCategory::lower_body: return "lower_body";
    case GarmentCategory::dresses: return "dresses";
  }
  return "";
}

inline std::optional<GarmentCategory> category_from_string(std::string_view s) {
  for (auto c : kAllCategories) {
    if (to_string(c) == s) return c;
  }
  return std::nullopt;
}

namespace banks {

inline constexpr std::string_view kSolid = "solid";

inline constexpr std::array<std::string_view, 16> kColors = {
    "red",  "blue",  "green", "yellow", "black", "white",    "purple", "orange",
    "pink", "brown", "gray",  "navy",   "beige", "lavender", "maroon", "teal"};

inline constexpr std::array<std::string_view, 11> kPatterns = {
    "polka dot",     "striped", "floral",  "geometric",   "checkered", "paisley",
    "camouflage",    "leopard print", "gingham", "houndstooth", "abstract"};

inline constexpr std::array<std::string_view, 6> kMaterials = {"denim",  "leather", "silk",
                                                               "wool",   "cotton",  "linen"};

inline constexpr std::array<std::string_view, 6> kSleeves = {
    "long sleeves",  "short sleeves", "sleeveless",
    "cap sleeves",   "puffy sleeves", "three-quarter sleeves"};

inline constexpr std::array<std::string_view, 6> kNecklines = {
    "v-neck", "crew neck", "scoop neck", "square neck", "high neck", "collar"};

template <std::size_t N>
constexpr bool contains(const std::array<std::string_view, N>& bank, std::string_view token) {
  return std::find(bank.begin(), bank.end(), token) != bank.end();
}

inline bool is_color(std::string_view t) { return contains(kColors, t); }
inline bool is_pattern(std::string_view t) { return t == kSolid || contains(kPatterns, t); }
inline bool is_material(std::string_view t) { return contains(kMaterials, t); }

}  // namespace banks

/// Structural attributes a garment may carry. Lower-body garments have none.
enum class StructuralAttr { sleeves, neckline };

inline constexpr std::string_view to_string(StructuralAttr a) {
  return a == StructuralAttr::sleeves ? "sleeves" : "neckline";
}

/// Wording used for the [Attribute] slot of the modify-structure template.
inline constexpr std::string_view template_label(StructuralAttr a) {
  return a == StructuralAttr::sleeves ? "sleeve length" : "neckline";
}

inline std::optional<StructuralAttr> structural_from_string(std::string_view s) {
  if (s == "sleeves") return StructuralAttr::sleeves;
  if (s == "neckline") return StructuralAttr::neckline;
  return std::nullopt;
}

inline std::span<const std::string_view> structural_bank(StructuralAttr a) {
  if (a == StructuralAttr::sleeves) return banks::kSleeves;
  return banks::kNecklines;
}

inline std::vector<StructuralAttr> structural_attrs_for(GarmentCategory c) {
  if (c == GarmentCategory::lower_body) return {};
  return {StructuralAttr::sleeves, StructuralAttr::neckline};
}

struct AddableDetail {
  std::string_view name;
  /// Empty when the detail has no defined location.
  std::vector<std::string_view> locations;
};

inline std::vector<AddableDetail> addable_details(GarmentCategory c) {
  switch (c) {
    case GarmentCategory::upper_body:
      return {{"bow", {"neck"}}, {"pockets", {}}, {"chest pocket", {}}, {"zipper", {}},
              {"buttons", {}}};
    case GarmentCategory::lower_body:
      return {{"belt", {}}, {"drawstring", {}}};
    case GarmentCategory::dresses:
      return {{"belt", {}},       {"fitted belt", {}}, {"pockets", {}},
              {"drawstring", {}}, {"bow", {"neck", "waist"}}};
  }
  return {};
}

/// Bidirectional detail-replacement pairs.
inline constexpr std::array<std::pair<std::string_view, std::string_view>, 3> kReplacementPairs = {{
    {"belt", "bow"},
    {"belt", "drawstring"},
    {"bow", "buttons"},
}};

inline bool is_replacement_pair(std::string_view from, std::string_view to) {
  return std::any_of(kReplacementPairs.begin(), kReplacementPairs.end(), [&](const auto& p) {
    return (p.first == from && p.second == to) || (p.first == to && p.second == from);
  });
}

inline std::vector<std::string_view> replacement_partners(std::string_view name) {
  std::vector<std::string_view> out;
  for (const auto& [a, b] : kReplacementPairs) {
    if (a == name) out.push_back(b);
    if (b == name) out.push_back(a);
  }
  return out;
}

}  // namespace vtedit

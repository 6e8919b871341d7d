// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Structured garment semantics and the attribute-state transitions that
/// the seven edit types perform on them.

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/banks.hpp"
#include "vtedit/error.hpp"

namespace vtedit {

inline constexpr int kAttributeSchemaVersion = 1;

struct FeatureEntry {
  std::string name;
  std::optional<std::string> location;
  std::optional<std::string> color;
  bool color_editable = false;
  bool removable = false;
  std::optional<std::string> replaceable_with;

  bool operator==(const FeatureEntry&) const = default;
};

struct GarmentAttributes {
  GarmentCategory category = GarmentCategory::upper_body;
  std::string base_color;
  std::string pattern{banks::kSolid};
  std::string material;
  std::optional<std::string> sleeves;
  std::optional<std::string> neckline;
  /// Kept sorted by (name, location).
  std::vector<FeatureEntry> distinctive_features;
  std::string free_text;

  bool operator==(const GarmentAttributes&) const = default;
};

inline bool feature_less(const FeatureEntry& a, const FeatureEntry& b) {
  return std::tie(a.name, a.location) < std::tie(b.name, b.location);
}

inline bool is_solid(const GarmentAttributes& attrs) { return attrs.pattern == banks::kSolid; }

inline const std::optional<std::string>& structural_value(const GarmentAttributes& attrs,
                                                          StructuralAttr a) {
  return a == StructuralAttr::sleeves ? attrs.sleeves : attrs.neckline;
}

inline std::optional<std::string>& structural_value(GarmentAttributes& attrs, StructuralAttr a) {
  return a == StructuralAttr::sleeves ? attrs.sleeves : attrs.neckline;
}

inline const FeatureEntry* find_feature(const GarmentAttributes& attrs, std::string_view name,
                                        const std::optional<std::string>& location) {
  for (const auto& f : attrs.distinctive_features) {
    if (f.name == name && f.location == location) return &f;
  }
  return nullptr;
}

inline bool has_feature_named(const GarmentAttributes& attrs, std::string_view name) {
  return std::any_of(attrs.distinctive_features.begin(), attrs.distinctive_features.end(),
                     [&](const FeatureEntry& f) { return f.name == name; });
}

// ---------------------------------------------------------------------------
// Deltas: one variant per kind of state transition.
// ---------------------------------------------------------------------------

namespace delta {

struct SetColor {
  std::string color;
  bool operator==(const SetColor&) const = default;
};
struct SetPattern {
  std::string pattern;
  bool operator==(const SetPattern&) const = default;
};
struct SetMaterial {
  std::string material;
  bool operator==(const SetMaterial&) const = default;
};
struct SetStructural {
  StructuralAttr attribute;
  std::string value;
  bool operator==(const SetStructural&) const = default;
};
struct AddFeature {
  FeatureEntry feature;
  bool operator==(const AddFeature&) const = default;
};
struct RemoveFeature {
  std::string name;
  std::optional<std::string> location;
  bool operator==(const RemoveFeature&) const = default;
};
struct RecolorFeature {
  std::string name;
  std::optional<std::string> location;
  /// nullopt restores a detail that had no recorded color of its own.
  std::optional<std::string> color;
  bool operator==(const RecolorFeature&) const = default;
};
struct ReplaceFeature {
  FeatureEntry from;
  FeatureEntry to;
  bool operator==(const ReplaceFeature&) const = default;
};

}  // namespace delta

using AttributeDelta =
    std::variant<delta::SetColor, delta::SetPattern, delta::SetMaterial, delta::SetStructural,
                 delta::AddFeature, delta::RemoveFeature, delta::RecolorFeature,
                 delta::ReplaceFeature>;

namespace detail {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

inline void check_feature(const FeatureEntry& f, Errc code) {
  if (f.name.empty()) throw Error(code, "feature name is empty");
  if (f.color && !banks::is_color(*f.color)) {
    throw Error(code, "distinctive_features.color='" + *f.color + "' for feature '" + f.name + "'");
  }
  if (f.replaceable_with && !is_replacement_pair(f.name, *f.replaceable_with)) {
    throw Error(code, "distinctive_features.replaceable_with='" + *f.replaceable_with +
                          "' is not a replacement pair for '" + f.name + "'");
  }
}

inline void sort_features(std::vector<FeatureEntry>& features) {
  std::sort(features.begin(), features.end(), feature_less);
}

}  // namespace detail

/// Throws OutOfBankValue / MalformedDocument when an invariant is broken.
inline void validate(const GarmentAttributes& a) {
  if (!banks::is_color(a.base_color)) {
    throw Error(Errc::out_of_bank_value, "base_color='" + a.base_color + "'");
  }
  if (!banks::is_pattern(a.pattern)) {
    throw Error(Errc::out_of_bank_value, "pattern='" + a.pattern + "'");
  }
  if (!banks::is_material(a.material)) {
    throw Error(Errc::out_of_bank_value, "material='" + a.material + "'");
  }
  for (auto attr : {StructuralAttr::sleeves, StructuralAttr::neckline}) {
    const auto& v = structural_value(a, attr);
    if (!v) continue;
    if (a.category == GarmentCategory::lower_body) {
      throw Error(Errc::malformed_document,
                  std::string(to_string(attr)) + " is not valid for lower_body garments");
    }
    auto bank = structural_bank(attr);
    if (std::find(bank.begin(), bank.end(), *v) == bank.end()) {
      throw Error(Errc::out_of_bank_value, std::string(to_string(attr)) + "='" + *v + "'");
    }
  }
  for (std::size_t i = 0; i < a.distinctive_features.size(); ++i) {
    const auto& f = a.distinctive_features[i];
    detail::check_feature(f, Errc::out_of_bank_value);
    for (std::size_t j = i + 1; j < a.distinctive_features.size(); ++j) {
      const auto& g = a.distinctive_features[j];
      if (f.name == g.name && f.location == g.location) {
        throw Error(Errc::malformed_document, "duplicate feature '" + f.name + "'");
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Structured-text (JSON) exchange format
// ---------------------------------------------------------------------------

namespace detail {

inline std::optional<std::string> opt_string(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw Error(Errc::malformed_document, std::string(key) + " must be a string");
  return it->get<std::string>();
}

inline std::string req_string(const nlohmann::json& j, const char* key,
                              const char* alias = nullptr) {
  auto v = opt_string(j, key);
  if (!v && alias) v = opt_string(j, alias);
  if (!v) throw Error(Errc::malformed_document, std::string("missing field '") + key + "'");
  return *v;
}

inline bool opt_bool(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return false;
  if (!it->is_boolean()) throw Error(Errc::malformed_document, std::string(key) + " must be a boolean");
  return it->get<bool>();
}

inline void put_opt(nlohmann::json& j, const char* key, const std::optional<std::string>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace detail

inline nlohmann::json to_json(const FeatureEntry& f) {
  nlohmann::json j;
  j["name"] = f.name;
  detail::put_opt(j, "location", f.location);
  detail::put_opt(j, "color", f.color);
  j["color_editable"] = f.color_editable;
  j["removable"] = f.removable;
  detail::put_opt(j, "replaceable_with", f.replaceable_with);
  return j;
}

inline FeatureEntry feature_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::malformed_document, "feature entry must be an object");
  FeatureEntry f;
  f.name = detail::req_string(j, "name");
  f.location = detail::opt_string(j, "location");
  f.color = detail::opt_string(j, "color");
  f.color_editable = detail::opt_bool(j, "color_editable");
  f.removable = detail::opt_bool(j, "removable");
  f.replaceable_with = detail::opt_string(j, "replaceable_with");
  return f;
}

inline nlohmann::json to_json(const GarmentAttributes& a) {
  nlohmann::json j;
  j["schema_version"] = kAttributeSchemaVersion;
  j["category"] = std::string(to_string(a.category));
  j["base_color"] = a.base_color;
  j["pattern"] = a.pattern;
  j["material"] = a.material;
  detail::put_opt(j, "sleeves", a.sleeves);
  detail::put_opt(j, "neckline", a.neckline);
  auto features = nlohmann::json::array();
  for (const auto& f : a.distinctive_features) features.push_back(to_json(f));
  j["distinctive_features"] = std::move(features);
  j["free_text"] = a.free_text;
  return j;
}

/// Validates and normalizes an attribute document. Unknown fields are ignored.
/// Lower-body documents have sleeves/neckline forced absent.
inline GarmentAttributes attributes_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw Error(Errc::malformed_document, "attribute document must be an object");
  GarmentAttributes a;
  auto category = detail::opt_string(doc, "category");
  if (!category) throw Error(Errc::malformed_document, "missing field 'category'");
  auto parsed = category_from_string(*category);
  if (!parsed) throw Error(Errc::unknown_category, "category='" + *category + "'");
  a.category = *parsed;
  a.base_color = detail::req_string(doc, "base_color", "color");
  a.pattern = detail::req_string(doc, "pattern");
  a.material = detail::req_string(doc, "material");
  if (a.category != GarmentCategory::lower_body) {
    a.sleeves = detail::opt_string(doc, "sleeves");
    a.neckline = detail::opt_string(doc, "neckline");
  }
  if (auto it = doc.find("distinctive_features"); it != doc.end() && !it->is_null()) {
    if (!it->is_array()) throw Error(Errc::malformed_document, "distinctive_features must be a list");
    for (const auto& fj : *it) a.distinctive_features.push_back(feature_from_json(fj));
  }
  a.free_text = detail::opt_string(doc, "free_text").value_or(
      detail::opt_string(doc, "description").value_or(""));
  detail::sort_features(a.distinctive_features);
  validate(a);
  return a;
}

inline GarmentAttributes parse_attributes(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::malformed_document, e.what());
  }
  return attributes_from_json(doc);
}

inline std::string serialize_attributes(const GarmentAttributes& a) { return to_json(a).dump(); }

// ---------------------------------------------------------------------------
// apply_delta
// ---------------------------------------------------------------------------

inline GarmentAttributes apply_delta(const GarmentAttributes& attrs, const AttributeDelta& d) {
  GarmentAttributes out = attrs;
  auto fail = [](const std::string& why) { throw Error(Errc::inapplicable_delta, why); };
  std::visit(
      detail::overloaded{
          [&](const delta::SetColor& s) {
            if (!banks::is_color(s.color)) fail("set_color: '" + s.color + "' not in color bank");
            out.base_color = s.color;
          },
          [&](const delta::SetPattern& s) {
            if (!banks::is_pattern(s.pattern)) fail("set_pattern: '" + s.pattern + "' not in pattern bank");
            out.pattern = s.pattern;
          },
          [&](const delta::SetMaterial& s) {
            if (!banks::is_material(s.material)) fail("set_material: '" + s.material + "' not in material bank");
            out.material = s.material;
          },
          [&](const delta::SetStructural& s) {
            auto valid = structural_attrs_for(attrs.category);
            if (std::find(valid.begin(), valid.end(), s.attribute) == valid.end()) {
              fail("set_structural: " + std::string(to_string(s.attribute)) + " not valid for " +
                   std::string(to_string(attrs.category)));
            }
            auto bank = structural_bank(s.attribute);
            if (std::find(bank.begin(), bank.end(), s.value) == bank.end()) {
              fail("set_structural: '" + s.value + "' not in " + std::string(to_string(s.attribute)) + " bank");
            }
            structural_value(out, s.attribute) = s.value;
          },
          [&](const delta::AddFeature& s) {
            if (find_feature(attrs, s.feature.name, s.feature.location)) {
              fail("add_feature: '" + s.feature.name + "' already present");
            }
            try {
              detail::check_feature(s.feature, Errc::inapplicable_delta);
            } catch (const Error& e) {
              fail(std::string("add_feature: ") + e.what());
            }
            auto& fs = out.distinctive_features;
            fs.insert(std::upper_bound(fs.begin(), fs.end(), s.feature, feature_less), s.feature);
          },
          [&](const delta::RemoveFeature& s) {
            auto& fs = out.distinctive_features;
            auto it = std::find_if(fs.begin(), fs.end(), [&](const FeatureEntry& f) {
              return f.name == s.name && f.location == s.location;
            });
            if (it == fs.end()) fail("remove_feature: '" + s.name + "' not present");
            fs.erase(it);
          },
          [&](const delta::RecolorFeature& s) {
            if (s.color && !banks::is_color(*s.color)) fail("recolor_feature: '" + *s.color + "' not in color bank");
            auto& fs = out.distinctive_features;
            auto it = std::find_if(fs.begin(), fs.end(), [&](const FeatureEntry& f) {
              return f.name == s.name && f.location == s.location;
            });
            if (it == fs.end()) fail("recolor_feature: '" + s.name + "' not present");
            it->color = s.color;
          },
          [&](const delta::ReplaceFeature& s) {
            auto& fs = out.distinctive_features;
            auto it = std::find(fs.begin(), fs.end(), s.from);
            if (it == fs.end()) fail("replace_feature: source '" + s.from.name + "' not present");
            if (!is_replacement_pair(s.from.name, s.to.name)) {
              fail("replace_feature: '" + s.from.name + "' -> '" + s.to.name + "' is not a replacement pair");
            }
            const FeatureEntry* clash = find_feature(attrs, s.to.name, s.to.location);
            if (clash && !(*clash == s.from)) fail("replace_feature: '" + s.to.name + "' already present");
            fs.erase(it);
            fs.insert(std::upper_bound(fs.begin(), fs.end(), s.to, feature_less), s.to);
          },
      },
      d);
  return out;
}

// Delta wire format, used inside instruction records.

inline nlohmann::json to_json(const AttributeDelta& d) {
  nlohmann::json j;
  std::visit(detail::overloaded{
                 [&](const delta::SetColor& s) { j = {{"op", "set_color"}, {"color", s.color}}; },
                 [&](const delta::SetPattern& s) { j = {{"op", "set_pattern"}, {"pattern", s.pattern}}; },
                 [&](const delta::SetMaterial& s) { j = {{"op", "set_material"}, {"material", s.material}}; },
                 [&](const delta::SetStructural& s) {
                   j = {{"op", "set_structural"},
                        {"attribute", std::string(to_string(s.attribute))},
                        {"value", s.value}};
                 },
                 [&](const delta::AddFeature& s) { j = {{"op", "add_feature"}, {"feature", to_json(s.feature)}}; },
                 [&](const delta::RemoveFeature& s) {
                   j = {{"op", "remove_feature"}, {"name", s.name}};
                   detail::put_opt(j, "location", s.location);
                 },
                 [&](const delta::RecolorFeature& s) {
                   j = {{"op", "recolor_feature"}, {"name", s.name}};
                   detail::put_opt(j, "location", s.location);
                   detail::put_opt(j, "color", s.color);
                 },
                 [&](const delta::ReplaceFeature& s) {
                   j = {{"op", "replace_feature"}, {"from", to_json(s.from)}, {"to", to_json(s.to)}};
                 },
             },
             d);
  return j;
}

inline AttributeDelta delta_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::malformed_document, "delta must be an object");
  const std::string op = detail::req_string(j, "op");
  if (op == "set_color") return delta::SetColor{detail::req_string(j, "color")};
  if (op == "set_pattern") return delta::SetPattern{detail::req_string(j, "pattern")};
  if (op == "set_material") return delta::SetMaterial{detail::req_string(j, "material")};
  if (op == "set_structural") {
    auto attr = structural_from_string(detail::req_string(j, "attribute"));
    if (!attr) throw Error(Errc::malformed_document, "unknown structural attribute");
    return delta::SetStructural{*attr, detail::req_string(j, "value")};
  }
  if (op == "add_feature") return delta::AddFeature{feature_from_json(j.at("feature"))};
  if (op == "remove_feature") {
    return delta::RemoveFeature{detail::req_string(j, "name"), detail::opt_string(j, "location")};
  }
  if (op == "recolor_feature") {
    return delta::RecolorFeature{detail::req_string(j, "name"), detail::opt_string(j, "location"),
                                 detail::opt_string(j, "color")};
  }
  if (op == "replace_feature") {
    return delta::ReplaceFeature{feature_from_json(j.at("from")), feature_from_json(j.at("to"))};
  }
  throw Error(Errc::malformed_document, "unknown delta op '" + op + "'");
}

}  // namespace vtedit

// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Rule-based instruction synthesis: seven edit types, category-aware slot
/// domains, verbatim templates, and paired forward/reverse instructions.

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/attributes.hpp"
#include "vtedit/error.hpp"
#include "vtedit/rng.hpp"

namespace vtedit {

enum class EditType {
  change_color,
  change_pattern,
  change_material,
  modify_structure,
  add_detail,
  remove_element,
  fine_grained,
};

inline constexpr std::size_t kEditTypeCount = 7;

inline constexpr std::array<EditType, kEditTypeCount> kAllEditTypes = {
    EditType::change_color,  EditType::change_pattern, EditType::change_material,
    EditType::modify_structure, EditType::add_detail, EditType::remove_element,
    EditType::fine_grained};

inline constexpr std::string_view to_string(EditType t) {
  switch (t) {
    case EditType::change_color: return "change_color";
    case EditType::change_pattern: return "change_pattern";
    case EditType::change_material: return "change_material";
    case EditType::modify_structure: return "modify_structure";
    case EditType::add_detail: return "add_detail";
    case EditType::remove_element: return "remove_element";
    case EditType::fine_grained: return "fine_grained";
  }
  return "";
}

inline constexpr std::string_view display_name(EditType t) {
  switch (t) {
    case EditType::change_color: return "Change Color";
    case EditType::change_pattern: return "Change Pattern";
    case EditType::change_material: return "Change Material";
    case EditType::modify_structure: return "Modify Structure";
    case EditType::add_detail: return "Add Detail";
    case EditType::remove_element: return "Remove Element";
    case EditType::fine_grained: return "Fine-Grained";
  }
  return "";
}

inline std::optional<EditType> edit_type_from_string(std::string_view s) {
  for (auto t : kAllEditTypes) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

inline constexpr std::size_t index_of(EditType t) { return static_cast<std::size_t>(t); }

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

using Slots = std::map<std::string, std::string>;

enum class TemplateId {
  change_color,
  add_pattern,
  replace_pattern,
  remove_pattern,
  change_material,
  modify_structure,
  add_detail,
  add_detail_at,
  remove_element,
  recolor_detail,
  replace_detail,
};

/// Template text with {slot} placeholders. remove_pattern has no printed
/// original; it is the inverse of the additive pattern edit.
inline constexpr std::string_view template_text(TemplateId id) {
  switch (id) {
    case TemplateId::change_color: return "Change the color of the garment to {target_color}";
    case TemplateId::add_pattern: return "Add a {target_pattern} pattern to the garment";
    case TemplateId::replace_pattern:
      return "Replace the {source_pattern} pattern with a {target_pattern} pattern";
    case TemplateId::remove_pattern:
      return "Remove the {target_pattern} pattern from the garment, making it solid {garment_color}";
    case TemplateId::change_material: return "Make the garment {garment_color} {target_material}";
    case TemplateId::modify_structure: return "Change the {attribute} to {target_value}";
    case TemplateId::add_detail: return "Add a {feature} to the garment";
    case TemplateId::add_detail_at: return "Add a {feature} at the {location} of the garment";
    case TemplateId::remove_element: return "Remove the {feature} from the garment";
    case TemplateId::recolor_detail: return "Change the color of the {feature} to {target_color}";
    case TemplateId::replace_detail: return "Replace the {source_feature} with {target_feature}";
  }
  return "";
}

/// Placeholder names appearing in a template, in order.
inline std::vector<std::string> template_placeholders(TemplateId id) {
  std::vector<std::string> out;
  std::string_view t = template_text(id);
  for (std::size_t i = t.find('{'); i != std::string_view::npos; i = t.find('{', i + 1)) {
    auto close = t.find('}', i);
    out.emplace_back(t.substr(i + 1, close - i - 1));
  }
  return out;
}

/// Exact placeholder substitution. Extra slots are ignored.
inline std::string render_template(TemplateId id, const Slots& slots) {
  std::string_view t = template_text(id);
  std::string out;
  std::size_t pos = 0;
  while (pos < t.size()) {
    auto open = t.find('{', pos);
    if (open == std::string_view::npos) {
      out.append(t.substr(pos));
      break;
    }
    out.append(t.substr(pos, open - pos));
    auto close = t.find('}', open);
    std::string key(t.substr(open + 1, close - open - 1));
    auto it = slots.find(key);
    if (it == slots.end()) throw Error(Errc::missing_slot, "'" + key + "' for template \"" + std::string(t) + "\"");
    out.append(it->second);
    pos = close + 1;
  }
  return out;
}

/// Forward template for an edit type; the variant follows the slots present.
inline TemplateId forward_template(EditType type, const Slots& slots) {
  switch (type) {
    case EditType::change_color: return TemplateId::change_color;
    case EditType::change_pattern:
      return slots.contains("source_pattern") ? TemplateId::replace_pattern : TemplateId::add_pattern;
    case EditType::change_material: return TemplateId::change_material;
    case EditType::modify_structure: return TemplateId::modify_structure;
    case EditType::add_detail:
      return slots.contains("location") ? TemplateId::add_detail_at : TemplateId::add_detail;
    case EditType::remove_element: return TemplateId::remove_element;
    case EditType::fine_grained:
      return slots.contains("source_feature") ? TemplateId::replace_detail : TemplateId::recolor_detail;
  }
  return TemplateId::change_color;
}

inline std::string render_template(EditType type, const Slots& slots) {
  return render_template(forward_template(type, slots), slots);
}

// ---------------------------------------------------------------------------
// Instructions
// ---------------------------------------------------------------------------

struct EditInstruction {
  EditType edit_type = EditType::change_color;
  std::string forward_text;
  std::string reverse_text;
  AttributeDelta forward_delta;
  AttributeDelta reverse_delta;
  Slots slots;
  std::uint64_t seed = 0;

  bool operator==(const EditInstruction&) const = default;
};

/// Swaps the forward and reverse sides; used to request the undoing edit.
inline EditInstruction inverted(const EditInstruction& in) {
  EditInstruction out = in;
  std::swap(out.forward_text, out.reverse_text);
  std::swap(out.forward_delta, out.reverse_delta);
  return out;
}

/// Admissible forward deltas per edit type for one source state.
struct EditCandidateSet {
  std::array<std::vector<AttributeDelta>, kEditTypeCount> options;
  std::array<bool, kEditTypeCount> applicable{};

  std::span<const AttributeDelta> of(EditType t) const { return options[index_of(t)]; }
  bool admits(EditType t) const { return applicable[index_of(t)] && !options[index_of(t)].empty(); }

  std::vector<EditType> admissible_types() const {
    std::vector<EditType> out;
    for (auto t : kAllEditTypes) {
      if (admits(t)) out.push_back(t);
    }
    return out;
  }
};

namespace detail {

inline FeatureEntry added_feature(std::string_view name, std::optional<std::string> location) {
  FeatureEntry f;
  f.name = std::string(name);
  f.location = std::move(location);
  f.color_editable = true;
  f.removable = true;
  return f;
}

inline std::vector<std::string_view> replacement_targets(const GarmentAttributes& a,
                                                         const FeatureEntry& f) {
  std::vector<std::string_view> targets;
  if (f.replaceable_with) {
    targets.push_back(*f.replaceable_with);
  } else {
    targets = replacement_partners(f.name);
  }
  std::erase_if(targets, [&](std::string_view t) { return has_feature_named(a, t); });
  return targets;
}

}  // namespace detail

/// Precondition of an edit type on a source state, independent of whether
/// any target remains after exclusions.
inline bool edit_type_applicable(const GarmentAttributes& a, EditType t) {
  const auto& fs = a.distinctive_features;
  switch (t) {
    case EditType::change_color:
    case EditType::change_material: return is_solid(a);
    case EditType::change_pattern: return true;
    case EditType::modify_structure: {
      auto attrs = structural_attrs_for(a.category);
      return std::any_of(attrs.begin(), attrs.end(), [&](StructuralAttr s) {
        return structural_value(a, s).has_value() && structural_bank(s).size() >= 2;
      });
    }
    case EditType::add_detail: return !addable_details(a.category).empty();
    case EditType::remove_element:
      return std::any_of(fs.begin(), fs.end(), [](const FeatureEntry& f) { return f.removable; });
    case EditType::fine_grained:
      return std::any_of(fs.begin(), fs.end(), [](const FeatureEntry& f) {
        return f.color_editable || f.replaceable_with || !replacement_partners(f.name).empty();
      });
  }
  return false;
}

inline EditCandidateSet enumerate_valid_edits(const GarmentAttributes& a) {
  EditCandidateSet set;
  for (auto t : kAllEditTypes) set.applicable[index_of(t)] = edit_type_applicable(a, t);
  auto& opts = set.options;

  if (set.applicable[index_of(EditType::change_color)]) {
    for (auto c : banks::kColors) {
      bool present = c == a.base_color;
      for (const auto& f : a.distinctive_features) present = present || (f.color && *f.color == c);
      if (!present) opts[index_of(EditType::change_color)].push_back(delta::SetColor{std::string(c)});
    }
  }
  for (auto p : banks::kPatterns) {
    if (p != a.pattern) opts[index_of(EditType::change_pattern)].push_back(delta::SetPattern{std::string(p)});
  }
  if (set.applicable[index_of(EditType::change_material)]) {
    for (auto m : banks::kMaterials) {
      if (m != a.material) {
        opts[index_of(EditType::change_material)].push_back(delta::SetMaterial{std::string(m)});
      }
    }
  }
  for (auto attr : structural_attrs_for(a.category)) {
    const auto& current = structural_value(a, attr);
    if (!current) continue;
    for (auto v : structural_bank(attr)) {
      if (v != *current) {
        opts[index_of(EditType::modify_structure)].push_back(delta::SetStructural{attr, std::string(v)});
      }
    }
  }
  for (const auto& detail : addable_details(a.category)) {
    if (has_feature_named(a, detail.name)) continue;
    auto& add = opts[index_of(EditType::add_detail)];
    if (detail.locations.empty()) {
      add.push_back(delta::AddFeature{detail::added_feature(detail.name, std::nullopt)});
    } else {
      for (auto loc : detail.locations) {
        add.push_back(delta::AddFeature{detail::added_feature(detail.name, std::string(loc))});
      }
    }
  }
  for (const auto& f : a.distinctive_features) {
    if (f.removable) opts[index_of(EditType::remove_element)].push_back(delta::RemoveFeature{f.name, f.location});
  }
  auto& fine = opts[index_of(EditType::fine_grained)];
  for (const auto& f : a.distinctive_features) {
    if (!f.color_editable) continue;
    const std::string& current = f.color ? *f.color : a.base_color;
    for (auto c : banks::kColors) {
      if (c != current) fine.push_back(delta::RecolorFeature{f.name, f.location, std::string(c)});
    }
  }
  for (const auto& f : a.distinctive_features) {
    for (auto target : detail::replacement_targets(a, f)) {
      FeatureEntry to = f;
      to.name = std::string(target);
      to.replaceable_with = f.name;
      fine.push_back(delta::ReplaceFeature{f, std::move(to)});
    }
  }
  return set;
}

/// Builds the full instruction (texts, slots, reverse delta) for a forward
/// delta drawn from enumerate_valid_edits(source).
inline EditInstruction build_instruction(const GarmentAttributes& source, EditType type,
                                         const AttributeDelta& forward, std::uint64_t seed) {
  EditInstruction ins;
  ins.edit_type = type;
  ins.forward_delta = forward;
  ins.seed = seed;
  Slots reverse_slots;
  TemplateId reverse_tpl = TemplateId::change_color;

  std::visit(
      detail::overloaded{
          [&](const delta::SetColor& d) {
            ins.slots = {{"target_color", d.color}};
            ins.reverse_delta = delta::SetColor{source.base_color};
            reverse_slots = {{"target_color", source.base_color}};
            reverse_tpl = TemplateId::change_color;
          },
          [&](const delta::SetPattern& d) {
            ins.reverse_delta = delta::SetPattern{source.pattern};
            if (is_solid(source)) {
              ins.slots = {{"target_pattern", d.pattern}};
              reverse_slots = {{"target_pattern", d.pattern}, {"garment_color", source.base_color}};
              reverse_tpl = TemplateId::remove_pattern;
            } else {
              ins.slots = {{"source_pattern", source.pattern}, {"target_pattern", d.pattern}};
              reverse_slots = {{"source_pattern", d.pattern}, {"target_pattern", source.pattern}};
              reverse_tpl = TemplateId::replace_pattern;
            }
          },
          [&](const delta::SetMaterial& d) {
            ins.slots = {{"garment_color", source.base_color}, {"target_material", d.material}};
            ins.reverse_delta = delta::SetMaterial{source.material};
            reverse_slots = {{"garment_color", source.base_color}, {"target_material", source.material}};
            reverse_tpl = TemplateId::change_material;
          },
          [&](const delta::SetStructural& d) {
            const auto& current = structural_value(source, d.attribute);
            if (!current) {
              throw Error(Errc::invalid_edit_type, "structural attribute has no source value");
            }
            std::string label(template_label(d.attribute));
            ins.slots = {{"attribute", label}, {"target_value", d.value}};
            ins.reverse_delta = delta::SetStructural{d.attribute, *current};
            reverse_slots = {{"attribute", label}, {"target_value", *current}};
            reverse_tpl = TemplateId::modify_structure;
          },
          [&](const delta::AddFeature& d) {
            ins.slots = {{"feature", d.feature.name}};
            if (d.feature.location) ins.slots["location"] = *d.feature.location;
            ins.reverse_delta = delta::RemoveFeature{d.feature.name, d.feature.location};
            reverse_slots = {{"feature", d.feature.name}};
            reverse_tpl = TemplateId::remove_element;
          },
          [&](const delta::RemoveFeature& d) {
            const FeatureEntry* f = find_feature(source, d.name, d.location);
            if (!f) throw Error(Errc::invalid_edit_type, "feature '" + d.name + "' not present");
            ins.slots = {{"feature", d.name}};
            if (d.location) ins.slots["location"] = *d.location;
            ins.reverse_delta = delta::AddFeature{*f};
            reverse_slots = ins.slots;
            reverse_tpl = d.location ? TemplateId::add_detail_at : TemplateId::add_detail;
          },
          [&](const delta::RecolorFeature& d) {
            const FeatureEntry* f = find_feature(source, d.name, d.location);
            if (!f || !d.color) throw Error(Errc::invalid_edit_type, "feature '" + d.name + "' not recolorable");
            ins.slots = {{"feature", d.name}, {"target_color", *d.color}};
            if (d.location) ins.slots["location"] = *d.location;
            ins.reverse_delta = delta::RecolorFeature{d.name, d.location, f->color};
            reverse_slots = {{"feature", d.name}, {"target_color", f->color.value_or(source.base_color)}};
            reverse_tpl = TemplateId::recolor_detail;
          },
          [&](const delta::ReplaceFeature& d) {
            ins.slots = {{"source_feature", d.from.name}, {"target_feature", d.to.name}};
            ins.reverse_delta = delta::ReplaceFeature{d.to, d.from};
            reverse_slots = {{"source_feature", d.to.name}, {"target_feature", d.from.name}};
            reverse_tpl = TemplateId::replace_detail;
          },
      },
      forward);

  ins.forward_text = render_template(type, ins.slots);
  ins.reverse_text = render_template(reverse_tpl, reverse_slots);
  return ins;
}

/// Draws a target uniformly from the candidate domain with a generator keyed
/// by `seed`. Same (attrs, edit_type, seed) always yields the same instruction.
inline EditInstruction synthesize_instruction(const GarmentAttributes& attrs, EditType type,
                                              std::uint64_t seed) {
  if (!edit_type_applicable(attrs, type)) {
    throw Error(Errc::invalid_edit_type,
                std::string(to_string(type)) + " is not valid for this garment");
  }
  auto candidates = enumerate_valid_edits(attrs);
  auto domain = candidates.of(type);
  if (domain.empty()) throw Error(Errc::no_valid_target, std::string(to_string(type)));
  SplitMix64 rng(seed);
  const auto pick = rng.uniform_index(domain.size());
  return build_instruction(attrs, type, domain[pick], seed);
}

/// Reverse text for an instruction synthesized from `source`.
inline std::string reverse_of(const EditInstruction& instruction, const GarmentAttributes& source) {
  return build_instruction(source, instruction.edit_type, instruction.forward_delta, instruction.seed)
      .reverse_text;
}

/// Per-garment slot seed keyed by (dataset seed, garment/candidate key, edit type).
inline std::uint64_t instruction_seed(std::uint64_t dataset_seed, std::string_view garment_key,
                                      EditType type) {
  return derive_seed(dataset_seed, {garment_key, "slots"}, index_of(type));
}

// ---------------------------------------------------------------------------
// Edit-type mix
// ---------------------------------------------------------------------------

/// Target proportions in percent, ordered by fallback priority.
struct EditMix {
  std::vector<std::pair<EditType, double>> weights;

  static EditMix dataset_default() {
    return EditMix{{{EditType::add_detail, 27.0},
                    {EditType::change_pattern, 27.0},
                    {EditType::change_color, 20.0},
                    {EditType::modify_structure, 11.0},
                    {EditType::change_material, 10.0},
                    {EditType::remove_element, 4.0},
                    {EditType::fine_grained, 1.0}}};
  }

  double total() const {
    double s = 0;
    for (const auto& [t, w] : weights) s += w;
    return s;
  }
};

/// Draws a type by proportion; when the garment does not admit it, falls
/// forward (cyclically, in mix order) to the next admissible type.
inline EditType draw_edit_type(const EditCandidateSet& candidates, const EditMix& mix, SplitMix64& rng) {
  const auto& w = mix.weights;
  if (w.empty()) throw Error(Errc::config_invalid, "empty edit mix");
  const double u = rng.uniform01() * mix.total();
  std::size_t drawn = w.size() - 1;
  double acc = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    acc += w[i].second;
    if (u < acc) {
      drawn = i;
      break;
    }
  }
  for (std::size_t k = 0; k < w.size(); ++k) {
    EditType t = w[(drawn + k) % w.size()].first;
    if (candidates.admits(t)) return t;
  }
  throw Error(Errc::no_valid_target, "garment admits no edit type");
}

// ---------------------------------------------------------------------------
// Wire format
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const EditInstruction& ins) {
  nlohmann::json j;
  j["edit_type"] = std::string(to_string(ins.edit_type));
  j["forward_text"] = ins.forward_text;
  j["reverse_text"] = ins.reverse_text;
  j["slots"] = ins.slots;
  j["seed"] = ins.seed;
  j["forward_delta"] = to_json(ins.forward_delta);
  j["reverse_delta"] = to_json(ins.reverse_delta);
  return j;
}

inline EditInstruction instruction_from_json(const nlohmann::json& j) {
  try {
    EditInstruction ins;
    auto type = edit_type_from_string(j.at("edit_type").get<std::string>());
    if (!type) throw Error(Errc::malformed_document, "unknown edit_type");
    ins.edit_type = *type;
    ins.forward_text = j.at("forward_text").get<std::string>();
    ins.reverse_text = j.at("reverse_text").get<std::string>();
    ins.slots = j.at("slots").get<Slots>();
    ins.seed = j.at("seed").get<std::uint64_t>();
    ins.forward_delta = delta_from_json(j.at("forward_delta"));
    ins.reverse_delta = delta_from_json(j.at("reverse_delta"));
    return ins;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_document, std::string("instruction: ") + e.what());
  }
}

}  // namespace vtedit

// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Bounding-box try-on masks from human-parsing label maps, with hand pixels
/// carved back out of the box.

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "vtedit/banks.hpp"
#include "vtedit/error.hpp"
#include "vtedit/image.hpp"

namespace vtedit {

/// Parser class ids, the garment classes per category and the classes kept
/// out of the mask.
struct ClassTable {
  std::map<int, std::string> names;
  std::map<GarmentCategory, std::set<int>> garment_classes;
  std::set<int> exclude;

  /// Default layout of an 18-class garment-aware human parser.
  static ClassTable standard() {
    ClassTable t;
    t.names = {{0, "background"}, {1, "face"},   {2, "hair"},     {3, "top"},   {4, "dress"},
               {5, "skirt"},      {6, "pants"},  {7, "belt"},     {8, "bag"},   {9, "hat"},
               {10, "scarf"},     {11, "glasses"}, {12, "arms"},  {13, "hands"}, {14, "legs"},
               {15, "feet"},      {16, "torso"}, {17, "jewelry"}};
    t.garment_classes = {{GarmentCategory::upper_body, {3}},
                         {GarmentCategory::lower_body, {5, 6}},
                         {GarmentCategory::dresses, {4}}};
    t.exclude = {13};
    return t;
  }

  const std::set<int>& targets(GarmentCategory c) const {
    auto it = garment_classes.find(c);
    if (it == garment_classes.end()) {
      throw Error(Errc::config_invalid, "no garment classes for " + std::string(to_string(c)));
    }
    return it->second;
  }
};

inline nlohmann::json to_json(const ClassTable& t) {
  nlohmann::json j;
  for (const auto& [id, name] : t.names) j["classes"][std::to_string(id)] = name;
  for (const auto& [c, ids] : t.garment_classes) j["garment_classes"][std::string(to_string(c))] = ids;
  j["exclude"] = t.exclude;
  return j;
}

inline ClassTable class_table_from_json(const nlohmann::json& j) {
  try {
    ClassTable t;
    for (const auto& [id, name] : j.at("classes").items()) t.names[std::stoi(id)] = name.get<std::string>();
    for (const auto& [cat, ids] : j.at("garment_classes").items()) {
      auto c = category_from_string(cat);
      if (!c) throw Error(Errc::config_invalid, "unknown category '" + cat + "' in class table");
      t.garment_classes[*c] = ids.get<std::set<int>>();
    }
    if (j.contains("exclude")) t.exclude = j.at("exclude").get<std::set<int>>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_invalid, std::string("class table: ") + e.what());
  }
}

struct LabelMap {
  GrayImage classes;
  std::map<int, std::string> class_names;

  int width() const { return classes.width; }
  int height() const { return classes.height; }
};

struct Rect {
  int x0 = 0, y0 = 0, x1 = -1, y1 = -1;  // inclusive bounds; empty when x1 < x0
  bool empty() const { return x1 < x0 || y1 < y0; }
  bool contains(int x, int y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
  bool operator==(const Rect&) const = default;
};

struct BinaryMask {
  GrayImage bits;  // 0/1 per pixel
  /// The box before excluded classes were cleared.
  Rect box;

  int width() const { return bits.width; }
  int height() const { return bits.height; }
  std::size_t count() const { return static_cast<std::size_t>(std::count(bits.data.begin(), bits.data.end(), 1)); }
};

/// Tight min/max box over target-class pixels, grown by `margin` (clamped to
/// the frame), with excluded-class pixels inside it cleared.
inline BinaryMask bbox_mask(const LabelMap& labels, const std::set<int>& target_classes,
                            const std::set<int>& exclude_classes, int margin = 0) {
  if (target_classes.empty()) throw Error(Errc::invalid_argument, "target_classes is empty");
  if (labels.width() <= 0 || labels.height() <= 0) throw Error(Errc::invalid_argument, "empty label map");
  if (margin < 0) throw Error(Errc::invalid_argument, "negative margin");
  for (int id : target_classes) {
    if (!labels.class_names.contains(id)) throw Error(Errc::unknown_class_id, "target class " + std::to_string(id));
  }
  for (int id : exclude_classes) {
    if (!labels.class_names.contains(id)) throw Error(Errc::unknown_class_id, "exclude class " + std::to_string(id));
  }

  std::array<bool, 256> is_target{}, is_excluded{}, known{};
  for (int id : target_classes) is_target[static_cast<std::size_t>(id) & 0xff] = true;
  for (int id : exclude_classes) is_excluded[static_cast<std::size_t>(id) & 0xff] = true;
  for (const auto& [id, name] : labels.class_names) {
    if (id >= 0 && id < 256) known[static_cast<std::size_t>(id)] = true;
  }

  Rect box{labels.width(), labels.height(), -1, -1};
  for (int y = 0; y < labels.height(); ++y) {
    for (int x = 0; x < labels.width(); ++x) {
      const auto id = labels.classes.at(x, y);
      if (!known[id]) throw Error(Errc::unknown_class_id, "pixel class " + std::to_string(id));
      if (!is_target[id]) continue;
      box.x0 = std::min(box.x0, x);
      box.y0 = std::min(box.y0, y);
      box.x1 = std::max(box.x1, x);
      box.y1 = std::max(box.y1, y);
    }
  }
  if (box.empty()) throw Error(Errc::empty_region, "no target-class pixels");
  box.x0 = std::max(0, box.x0 - margin);
  box.y0 = std::max(0, box.y0 - margin);
  box.x1 = std::min(labels.width() - 1, box.x1 + margin);
  box.y1 = std::min(labels.height() - 1, box.y1 + margin);

  BinaryMask mask{GrayImage(labels.width(), labels.height()), box};
  for (int y = box.y0; y <= box.y1; ++y) {
    for (int x = box.x0; x <= box.x1; ++x) {
      mask.bits.at(x, y) = is_excluded[labels.classes.at(x, y)] ? 0 : 1;
    }
  }
  return mask;
}

inline BinaryMask bbox_mask(const LabelMap& labels, const ClassTable& table, GarmentCategory category,
                            int margin = 0) {
  return bbox_mask(labels, table.targets(category), table.exclude, margin);
}

}  // namespace vtedit

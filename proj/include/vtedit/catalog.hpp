// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Synthetic garment catalogs: flat garment images, person images, parser
/// label maps and attribute sidecars, laid out under a storage root.
///
///   <root>/catalog.jsonl            one CatalogEntry per line
///   <root>/garments/<id>.ppm
///   <root>/persons/<id>.ppm
///   <root>/parse/<id>.pgm           class id per pixel
///   <root>/attributes/<id>.json     attribute document

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "vtedit/clients.hpp"
#include "vtedit/jsonl.hpp"
#include "vtedit/mask.hpp"
#include "vtedit/mock_backends.hpp"
#include "vtedit/rng.hpp"

namespace vtedit {

struct CatalogEntry {
  std::string garment_id;
  /// Key for split assignment; several garments may share one identity.
  std::string garment_identity;
  GarmentCategory category = GarmentCategory::upper_body;
  ImageRef garment;
  ImageRef person;
  ImageRef label_map;
};

inline nlohmann::json to_json(const CatalogEntry& e) {
  return {{"garment_id", e.garment_id},
          {"garment_identity", e.garment_identity},
          {"category", std::string(to_string(e.category))},
          {"garment", to_json(e.garment)},
          {"person", to_json(e.person)},
          {"label_map", to_json(e.label_map)}};
}

inline CatalogEntry catalog_entry_from_json(const nlohmann::json& j) {
  try {
    CatalogEntry e;
    e.garment_id = j.at("garment_id").get<std::string>();
    e.garment_identity = j.value("garment_identity", e.garment_id);
    auto c = category_from_string(j.at("category").get<std::string>());
    if (!c) throw Error(Errc::unknown_category, j.at("category").get<std::string>());
    e.category = *c;
    e.garment = image_ref_from_json(j.at("garment"));
    e.person = image_ref_from_json(j.at("person"));
    e.label_map = image_ref_from_json(j.at("label_map"));
    return e;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::malformed_document, std::string("catalog entry: ") + ex.what());
  }
}

inline std::vector<CatalogEntry> load_catalog(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw Error(Errc::io_error, "no catalog at " + file.string());
  const auto log = read_log(file);
  std::vector<CatalogEntry> out;
  for (const auto& line : log.lines) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_document, "catalog line is not JSON");
    out.push_back(catalog_entry_from_json(j));
  }
  return out;
}

struct CatalogOptions {
  std::size_t count = 100;
  std::uint64_t seed = 0;
  int width = kStandardWidth;
  int height = kStandardHeight;
  /// Category shares in percent (upper, lower, dresses); counts use largest remainders.
  std::array<double, 3> category_share{31.1, 13.7, 55.2};
};

namespace detail {

inline std::array<std::uint8_t, 3> rgb_of(std::string_view token) {
  const auto s = mock::token_color(token);
  return {static_cast<std::uint8_t>(s.r), static_cast<std::uint8_t>(s.g), static_cast<std::uint8_t>(s.b)};
}

inline std::vector<std::size_t> largest_remainder(std::size_t n, const std::array<double, 3>& shares) {
  double total = shares[0] + shares[1] + shares[2];
  std::vector<std::size_t> counts(3);
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = static_cast<double>(n) * shares[i] / total;
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    rem.push_back({exact - std::floor(exact), i});
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < n; ++k, ++used) ++counts[rem[k % 3].second];
  return counts;
}

inline GarmentAttributes catalog_attributes(GarmentCategory c, SplitMix64& rng) {
  auto pick = [&](auto bank) { return std::string(bank[rng.uniform_index(bank.size())]); };
  GarmentAttributes a;
  a.category = c;
  a.base_color = pick(banks::kColors);
  a.pattern = rng.uniform01() < 0.55 ? std::string(banks::kSolid) : pick(banks::kPatterns);
  a.material = pick(banks::kMaterials);
  if (c != GarmentCategory::lower_body) {
    a.sleeves = pick(banks::kSleeves);
    a.neckline = pick(banks::kNecklines);
  }
  for (const auto& d : addable_details(c)) {
    if (rng.uniform01() >= 0.3) continue;
    FeatureEntry f;
    f.name = std::string(d.name);
    if (!d.locations.empty()) f.location = std::string(d.locations[rng.uniform_index(d.locations.size())]);
    if (rng.uniform01() < 0.5) f.color = pick(banks::kColors);
    f.color_editable = true;
    f.removable = rng.uniform01() < 0.8;
    a.distinctive_features.push_back(f);
  }
  sort_features(a.distinctive_features);
  a.free_text = std::string(to_string(c)) + " in " + a.base_color + " " + a.material;
  return a;
}

inline Image render_garment(const GarmentAttributes& a, int w, int h) {
  const auto base = rgb_of(a.base_color);
  const auto stripe = rgb_of(a.pattern);
  Image img(w, h, 255);
  const int band = std::max(1, h / 32);
  for (int y = h / 16; y < h - h / 16; ++y) {
    for (int x = w / 8; x < w - w / 8; ++x) {
      const bool patterned = !is_solid(a) && ((y / band) + (x / band)) % 3 == 0;
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = patterned ? stripe[c] : base[c];
    }
  }
  return img;
}

struct Box {
  double x0, y0, x1, y1;  // fractions of the frame
};

inline void paint(GrayImage& labels, Image& person, const Box& b, int cls, std::array<std::uint8_t, 3> rgb) {
  const int w = labels.width, h = labels.height;
  const int x0 = static_cast<int>(b.x0 * w), x1 = std::max(x0 + 1, static_cast<int>(b.x1 * w));
  const int y0 = static_cast<int>(b.y0 * h), y1 = std::max(y0 + 1, static_cast<int>(b.y1 * h));
  for (int y = y0; y < std::min(h, y1); ++y) {
    for (int x = x0; x < std::min(w, x1); ++x) {
      labels.at(x, y) = static_cast<std::uint8_t>(cls);
      for (int c = 0; c < 3; ++c) person.at(x, y, c) = rgb[c];
    }
  }
}

}  // namespace detail

/// Writes a catalog of `opt.count` garments; returns the entries written.
inline std::vector<CatalogEntry> synth_catalog(const std::filesystem::path& root, const CatalogOptions& opt) {
  if (opt.width < 8 || opt.height < 8) throw Error(Errc::invalid_argument, "catalog images must be at least 8x8");
  for (const char* d : {"garments", "persons", "parse", "attributes"}) std::filesystem::create_directories(root / d);
  const auto counts = detail::largest_remainder(opt.count, opt.category_share);
  std::vector<GarmentCategory> cats;
  for (std::size_t i = 0; i < 3; ++i) cats.insert(cats.end(), counts[i], kAllCategories[i]);
  SplitMix64 order(derive_seed(opt.seed, {"catalog-order"}));
  for (std::size_t i = cats.size(); i > 1; --i) std::swap(cats[i - 1], cats[order.uniform_index(i)]);

  std::vector<CatalogEntry> entries;
  std::string lines;
  for (std::size_t i = 0; i < opt.count; ++i) {
    char id[16];
    std::snprintf(id, sizeof id, "g%05zu", i);
    SplitMix64 rng(derive_seed(opt.seed, {"catalog", id}));
    const auto cat = cats[i];
    const auto attrs = detail::catalog_attributes(cat, rng);

    const int w = opt.width, h = opt.height;
    Image person(w, h, 200);
    GrayImage labels(w, h, 0);
    detail::paint(labels, person, {0.4, 0.04, 0.6, 0.16}, 1, {224, 172, 140});
    detail::paint(labels, person, {0.18, 0.2, 0.3, 0.46}, 12, {224, 172, 140});
    detail::paint(labels, person, {0.7, 0.2, 0.82, 0.46}, 12, {224, 172, 140});
    detail::paint(labels, person, {0.35, 0.86, 0.65, 0.96}, 15, {40, 40, 40});
    const auto garment_rgb = detail::rgb_of(attrs.base_color);
    const std::array<std::uint8_t, 3> other{90, 90, 110};
    if (cat == GarmentCategory::dresses) {
      detail::paint(labels, person, {0.3, 0.18, 0.7, 0.78}, 4, garment_rgb);
    } else {
      const bool upper = cat == GarmentCategory::upper_body;
      detail::paint(labels, person, {0.3, 0.18, 0.7, 0.5}, 3, upper ? garment_rgb : other);
      const int lower_cls = (!upper && rng.uniform01() < 0.4) ? 5 : 6;
      detail::paint(labels, person, {0.32, 0.5, 0.68, 0.86}, lower_cls, upper ? other : garment_rgb);
    }
    // Hands resting over the garment.
    const double hy = cat == GarmentCategory::lower_body ? 0.52 : 0.42;
    detail::paint(labels, person, {0.33, hy, 0.38, hy + 0.05}, 13, {224, 172, 140});
    detail::paint(labels, person, {0.62, hy, 0.67, hy + 0.05}, 13, {224, 172, 140});

    CatalogEntry e;
    e.garment_id = id;
    e.garment_identity = id;
    e.category = cat;
    e.garment = {std::string(id), "garments/" + std::string(id) + ".ppm", w, h, ImageRole::garment};
    e.person = {std::string(id) + "-person", "persons/" + std::string(id) + ".ppm", w, h, ImageRole::person};
    e.label_map = {std::string(id) + "-parse", "parse/" + std::string(id) + ".pgm", w, h, ImageRole::label_map};
    write_ppm(root / e.garment.path, detail::render_garment(attrs, w, h));
    write_ppm(root / e.person.path, person);
    write_pgm(root / e.label_map.path, labels);
    write_file_atomic(root / "attributes" / (std::string(id) + ".json"), to_json(attrs).dump(2) + "\n");
    entries.push_back(e);
    lines += to_json(e).dump() + "\n";
  }
  write_file_atomic(root / "catalog.jsonl", lines);
  return entries;
}

}  // namespace vtedit

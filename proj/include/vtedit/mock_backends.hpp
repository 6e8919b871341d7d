// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Deterministic local stand-ins for every model role.
///
/// The mock editor applies a per-channel additive shift (mod 256) inside a
/// region chosen from the delta, so applying an instruction and then its
/// inverse restores the input byte for byte. The mock judge scores an output
/// by how close it is to what the mock editor / try-on would have produced.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "vtedit/clients.hpp"
#include "vtedit/rng.hpp"

namespace vtedit {

namespace mock {

struct Shift {
  int r = 0, g = 0, b = 0;
};

/// Three bytes of the token's FNV hash; the empty token maps to zero.
inline Shift token_color(std::string_view token) {
  if (token.empty()) return {};
  const auto h = fnv1a64(token);
  return {static_cast<int>(h & 0xff), static_cast<int>((h >> 8) & 0xff), static_cast<int>((h >> 16) & 0xff)};
}

/// Token naming the state a delta moves towards.
inline std::string target_token(const AttributeDelta& d) {
  return std::visit(
      detail::overloaded{
          [](const delta::SetColor& x) { return x.color; },
          [](const delta::SetPattern& x) { return x.pattern; },
          [](const delta::SetMaterial& x) { return x.material; },
          [](const delta::SetStructural& x) { return x.value; },
          [](const delta::AddFeature& x) { return x.feature.name; },
          [](const delta::RemoveFeature&) { return std::string(); },
          [](const delta::RecolorFeature& x) { return x.color.value_or(std::string()); },
          [](const delta::ReplaceFeature& x) { return x.to.name; },
      },
      d);
}

/// Pixel predicate for the region a delta touches.
struct Region {
  enum Kind { full, sleeves, neckline, glyph } kind = full;
  int x0 = 0, y0 = 0, side = 0;

  bool contains(int x, int y, int w, int h) const {
    switch (kind) {
      case full: return true;
      case sleeves: {
        const int band = std::max(1, w / 4);
        return y >= h / 8 && y < std::max(h / 8 + 1, h / 2) && (x < band || x >= w - band);
      }
      case neckline: return y < std::max(1, h / 8) && x >= w / 4 && x < w - w / 4;
      case glyph: {
        const int dx = x - x0, dy = y - y0;
        if (dx < 0 || dy < 0 || dx >= side || dy >= side) return false;
        return ((dx / 2) + (dy / 2)) % 2 == 0;
      }
    }
    return false;
  }
};

inline Region glyph_region(std::string_view key, int w, int h) {
  Region r;
  r.kind = Region::glyph;
  r.side = std::max(1, std::min(w, h) / 6);
  const auto hash = fnv1a64(key);
  r.x0 = static_cast<int>((hash & 0xffffffffu) % static_cast<std::uint64_t>(w - r.side + 1));
  r.y0 = static_cast<int>((hash >> 32) % static_cast<std::uint64_t>(h - r.side + 1));
  return r;
}

inline std::string detail_key(std::string_view name, const std::optional<std::string>& location) {
  return std::string(name) + "@" + location.value_or("");
}

/// Forward and reverse deltas of one instruction always map to the same region.
inline Region region_of(const AttributeDelta& d, int w, int h) {
  return std::visit(
      detail::overloaded{
          [](const delta::SetColor&) { return Region{}; },
          [](const delta::SetPattern&) { return Region{}; },
          [](const delta::SetMaterial&) { return Region{}; },
          [](const delta::SetStructural& x) {
            Region r;
            r.kind = x.attribute == StructuralAttr::sleeves ? Region::sleeves : Region::neckline;
            return r;
          },
          [&](const delta::AddFeature& x) { return glyph_region(detail_key(x.feature.name, x.feature.location), w, h); },
          [&](const delta::RemoveFeature& x) { return glyph_region(detail_key(x.name, x.location), w, h); },
          [&](const delta::RecolorFeature& x) { return glyph_region(detail_key(x.name, x.location), w, h); },
          [&](const delta::ReplaceFeature& x) { return glyph_region(detail_key("", x.from.location), w, h); },
      },
      d);
}

/// The mock edit of `in` under `ins` (forward side).
inline Image edit_transform(const Image& in, const EditInstruction& ins) {
  const auto to = token_color(target_token(ins.forward_delta));
  const auto from = token_color(target_token(ins.reverse_delta));
  const int s[3] = {to.r - from.r, to.g - from.g, to.b - from.b};
  const auto region = region_of(ins.forward_delta, in.width, in.height);
  Image out = in;
  for (int y = 0; y < in.height; ++y) {
    for (int x = 0; x < in.width; ++x) {
      if (!region.contains(x, y, in.width, in.height)) continue;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = static_cast<std::uint8_t>((in.at(x, y, c) + s[c] + 256) & 0xff);
    }
  }
  return out;
}

/// Garment pixels (nearest-neighbour resampled to the person frame) inside
/// the mask, person pixels elsewhere.
inline Image try_on_transform(const Image& person, const Image& garment, const GrayImage& mask) {
  if (mask.width != person.width || mask.height != person.height) {
    throw Error(Errc::resolution_mismatch, "mask does not match the person image");
  }
  if (garment.width <= 0 || garment.height <= 0) throw Error(Errc::resolution_mismatch, "empty garment image");
  Image out = person;
  for (int y = 0; y < person.height; ++y) {
    const int gy = static_cast<int>(static_cast<long long>(y) * garment.height / person.height);
    for (int x = 0; x < person.width; ++x) {
      if (!mask.at(x, y)) continue;
      const int gx = static_cast<int>(static_cast<long long>(x) * garment.width / person.width);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = garment.at(gx, gy, c);
    }
  }
  return out;
}

inline double mean_abs_diff(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw Error(Errc::resolution_mismatch, "images differ in size");
  if (a.rgb.empty()) return 0;
  double s = 0;
  for (std::size_t i = 0; i < a.rgb.size(); ++i) s += std::abs(int(a.rgb[i]) - int(b.rgb[i]));
  return s / static_cast<double>(a.rgb.size());
}

/// 100 * (1 - dev(edited, expected) / dev(original, expected)), floored at 0.
inline double fidelity_score(const Image& original, const Image& edited, const Image& expected) {
  const double base = mean_abs_diff(original, expected);
  const double d = mean_abs_diff(edited, expected);
  if (base == 0) return d == 0 ? 100.0 : 0.0;
  return 100.0 * std::max(0.0, 1.0 - d / base);
}

/// 4x4 grid of per-channel cell means, centred to [-0.5, 0.5]; 48 values.
inline std::vector<double> grid_embedding(const Image& img) {
  std::vector<double> v(48, 0.0);
  std::vector<double> n(16, 0.0);
  for (int y = 0; y < img.height; ++y) {
    const int gy = y * 4 / img.height;
    for (int x = 0; x < img.width; ++x) {
      const int cell = gy * 4 + x * 4 / img.width;
      n[cell] += 1;
      for (int c = 0; c < 3; ++c) v[cell * 3 + c] += img.at(x, y, c);
    }
  }
  for (int cell = 0; cell < 16; ++cell) {
    for (int c = 0; c < 3; ++c) {
      auto& e = v[cell * 3 + c];
      e = n[cell] > 0 ? e / n[cell] / 255.0 - 0.5 : 0.0;
    }
  }
  return v;
}

inline std::vector<double> luma01(const Image& img) {
  auto y = luma(img);
  for (auto& e : y) e /= 255.0;
  return y;
}

inline std::vector<double> downsample2(const std::vector<double>& p, int& w, int& h) {
  const int nw = std::max(1, w / 2), nh = std::max(1, h / 2);
  std::vector<double> out(static_cast<std::size_t>(nw) * nh, 0.0);
  for (int y = 0; y < nh; ++y) {
    for (int x = 0; x < nw; ++x) {
      double s = 0;
      int k = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          const int sx = std::min(w - 1, 2 * x + dx), sy = std::min(h - 1, 2 * y + dy);
          s += p[static_cast<std::size_t>(sy) * w + sx];
          ++k;
        }
      }
      out[static_cast<std::size_t>(y) * nw + x] = s / k;
    }
  }
  w = nw;
  h = nh;
  return out;
}

/// LPIPS stand-in: mean over three 2x box-downsampled scales of luma MSE.
inline double lpips_proxy(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw Error(Errc::resolution_mismatch, "images differ in size");
  auto pa = luma01(a), pb = luma01(b);
  int w = a.width, h = a.height;
  double total = 0;
  for (int scale = 0; scale < 3; ++scale) {
    if (scale > 0) {
      int w2 = w, h2 = h;
      pa = downsample2(pa, w, h);
      pb = downsample2(pb, w2, h2);
    }
    double s = 0;
    for (std::size_t i = 0; i < pa.size(); ++i) s += (pa[i] - pb[i]) * (pa[i] - pb[i]);
    total += pa.empty() ? 0.0 : s / static_cast<double>(pa.size());
  }
  return total / 3.0;
}

/// DISTS stand-in: 1 - (l + s) / 2 from global luma statistics.
inline double dists_proxy(const Image& a, const Image& b) {
  if (!a.same_size(b)) throw Error(Errc::resolution_mismatch, "images differ in size");
  const auto pa = luma01(a), pb = luma01(b);
  const double n = static_cast<double>(pa.size());
  if (n == 0) return 0.0;
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    ma += pa[i];
    mb += pb[i];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cov = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    va += (pa[i] - ma) * (pa[i] - ma);
    vb += (pb[i] - mb) * (pb[i] - mb);
    cov += (pa[i] - ma) * (pb[i] - mb);
  }
  va /= n;
  vb /= n;
  cov /= n;
  constexpr double c = 1e-6;
  const double l = (2 * ma * mb + c) / (ma * ma + mb * mb + c);
  const double s = (2 * cov + c) / (va + vb + c);
  return 1.0 - 0.5 * (l + s);
}

}  // namespace mock

// ---------------------------------------------------------------------------
// Mock roles
// ---------------------------------------------------------------------------

/// Reads `<sidecar_dir>/<garment id>.json`.
class MockAttributeExtractor final : public AttributeExtractor {
 public:
  explicit MockAttributeExtractor(std::filesystem::path sidecar_dir) : dir_(std::move(sidecar_dir)) {}

  GarmentAttributes extract_attributes(const ExtractRequest& req) override {
    const auto path = dir_ / (req.garment.id + ".json");
    std::string text;
    try {
      text = read_file(path);
    } catch (const Error& e) {
      throw Error(Errc::malformed_response, "no attribute sidecar for " + req.garment.id);
    }
    try {
      return parse_attributes(text);
    } catch (const Error& e) {
      throw Error(Errc::malformed_response, req.garment.id + ": " + e.what());
    }
  }

 private:
  std::filesystem::path dir_;
};

class MockGarmentEditor final : public GarmentEditor {
 public:
  explicit MockGarmentEditor(StorageRoot storage) : storage_(std::move(storage)) {}

  /// Requests whose sample id (request id prefix) is listed here are refused.
  std::set<std::string> reject;

  ImageRef edit_garment(const EditRequest& req) override {
    const auto sample = req.request_id.substr(0, req.request_id.find('/'));
    if (reject.contains(sample)) throw Error(Errc::edit_rejected, "mock editor refused " + sample);
    const Image in = read_ppm(storage_.resolve(req.garment));
    const Image out = mock::edit_transform(in, req.instruction);
    const auto dest = storage_.resolve(req.output);
    std::filesystem::create_directories(dest.parent_path());
    write_ppm(dest, out);
    ImageRef ref = req.output;
    ref.width = out.width;
    ref.height = out.height;
    return ref;
  }

 private:
  StorageRoot storage_;
};

class MockTryOn final : public TryOnModel {
 public:
  explicit MockTryOn(StorageRoot storage) : storage_(std::move(storage)) {}

  ImageRef try_on(const TryOnRequest& req) override {
    const Image person = read_ppm(storage_.resolve(req.person));
    const Image garment = read_ppm(storage_.resolve(req.garment));
    const GrayImage mask = read_pbm(storage_.resolve(req.mask));
    const Image out = mock::try_on_transform(person, garment, mask);
    const auto dest = storage_.resolve(req.output);
    std::filesystem::create_directories(dest.parent_path());
    write_ppm(dest, out);
    ImageRef ref = req.output;
    ref.width = out.width;
    ref.height = out.height;
    return ref;
  }

 private:
  StorageRoot storage_;
};

/// Recomputes the expected output and scores fidelity to it. Per-sample
/// overrides pin (garment, person) scores for tests and fixtures.
class MockJudge final : public Judge {
 public:
  explicit MockJudge(StorageRoot storage) : storage_(std::move(storage)) {}

  std::map<std::string, std::pair<double, double>> overrides;

  JudgeScore judge(const JudgeRequest& req) override {
    if (auto it = overrides.find(req.sample_id); it != overrides.end()) {
      const double s = req.target == JudgeTarget::garment ? it->second.first : it->second.second;
      return make_score(s, "override", "mock-judge");
    }
    const Image original = read_ppm(storage_.resolve(req.original));
    const Image edited = read_ppm(storage_.resolve(req.edited));
    Image expected;
    if (req.target == JudgeTarget::garment) {
      if (!req.instruction) throw Error(Errc::invalid_argument, "mock judge needs the structured instruction");
      expected = mock::edit_transform(original, *req.instruction);
    } else {
      if (req.conditioning.size() < 2) throw Error(Errc::invalid_argument, "mock judge needs garment and mask refs");
      const Image garment = read_ppm(storage_.resolve(req.conditioning[0]));
      const GrayImage mask = read_pbm(storage_.resolve(req.conditioning[1]));
      expected = mock::try_on_transform(original, garment, mask);
    }
    if (!edited.same_size(expected)) return make_score(0.0, "resolution differs from expected", "mock-judge");
    const double s = mock::fidelity_score(original, edited, expected);
    return make_score(std::round(s * 100.0) / 100.0, "fidelity to expected edit", "mock-judge");
  }

 private:
  StorageRoot storage_;
};

class MockFeatureExtractor final : public FeatureExtractor {
 public:
  std::string extractor_id() const override { return "mock-grid48"; }
  std::vector<double> embed(const ImageRef&, const Image& pixels) override { return mock::grid_embedding(pixels); }
};

class MockPerceptual final : public PerceptualService {
 public:
  double distance(const ImageRef&, const Image& pa, const ImageRef&, const Image& pb, PerceptualKind kind) override {
    return kind == PerceptualKind::lpips ? mock::lpips_proxy(pa, pb) : mock::dists_proxy(pa, pb);
  }
};

inline ModelBackends make_mock_backends(const StorageRoot& storage, const std::filesystem::path& sidecar_dir) {
  return {std::make_shared<MockAttributeExtractor>(sidecar_dir), std::make_shared<MockGarmentEditor>(storage),
          std::make_shared<MockTryOn>(storage), std::make_shared<MockJudge>(storage)};
}

inline EvalBackends make_mock_eval_backends() {
  return {std::make_shared<MockFeatureExtractor>(), std::make_shared<MockPerceptual>()};
}

}  // namespace vtedit

// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>

#include "vtedit/mask.hpp"
#include "vtedit/rng.hpp"

namespace vtedit {
namespace {

constexpr int kBg = 0, kTop = 3, kHands = 13;

LabelMap make_map(int w, int h) {
  return LabelMap{GrayImage(w, h, kBg), ClassTable::standard().names};
}

// Brute-force oracle: scan all target pixels for min/max coordinates.
Rect oracle_box(const LabelMap& m, int target) {
  Rect r{1 << 30, 1 << 30, -1, -1};
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.classes.at(x, y) == target) {
        r.x0 = std::min(r.x0, x);
        r.x1 = std::max(r.x1, x);
        r.y0 = std::min(r.y0, y);
        r.y1 = std::max(r.y1, y);
      }
  return r;
}

TEST(BboxMask, FourByFourExample) {
  auto m = make_map(4, 4);
  m.classes.at(1, 1) = kTop;  // (row 1, col 1)
  m.classes.at(3, 2) = kTop;  // (row 2, col 3)
  auto mask = bbox_mask(m, {kTop}, {kHands});
  EXPECT_EQ(mask.box, (Rect{1, 1, 3, 2}));
  EXPECT_EQ(mask.box, oracle_box(m, kTop));
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) EXPECT_EQ(mask.bits.at(x, y), (y >= 1 && y <= 2 && x >= 1 && x <= 3) ? 1 : 0);
  EXPECT_EQ(mask.count(), 6u);
}

TEST(BboxMask, AllTargetGivesFullFrame) {
  auto m = make_map(5, 7);
  std::fill(m.classes.data.begin(), m.classes.data.end(), kTop);
  auto mask = bbox_mask(m, {kTop}, {kHands});
  EXPECT_EQ(mask.count(), 35u);
}

TEST(BboxMask, HandsInsideBoxAreCleared) {
  auto m = make_map(6, 6);
  m.classes.at(0, 0) = kTop;
  m.classes.at(5, 5) = kTop;
  m.classes.at(2, 3) = kHands;
  m.classes.at(3, 3) = kHands;
  auto mask = bbox_mask(m, {kTop}, {kHands});
  EXPECT_EQ(mask.bits.at(2, 3), 0);
  EXPECT_EQ(mask.bits.at(3, 3), 0);
  EXPECT_EQ(mask.count(), 34u);
}

TEST(BboxMask, Errors) {
  auto m = make_map(3, 3);
  try {
    bbox_mask(m, {kTop}, {kHands});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::empty_region);
  }
  m.classes.at(1, 1) = 200;
  try {
    bbox_mask(m, {kTop}, {kHands});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_class_id);
  }
  try {
    bbox_mask(make_map(3, 3), {99}, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::unknown_class_id);
  }
  EXPECT_THROW(bbox_mask(make_map(3, 3), {}, {}), Error);
}

TEST(BboxMask, MarginGrowsAndClamps) {
  auto m = make_map(10, 10);
  m.classes.at(1, 5) = kTop;
  auto mask = bbox_mask(m, {kTop}, {}, 2);
  EXPECT_EQ(mask.box, (Rect{0, 3, 3, 7}));
}

TEST(BboxMask, CategoryTableAndIdempotence) {
  SplitMix64 rng(4);
  auto m = make_map(32, 24);
  for (auto& p : m.classes.data) p = static_cast<std::uint8_t>(rng.uniform_index(18));
  auto table = ClassTable::standard();
  auto a = bbox_mask(m, table, GarmentCategory::lower_body);
  auto b = bbox_mask(m, table, GarmentCategory::lower_body);
  EXPECT_EQ(a.bits, b.bits);
  EXPECT_EQ(a.width(), m.width());
  EXPECT_EQ(a.height(), m.height());
}

TEST(BboxMask, RandomMapsAreTightAndHandFree) {
  SplitMix64 rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const int w = 1 + static_cast<int>(rng.uniform_index(40)), h = 1 + static_cast<int>(rng.uniform_index(40));
    auto m = make_map(w, h);
    for (auto& p : m.classes.data) {
      const double u = rng.uniform01();
      p = u < 0.05 ? kTop : (u < 0.15 ? kHands : kBg);
    }
    m.classes.at(static_cast<int>(rng.uniform_index(w)), static_cast<int>(rng.uniform_index(h))) = kTop;
    auto mask = bbox_mask(m, {kTop}, {kHands});
    EXPECT_EQ(mask.box, oracle_box(m, kTop));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        if (m.classes.at(x, y) == kHands) {
          EXPECT_EQ(mask.bits.at(x, y), 0);
        }
        if (m.classes.at(x, y) == kTop) {
          EXPECT_EQ(mask.bits.at(x, y), 1);
        }
      }
  }
}

TEST(BinaryMaskIo, PbmRoundTrip) {
  auto dir = std::filesystem::temp_directory_path() / "vtedit_mask_io";
  std::filesystem::create_directories(dir);
  GrayImage bits(13, 5);
  SplitMix64 rng(1);
  for (auto& b : bits.data) b = static_cast<std::uint8_t>(rng.uniform_index(2));
  write_pbm(dir / "m.pbm", bits);
  EXPECT_EQ(read_pbm(dir / "m.pbm"), bits);
  write_pgm(dir / "l.pgm", bits);
  EXPECT_EQ(read_pgm(dir / "l.pgm"), bits);
}

}  // namespace
}  // namespace vtedit

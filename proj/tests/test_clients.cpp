// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "generators.hpp"
#include "vtedit/catalog.hpp"
#include "vtedit/http_clients.hpp"
#include "vtedit/mock_backends.hpp"

namespace vtedit {
namespace {

using testing::random_attributes;
using testing::random_image;
using testing::TempDir;

Errc error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::invalid_argument;
}

TEST(MockEditor, InverseInstructionRestoresInputExactly) {
  SplitMix64 rng(11);
  int checked = 0;
  for (int i = 0; i < 400; ++i) {
    const auto attrs = random_attributes(rng);
    const auto cands = enumerate_valid_edits(attrs);
    const auto types = cands.admissible_types();
    if (types.empty()) continue;
    const auto type = types[rng.uniform_index(types.size())];
    const auto ins = synthesize_instruction(attrs, type, rng());
    const Image img = random_image(rng, 13 + static_cast<int>(rng.uniform_index(20)), 9 + static_cast<int>(rng.uniform_index(20)));
    const Image edited = mock::edit_transform(img, ins);
    EXPECT_EQ(mock::edit_transform(edited, inverted(ins)), img) << ins.forward_text;
    ++checked;
  }
  EXPECT_GT(checked, 300);
}

TEST(MockEditor, ForwardAndReverseTouchTheSameRegion) {
  SplitMix64 rng(12);
  for (int i = 0; i < 300; ++i) {
    const auto attrs = random_attributes(rng);
    const auto types = enumerate_valid_edits(attrs).admissible_types();
    if (types.empty()) continue;
    const auto ins = synthesize_instruction(attrs, types[rng.uniform_index(types.size())], rng());
    const auto f = mock::region_of(ins.forward_delta, 40, 30);
    const auto r = mock::region_of(ins.reverse_delta, 40, 30);
    for (int y = 0; y < 30; ++y) {
      for (int x = 0; x < 40; ++x) ASSERT_EQ(f.contains(x, y, 40, 30), r.contains(x, y, 40, 30));
    }
  }
}

TEST(MockEditor, ColorChangeShiftsEveryPixel) {
  GarmentAttributes a;
  a.base_color = "red";
  a.material = "cotton";
  auto ins = build_instruction(a, EditType::change_color, delta::SetColor{"blue"}, 0);
  Image img(4, 4, 10);
  auto out = mock::edit_transform(img, ins);
  const auto to = mock::token_color("blue"), from = mock::token_color("red");
  EXPECT_EQ(out.at(3, 3, 0), static_cast<std::uint8_t>((10 + to.r - from.r + 256) % 256));
  EXPECT_EQ(out.at(0, 0, 2), static_cast<std::uint8_t>((10 + to.b - from.b + 256) % 256));
}

TEST(MockTryOn, PastesGarmentInsideMaskOnly) {
  Image person(4, 2, 1), garment(2, 1, 0);
  garment.at(0, 0, 0) = 50;
  garment.at(1, 0, 0) = 60;
  GrayImage mask(4, 2, 0);
  mask.at(0, 0) = 1;
  mask.at(3, 1) = 1;
  auto out = mock::try_on_transform(person, garment, mask);
  EXPECT_EQ(out.at(0, 0, 0), 50);
  EXPECT_EQ(out.at(3, 1, 0), 60);
  EXPECT_EQ(out.at(1, 0, 0), 1);
  EXPECT_EQ(error_of([&] { mock::try_on_transform(person, garment, GrayImage(3, 2)); }), Errc::resolution_mismatch);
}

TEST(MockJudge, FidelityScoreEndpoints) {
  SplitMix64 rng(3);
  auto orig = random_image(rng, 8, 8);
  auto expected = orig;
  for (auto& b : expected.rgb) b = static_cast<std::uint8_t>(b ^ 0x80);
  EXPECT_DOUBLE_EQ(mock::fidelity_score(orig, expected, expected), 100.0);
  EXPECT_DOUBLE_EQ(mock::fidelity_score(orig, orig, expected), 0.0);
  EXPECT_DOUBLE_EQ(mock::fidelity_score(orig, orig, orig), 100.0);
  EXPECT_DOUBLE_EQ(mock::fidelity_score(orig, expected, orig), 0.0);
}

TEST(MockPerceptual, ProxiesAreZeroOnIdenticalImages) {
  SplitMix64 rng(4);
  auto a = random_image(rng, 16, 12);
  EXPECT_NEAR(mock::lpips_proxy(a, a), 0.0, 1e-15);
  EXPECT_NEAR(mock::dists_proxy(a, a), 0.0, 1e-12);
  auto b = random_image(rng, 16, 12);
  EXPECT_GT(mock::lpips_proxy(a, b), 0.0);
  EXPECT_GT(mock::dists_proxy(a, b), 0.0);
  // Single-scale oracle: a constant offset of 51 luma levels gives 0.04 at every scale.
  Image c(8, 8, 0), d(8, 8, 51);
  EXPECT_NEAR(mock::lpips_proxy(c, d), 0.04, 1e-12);
}

TEST(MockFeatures, GridEmbeddingIsCentredCellMeans) {
  Image img(4, 4, 0);
  img.at(0, 0, 0) = 255;
  auto v = mock::grid_embedding(img);
  ASSERT_EQ(v.size(), 48u);
  EXPECT_DOUBLE_EQ(v[0], 0.5);
  EXPECT_DOUBLE_EQ(v[1], -0.5);
  EXPECT_DOUBLE_EQ(v[47], -0.5);
}

TEST(MockExtractor, ReadsSidecarAndReportsBadOnes) {
  TempDir dir("extract");
  GarmentAttributes a;
  a.base_color = "navy";
  a.material = "denim";
  a.category = GarmentCategory::lower_body;
  write_file_atomic(dir.path() / "g1.json", serialize_attributes(a));
  write_file_atomic(dir.path() / "g2.json", "{not json");
  MockAttributeExtractor ex(dir.path());
  ExtractRequest req;
  req.garment.id = "g1";
  EXPECT_EQ(ex.extract_attributes(req), a);
  req.garment.id = "g2";
  EXPECT_EQ(error_of([&] { ex.extract_attributes(req); }), Errc::malformed_response);
  req.garment.id = "missing";
  EXPECT_EQ(error_of([&] { ex.extract_attributes(req); }), Errc::malformed_response);
}

TEST(Endpoint, ValidatesRetryPolicy) {
  ServiceEndpoint e;
  e.max_attempts = 0;
  EXPECT_EQ(error_of([&] { e.validate("x"); }), Errc::config_invalid);
  e.max_attempts = 2;
  e.backoff_ms = {100, 50};
  EXPECT_EQ(error_of([&] { e.validate("x"); }), Errc::config_invalid);
  e.backoff_ms = {10, 20};
  EXPECT_NO_THROW(e.validate("x"));
  EXPECT_EQ(e.backoff_before_attempt(1), 0);
  EXPECT_EQ(e.backoff_before_attempt(2), 10);
  EXPECT_EQ(e.backoff_before_attempt(9), 20);
}

// ---------------------------------------------------------------------------
// HTTP round trips against the mock server
// ---------------------------------------------------------------------------

class HttpFixture : public ::testing::Test {
 protected:
  void SetUp() override {
    CatalogOptions opt;
    opt.count = 3;
    opt.seed = 5;
    opt.width = 24;
    opt.height = 32;
    entries_ = synth_catalog(dir_.path(), opt);
    storage_.root = dir_.path();
    backends_ = make_mock_backends(storage_, dir_.path() / "attributes");
    server_ = std::make_unique<MockServiceServer>(storage_, backends_);
    server_->start();
    ep_.base_uri = server_->base_uri();
    ep_.backoff_ms = {1, 2};
    ep_.max_attempts = 3;
    ep_.timeout_ms = 5000;
  }

  EditInstruction some_instruction(const GarmentAttributes& a) {
    const auto types = enumerate_valid_edits(a).admissible_types();
    return synthesize_instruction(a, types.front(), 1);
  }

  TempDir dir_{"http"};
  StorageRoot storage_;
  std::vector<CatalogEntry> entries_;
  ModelBackends backends_;
  std::unique_ptr<MockServiceServer> server_;
  ServiceEndpoint ep_;
};

TEST_F(HttpFixture, RemoteRolesMatchLocalMocks) {
  const auto& e = entries_[0];
  HttpAttributeExtractor ex(ep_);
  const auto attrs = ex.extract_attributes({"g/extract", e.garment, e.person});
  EXPECT_EQ(attrs, backends_.extractor->extract_attributes({"g/extract", e.garment, e.person}));

  const auto ins = some_instruction(attrs);
  HttpGarmentEditor ed(ep_);
  ImageRef out{"o", "out/remote.ppm", 0, 0, ImageRole::garment_edit};
  const auto got = ed.edit_garment({"s1/edit", e.garment, ins, out});
  EXPECT_EQ(got.width, 24);
  EXPECT_EQ(got.path, "out/remote.ppm");
  EXPECT_EQ(read_ppm(storage_.resolve(got)), mock::edit_transform(read_ppm(storage_.resolve(e.garment)), ins));

  HttpJudge judge(ep_);
  JudgeRequest jr{"s1/judge-garment", "s1", JudgeTarget::garment, e.garment, got, ins.forward_text, ins, {}};
  EXPECT_DOUBLE_EQ(judge.judge(jr).score, 100.0);

  HttpFeatureExtractor fx(ep_, "remote-grid");
  const Image g = read_ppm(storage_.resolve(e.garment));
  EXPECT_EQ(fx.embed(e.garment, g), mock::grid_embedding(g));
  HttpPerceptual pp(ep_);
  EXPECT_DOUBLE_EQ(pp.distance(e.garment, g, got, Image{}, PerceptualKind::dists),
                   mock::dists_proxy(g, read_ppm(storage_.resolve(got))));
}

TEST_F(HttpFixture, TransientFailuresAreRetried) {
  server_->fail_next(2, 503);
  HttpAttributeExtractor ex(ep_);
  EXPECT_NO_THROW(ex.extract_attributes({"r/extract", entries_[1].garment, entries_[1].person}));
  EXPECT_EQ(server_->requests_seen(), 3);
}

TEST_F(HttpFixture, ExhaustedRetriesAreServiceUnavailable) {
  server_->fail_next(3, 429);
  HttpAttributeExtractor ex(ep_);
  EXPECT_EQ(error_of([&] { ex.extract_attributes({"r/extract", entries_[1].garment, entries_[1].person}); }),
            Errc::service_unavailable);
  EXPECT_EQ(server_->requests_seen(), 3);
}

TEST_F(HttpFixture, UnreachableServiceIsServiceUnavailable) {
  auto ep = ep_;
  server_->stop();
  HttpGarmentEditor ed(ep);
  EXPECT_EQ(error_of([&] { ed.edit_garment({"x/edit", entries_[0].garment, {}, {}}); }), Errc::service_unavailable);
}

TEST_F(HttpFixture, RefusedEditIsEditRejected) {
  static_cast<MockGarmentEditor&>(*backends_.editor).reject.insert("bad");
  const auto attrs = backends_.extractor->extract_attributes({"", entries_[0].garment, entries_[0].person});
  HttpGarmentEditor ed(ep_);
  ImageRef out{"o", "out/x.ppm", 0, 0, ImageRole::garment_edit};
  EXPECT_EQ(error_of([&] { ed.edit_garment({"bad/edit", entries_[0].garment, some_instruction(attrs), out}); }),
            Errc::edit_rejected);
  EXPECT_EQ(server_->requests_seen(), 1);
}

TEST_F(HttpFixture, NonJsonJudgeReplyIsUnparseableScore) {
  server_->garbage_judge(true);
  HttpJudge judge(ep_);
  JudgeRequest jr{"s/judge", "s", JudgeTarget::garment, entries_[0].garment, entries_[0].garment, "t", std::nullopt, {}};
  EXPECT_EQ(error_of([&] { judge.judge(jr); }), Errc::unparseable_score);
}

TEST_F(HttpFixture, TryOnResolutionMismatchCrossesTheWire) {
  const auto& e = entries_[0];
  write_pbm(storage_.resolve("bad_mask.pbm"), GrayImage(5, 5, 1));
  HttpTryOn t(ep_);
  ImageRef mask{"m", "bad_mask.pbm", 5, 5, ImageRole::mask};
  ImageRef out{"o", "out/p.ppm", 0, 0, ImageRole::person_edit};
  EXPECT_EQ(error_of([&] { t.try_on({"s/tryon", e.person, e.garment, mask, out}); }), Errc::resolution_mismatch);
}

TEST(Catalog, CategoryCountsFollowLargestRemainder) {
  TempDir dir("catalog");
  CatalogOptions opt;
  opt.count = 1000;
  opt.width = 8;
  opt.height = 8;
  const auto entries = synth_catalog(dir.path(), opt);
  std::map<GarmentCategory, int> n;
  for (const auto& e : entries) ++n[e.category];
  EXPECT_EQ(n[GarmentCategory::upper_body], 311);
  EXPECT_EQ(n[GarmentCategory::lower_body], 137);
  EXPECT_EQ(n[GarmentCategory::dresses], 552);
  EXPECT_EQ(load_catalog(dir.path() / "catalog.jsonl").size(), 1000u);
}

}  // namespace
}  // namespace vtedit

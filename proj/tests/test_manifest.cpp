// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include "generators.hpp"
#include "vtedit/manifest.hpp"

namespace vtedit {
namespace {

using testing::make_record;
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

TEST(Record, JsonRoundTrip) {
  auto r = make_record("s1", "g1", GarmentCategory::dresses, EditType::add_detail);
  r.instruction.slots = {{"feature", "bow"}};
  r.instruction.forward_delta = delta::SetColor{"red"};
  EXPECT_EQ(record_from_json(to_json(r)), r);
}

TEST(Record, RolesMustMatchSlots) {
  auto j = to_json(make_record("s1", "g1", GarmentCategory::dresses, EditType::add_detail));
  j["images"]["person"]["role"] = "garment";
  EXPECT_EQ(error_of([&] { record_from_json(j); }), Errc::malformed_document);
}

TEST(Manifest, SerializesSortedAndParsesBack) {
  Manifest m;
  m.seed = 9;
  m.records = {make_record("b", "g2", GarmentCategory::upper_body, EditType::change_color),
               make_record("a", "g1", GarmentCategory::lower_body, EditType::change_pattern, RecordStatus::rejected)};
  const auto text = serialize_manifest(m);
  auto back = parse_manifest(text);
  ASSERT_EQ(back.records.size(), 2u);
  EXPECT_EQ(back.records[0].sample_id, "a");
  EXPECT_EQ(back.seed, 9u);
  EXPECT_EQ(serialize_manifest(back), text);
}

TEST(Manifest, StatusMustAgreeWithScores) {
  Manifest m;
  auto r = make_record("a", "g", GarmentCategory::upper_body, EditType::change_color);
  r.person_score = make_score(80);  // not strictly above 80
  m.records = {r};
  EXPECT_EQ(error_of([&] { serialize_manifest(m); }), Errc::malformed_document);
  m.records = {make_record("a", "g", GarmentCategory::upper_body, EditType::change_color),
               make_record("a", "g", GarmentCategory::upper_body, EditType::change_color)};
  EXPECT_EQ(error_of([&] { serialize_manifest(m); }), Errc::duplicate_id);
}

TEST(RecordStore, AppendGetAndDuplicate) {
  TempDir dir("store");
  const auto path = dir.path() / "records.jsonl";
  auto r = make_record("s1", "g1", GarmentCategory::upper_body, EditType::change_color);
  {
    RecordStore store(path);
    store.append(r);
    EXPECT_EQ(store.get("s1"), r);
    EXPECT_EQ(error_of([&] { store.append(r); }), Errc::duplicate_id);
  }
  RecordStore reopened(path);
  EXPECT_EQ(reopened.get("s1"), r);
  EXPECT_EQ(error_of([&] { reopened.append(r); }), Errc::duplicate_id);
}

/// Writes part (or all) of each line to the real file, then "crashes".
class CrashingSink final : public AppendSink {
 public:
  CrashingSink(std::filesystem::path path, double fraction) : file_(path), fraction_(fraction) {}
  void append(std::string_view bytes) override {
    file_.append(bytes.substr(0, static_cast<std::size_t>(bytes.size() * fraction_)));
    throw std::runtime_error("simulated crash");
  }

 private:
  FileAppendSink file_;
  double fraction_;
};

TEST(RecordStore, CrashLeavesRecordAbsentOrWhole) {
  for (double fraction : {0.0, 0.1, 0.5, 0.99, 1.0}) {
    TempDir dir("crash");
    const auto path = dir.path() / "records.jsonl";
    auto keep = make_record("a", "g1", GarmentCategory::upper_body, EditType::change_color);
    auto victim = make_record("b", "g2", GarmentCategory::dresses, EditType::add_detail);
    { RecordStore(path).append(keep); }
    {
      RecordStore store(path, std::make_unique<CrashingSink>(path, fraction));
      EXPECT_EQ(error_of([&] { store.append(victim); }), Errc::storage_failure);
      EXPECT_FALSE(store.contains("b"));
    }
    RecordStore after(path);
    EXPECT_EQ(after.get("a"), keep);
    const auto got = after.get("b");
    if (fraction < 1.0) {
      EXPECT_FALSE(got.has_value()) << fraction;
    } else {
      EXPECT_EQ(got, victim);
    }
    // The log stays appendable after recovery.
    after.append(make_record("c", "g3", GarmentCategory::lower_body, EditType::change_material));
    EXPECT_TRUE(RecordStore(path).contains("c"));
  }
}

TEST(Splits, SharedIdentityAlwaysTogether) {
  Manifest m;
  m.records = {make_record("a", "g", GarmentCategory::upper_body, EditType::change_color),
               make_record("b", "g", GarmentCategory::upper_body, EditType::add_detail)};
  for (auto s : {Split::train, Split::test}) {
    auto out = assign_splits(m, {{"g", s}});
    EXPECT_EQ(out.records[0].split, s);
    EXPECT_EQ(out.records[1].split, s);
  }
  EXPECT_EQ(error_of([&] { assign_splits(m, {{"other", Split::test}}); }), Errc::unmapped_identity);
}

TEST(Splits, NoIdentitySpansBothSplitsOnLargeManifest) {
  SplitMix64 rng(21);
  Manifest m;
  std::set<std::string> ids;
  for (int i = 0; i < 1000; ++i) {
    const auto identity = "g" + std::to_string(rng.uniform_index(300));
    ids.insert(identity);
    m.records.push_back(make_record("s" + std::to_string(i), identity, GarmentCategory::dresses, EditType::change_color));
  }
  auto out = assign_splits(m, make_split_table(ids, 0.1, 4));
  for (const auto& a : out.records) {
    for (const auto& b : out.records) {
      if (a.garment_identity == b.garment_identity) {
        ASSERT_EQ(a.split, b.split);
      }
    }
  }
}

TEST(Splits, TableCsvRoundTrip) {
  SplitTable t{{"g1", Split::train}, {"g2", Split::test}};
  EXPECT_EQ(parse_split_table(serialize_split_table(t)), t);
  EXPECT_EQ(error_of([] { parse_split_table("garment_identity,split\ng1,holdout\n"); }), Errc::malformed_document);
}

TEST(Stats, EmptyManifestIsAllZero) {
  const auto s = compute_stats(Manifest{});
  EXPECT_EQ(s.verified, 0u);
  for (double p : s.edit_type_percent) EXPECT_EQ(p, 0.0);
  for (double p : s.category_percent) EXPECT_EQ(p, 0.0);
  EXPECT_EQ(s.distinct_identities, 0u);
}

TEST(Stats, OnlyVerifiedRecordsCountAndSplitsSumToTotal) {
  Manifest m;
  m.records = {make_record("a", "g1", GarmentCategory::upper_body, EditType::change_color, RecordStatus::verified, Split::train),
               make_record("b", "g1", GarmentCategory::upper_body, EditType::add_detail, RecordStatus::verified, Split::test),
               make_record("c", "g2", GarmentCategory::dresses, EditType::add_detail, RecordStatus::rejected, Split::test),
               make_record("d", "g3", GarmentCategory::dresses, EditType::add_detail, RecordStatus::candidate)};
  const auto s = compute_stats(m);
  EXPECT_EQ(s.verified, 2u);
  EXPECT_EQ(s.train + s.test + s.unassigned, s.verified);
  EXPECT_EQ(s.distinct_identities, 1u);
  EXPECT_EQ(s.unique_instructions, 4u);
  EXPECT_EQ(s.edit_type_percent[index_of(EditType::change_color)], 50.0);
}

std::string id_of(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "s%06zu", i);
  return buf;
}

Manifest test_fixture(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  Manifest m;
  for (std::size_t i = 0; i < n; ++i) {
    const auto cat = kAllCategories[rng.uniform_index(3)];
    const auto split = rng.uniform01() < 0.5 ? Split::test : Split::train;
    m.records.push_back(make_record(id_of(i), "g" + std::to_string(i), cat, kAllEditTypes[rng.uniform_index(7)],
                                    RecordStatus::verified, split));
  }
  return m;
}

TEST(Tasks, PairedAndVtoffTasksMirrorTheTestSplit) {
  const auto m = test_fixture(200, 1);
  std::size_t test = 0;
  for (const auto& r : m.records) test += r.split == Split::test;
  const auto paired = export_benchmark_tasks(m, TaskKind::vton_paired);
  const auto vtoff = export_benchmark_tasks(m, TaskKind::vtoff);
  ASSERT_EQ(paired.size(), test);
  ASSERT_EQ(vtoff.size(), test);
  for (const auto& t : paired) {
    const auto* r = m.find(t.task_id);
    ASSERT_NE(r, nullptr);
    EXPECT_EQ(t.ground_truth, r->person);
    EXPECT_EQ(t.person_input, r->person_edit);
    EXPECT_EQ(t.garment_input, r->garment_edit);
    EXPECT_EQ(t.instruction_text, r->instruction.reverse_text);
  }
  for (const auto& t : vtoff) {
    EXPECT_FALSE(t.garment_input.has_value());
    EXPECT_EQ(t.ground_truth, m.find(t.task_id)->garment);
  }
}

TEST(Tasks, UnpairedIsADerangementWithinCategory) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto m = test_fixture(5 + seed * 7, seed);
    const auto tasks = export_benchmark_tasks(m, TaskKind::vton_unpaired, seed);
    std::set<std::string> sources;
    std::map<GarmentCategory, int> per_cat;
    for (const auto& t : tasks) ++per_cat[t.category];
    const bool any_singleton = std::any_of(per_cat.begin(), per_cat.end(), [](const auto& kv) { return kv.second == 1; });
    for (const auto& t : tasks) {
      EXPECT_NE(t.garment_source, t.task_id);
      EXPECT_EQ(t.garment_input, m.find(t.garment_source)->garment_edit);
      if (!any_singleton) {
        EXPECT_EQ(m.find(t.garment_source)->category, t.category);
      }
      sources.insert(t.garment_source);
    }
    EXPECT_EQ(sources.size(), tasks.size()) << "pairing is a permutation";
    EXPECT_EQ(tasks, export_benchmark_tasks(m, TaskKind::vton_unpaired, seed));
  }
}

TEST(Tasks, SingletonCategoryBorrowsFromTheWholeSplit) {
  Manifest m;
  m.records = {make_record("a", "g1", GarmentCategory::dresses, EditType::change_color, RecordStatus::verified, Split::test),
               make_record("b", "g2", GarmentCategory::upper_body, EditType::change_color, RecordStatus::verified, Split::test),
               make_record("c", "g3", GarmentCategory::upper_body, EditType::change_color, RecordStatus::verified, Split::test)};
  for (const auto& t : export_benchmark_tasks(m, TaskKind::vton_unpaired, 3)) EXPECT_NE(t.garment_source, t.task_id);
}

TEST(Tasks, RequireAssignedSplits) {
  Manifest m;
  m.records = {make_record("a", "g1", GarmentCategory::dresses, EditType::change_color)};
  EXPECT_EQ(error_of([&] { export_benchmark_tasks(m, TaskKind::vtoff); }), Errc::split_not_assigned);
}

TEST(Tasks, JsonRoundTrip) {
  const auto m = test_fixture(30, 2);
  const auto tasks = export_benchmark_tasks(m, TaskKind::vton_unpaired, 1);
  EXPECT_EQ(parse_tasks(serialize_tasks(tasks)), tasks);
}

}  // namespace
}  // namespace vtedit

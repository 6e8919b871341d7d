// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Quadruplet records, the manifest, the durable record log, identity-level
/// splits, dataset statistics and benchmark task export.
///
/// Manifest file: one JSON header line {schema_version, seed, threshold}
/// followed by one record per line, sorted by sample id.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/clients.hpp"
#include "vtedit/jsonl.hpp"
#include "vtedit/verification.hpp"

namespace vtedit {

inline constexpr int kManifestSchemaVersion = 1;

enum class RecordStatus { candidate, verified, rejected };
enum class Split { train, test, unassigned };

inline constexpr std::string_view to_string(RecordStatus s) {
  switch (s) {
    case RecordStatus::candidate: return "candidate";
    case RecordStatus::verified: return "verified";
    case RecordStatus::rejected: return "rejected";
  }
  return "";
}

inline constexpr std::string_view to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::test: return "test";
    case Split::unassigned: return "unassigned";
  }
  return "";
}

inline std::optional<RecordStatus> status_from_string(std::string_view s) {
  for (auto v : {RecordStatus::candidate, RecordStatus::verified, RecordStatus::rejected}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline std::optional<Split> split_from_string(std::string_view s) {
  for (auto v : {Split::train, Split::test, Split::unassigned}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

struct QuadrupletRecord {
  std::string sample_id;
  std::string garment_identity;
  GarmentCategory category = GarmentCategory::upper_body;
  ImageRef garment;
  ImageRef person;
  ImageRef garment_edit;
  ImageRef person_edit;
  EditInstruction instruction;
  std::optional<JudgeScore> garment_score;
  std::optional<JudgeScore> person_score;
  RecordStatus status = RecordStatus::candidate;
  Split split = Split::unassigned;

  bool operator==(const QuadrupletRecord&) const = default;
};

inline nlohmann::json to_json(const QuadrupletRecord& r) {
  nlohmann::json j;
  j["sample_id"] = r.sample_id;
  j["garment_identity"] = r.garment_identity;
  j["category"] = std::string(to_string(r.category));
  j["images"] = {{"garment", to_json(r.garment)},
                 {"person", to_json(r.person)},
                 {"garment_edit", to_json(r.garment_edit)},
                 {"person_edit", to_json(r.person_edit)}};
  j["instruction"] = to_json(r.instruction);
  j["scores"] = {{"garment", r.garment_score ? to_json(*r.garment_score) : nlohmann::json()},
                 {"person", r.person_score ? to_json(*r.person_score) : nlohmann::json()}};
  j["status"] = std::string(to_string(r.status));
  j["split"] = std::string(to_string(r.split));
  return j;
}

inline QuadrupletRecord record_from_json(const nlohmann::json& j) {
  try {
    QuadrupletRecord r;
    r.sample_id = j.at("sample_id").get<std::string>();
    r.garment_identity = j.at("garment_identity").get<std::string>();
    auto c = category_from_string(j.at("category").get<std::string>());
    if (!c) throw Error(Errc::unknown_category, j.at("category").get<std::string>());
    r.category = *c;
    const auto& im = j.at("images");
    r.garment = image_ref_from_json(im.at("garment"));
    r.person = image_ref_from_json(im.at("person"));
    r.garment_edit = image_ref_from_json(im.at("garment_edit"));
    r.person_edit = image_ref_from_json(im.at("person_edit"));
    if (r.garment.role != ImageRole::garment || r.person.role != ImageRole::person ||
        r.garment_edit.role != ImageRole::garment_edit || r.person_edit.role != ImageRole::person_edit) {
      throw Error(Errc::malformed_document, r.sample_id + ": image roles do not match their slots");
    }
    r.instruction = instruction_from_json(j.at("instruction"));
    const auto& sc = j.at("scores");
    if (sc.contains("garment") && !sc["garment"].is_null()) r.garment_score = score_from_json(sc["garment"]);
    if (sc.contains("person") && !sc["person"].is_null()) r.person_score = score_from_json(sc["person"]);
    auto st = status_from_string(j.at("status").get<std::string>());
    auto sp = split_from_string(j.at("split").get<std::string>());
    if (!st || !sp) throw Error(Errc::malformed_document, r.sample_id + ": bad status or split");
    r.status = *st;
    r.split = *sp;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_document, std::string("record: ") + e.what());
  }
}

/// Status implied by the scores under threshold t.
inline RecordStatus judged_status(const QuadrupletRecord& r, double t) {
  if (!r.garment_score || !r.person_score) return RecordStatus::rejected;
  return passes_filter(*r.garment_score, *r.person_score, t) ? RecordStatus::verified : RecordStatus::rejected;
}

// ---------------------------------------------------------------------------
// Manifest
// ---------------------------------------------------------------------------

struct Manifest {
  int schema_version = kManifestSchemaVersion;
  std::uint64_t seed = 0;
  double threshold = kDefaultThreshold;
  std::vector<QuadrupletRecord> records;

  void sort() {
    std::sort(records.begin(), records.end(),
              [](const QuadrupletRecord& a, const QuadrupletRecord& b) { return a.sample_id < b.sample_id; });
  }

  const QuadrupletRecord* find(const std::string& id) const {
    auto it = std::lower_bound(records.begin(), records.end(), id,
                               [](const QuadrupletRecord& r, const std::string& k) { return r.sample_id < k; });
    return it != records.end() && it->sample_id == id ? &*it : nullptr;
  }
};

/// Throws MalformedDocument / DuplicateId when an invariant is broken.
inline void check_manifest(const Manifest& m) {
  for (std::size_t i = 0; i < m.records.size(); ++i) {
    const auto& r = m.records[i];
    if (i > 0) {
      const auto& prev = m.records[i - 1].sample_id;
      if (prev == r.sample_id) throw Error(Errc::duplicate_id, r.sample_id);
      if (prev > r.sample_id) throw Error(Errc::malformed_document, "records are not sorted by sample id");
    }
    if (r.status != RecordStatus::candidate && r.status != judged_status(r, m.threshold)) {
      throw Error(Errc::malformed_document, r.sample_id + ": status disagrees with scores at t=" +
                                                nlohmann::json(m.threshold).dump());
    }
  }
}

inline std::string serialize_manifest(Manifest m) {
  m.sort();
  check_manifest(m);
  std::string out = nlohmann::json{{"schema_version", m.schema_version}, {"seed", m.seed}, {"threshold", m.threshold}}.dump();
  out += "\n";
  for (const auto& r : m.records) {
    out += to_json(r).dump();
    out += "\n";
  }
  return out;
}

inline Manifest parse_manifest(std::string_view text) {
  Manifest m;
  std::size_t start = 0;
  bool header = true;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = text.substr(start, end - start);
    start = end + 1;
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_document, "manifest line is not JSON");
    if (header) {
      header = false;
      try {
        m.schema_version = j.at("schema_version").get<int>();
        m.seed = j.at("seed").get<std::uint64_t>();
        m.threshold = j.at("threshold").get<double>();
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed_document, std::string("manifest header: ") + e.what());
      }
      if (m.schema_version != kManifestSchemaVersion) {
        throw Error(Errc::malformed_document, "unsupported manifest schema " + std::to_string(m.schema_version));
      }
      continue;
    }
    m.records.push_back(record_from_json(j));
  }
  if (header) throw Error(Errc::malformed_document, "empty manifest");
  check_manifest(m);
  return m;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  write_file_atomic(path, serialize_manifest(m));
}

inline Manifest load_manifest(const std::filesystem::path& path) { return parse_manifest(read_file(path)); }

// ---------------------------------------------------------------------------
// Durable record log
// ---------------------------------------------------------------------------

/// Append-only record log: a record is acknowledged only after its line is
/// durable; a torn final line (crash mid-write) is discarded on reopen.
class RecordStore {
 public:
  explicit RecordStore(std::filesystem::path log_path) : path_(std::move(log_path)) {
    recover();
    sink_ = std::make_unique<FileAppendSink>(path_);
  }

  /// Uses `sink` for appends (fault injection); existing lines are still recovered from `log_path`.
  RecordStore(std::filesystem::path log_path, std::unique_ptr<AppendSink> sink)
      : path_(std::move(log_path)), sink_(std::move(sink)) {
    recover();
  }

  void append(const QuadrupletRecord& r) {
    std::lock_guard lock(mu_);
    if (records_.contains(r.sample_id)) throw Error(Errc::duplicate_id, r.sample_id);
    const std::string line = to_json(r).dump() + "\n";
    try {
      sink_->append(line);
    } catch (const Error& e) {
      if (e.code() == Errc::storage_failure) throw;
      throw Error(Errc::storage_failure, e.what());
    } catch (const std::exception& e) {
      throw Error(Errc::storage_failure, e.what());
    }
    records_.emplace(r.sample_id, r);
  }

  std::optional<QuadrupletRecord> get(const std::string& id) const {
    std::lock_guard lock(mu_);
    auto it = records_.find(id);
    if (it == records_.end()) return std::nullopt;
    return it->second;
  }

  bool contains(const std::string& id) const {
    std::lock_guard lock(mu_);
    return records_.contains(id);
  }

  std::size_t size() const {
    std::lock_guard lock(mu_);
    return records_.size();
  }

  /// All records in sample-id order.
  std::vector<QuadrupletRecord> records() const {
    std::lock_guard lock(mu_);
    std::vector<QuadrupletRecord> out;
    out.reserve(records_.size());
    for (const auto& [id, r] : records_) out.push_back(r);
    return out;
  }

  Manifest snapshot(std::uint64_t seed, double threshold) const {
    Manifest m;
    m.seed = seed;
    m.threshold = threshold;
    m.records = records();
    return m;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  void recover() {
    const auto log = read_log(path_);
    if (!log.torn_tail.empty() && std::filesystem::exists(path_)) truncate_torn_tail(path_, log);
    for (const auto& line : log.lines) {
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded()) throw Error(Errc::storage_failure, path_.string() + ": unreadable record line");
      auto r = record_from_json(j);
      const auto id = r.sample_id;
      records_.insert_or_assign(id, std::move(r));
    }
  }

  std::filesystem::path path_;
  std::unique_ptr<AppendSink> sink_;
  mutable std::mutex mu_;
  std::map<std::string, QuadrupletRecord> records_;
};

// ---------------------------------------------------------------------------
// Splits
// ---------------------------------------------------------------------------

using SplitTable = std::map<std::string, Split>;

/// CSV with header `garment_identity,split`.
inline SplitTable parse_split_table(std::string_view text) {
  SplitTable t;
  std::istringstream in{std::string(text)};
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "garment_identity,split") continue;
    }
    const auto comma = line.rfind(',');
    if (comma == std::string::npos) throw Error(Errc::malformed_document, "split table line without comma: " + line);
    const auto split = split_from_string(line.substr(comma + 1));
    if (!split || *split == Split::unassigned) throw Error(Errc::malformed_document, "bad split in: " + line);
    t[line.substr(0, comma)] = *split;
  }
  return t;
}

inline std::string serialize_split_table(const SplitTable& t) {
  std::string out = "garment_identity,split\n";
  for (const auto& [id, s] : t) out += id + "," + std::string(to_string(s)) + "\n";
  return out;
}

/// Deterministic identity-level table: each identity goes to test with
/// probability `test_fraction`, keyed on (seed, identity).
inline SplitTable make_split_table(const std::set<std::string>& identities, double test_fraction, std::uint64_t seed) {
  if (test_fraction < 0 || test_fraction > 1) throw Error(Errc::invalid_argument, "test fraction outside [0,1]");
  SplitTable t;
  for (const auto& id : identities) {
    SplitMix64 rng(derive_seed(seed, {"split", id}));
    t[id] = rng.uniform01() < test_fraction ? Split::test : Split::train;
  }
  return t;
}

inline Manifest assign_splits(Manifest m, const SplitTable& table) {
  for (auto& r : m.records) {
    auto it = table.find(r.garment_identity);
    if (it == table.end()) throw Error(Errc::unmapped_identity, r.garment_identity);
    r.split = it->second;
  }
  return m;
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

struct DatasetStats {
  std::size_t verified = 0;
  std::array<std::size_t, kEditTypeCount> by_edit_type{};
  std::array<double, kEditTypeCount> edit_type_percent{};  // integer percent
  std::array<std::size_t, 3> by_category{};
  std::array<double, 3> category_percent{};  // one decimal
  std::size_t train = 0, test = 0, unassigned = 0;
  std::size_t distinct_identities = 0;
  std::size_t unique_instructions = 0;
};

/// Streaming accumulator behind compute_stats.
class StatsAccumulator {
 public:
  void add(const QuadrupletRecord& r) {
    if (r.status != RecordStatus::verified) return;
    ++s_.verified;
    ++s_.by_edit_type[index_of(r.instruction.edit_type)];
    ++s_.by_category[static_cast<std::size_t>(r.category)];
    (r.split == Split::train ? s_.train : r.split == Split::test ? s_.test : s_.unassigned)++;
    identities_.insert(r.garment_identity);
    if (!r.instruction.forward_text.empty()) instructions_.insert(r.instruction.forward_text);
    if (!r.instruction.reverse_text.empty()) instructions_.insert(r.instruction.reverse_text);
  }

  DatasetStats finish() const {
    DatasetStats s = s_;
    s.distinct_identities = identities_.size();
    s.unique_instructions = instructions_.size();
    if (s.verified > 0) {
      const double n = static_cast<double>(s.verified);
      for (std::size_t i = 0; i < kEditTypeCount; ++i) s.edit_type_percent[i] = std::round(100.0 * s.by_edit_type[i] / n);
      for (std::size_t i = 0; i < 3; ++i) s.category_percent[i] = std::round(1000.0 * s.by_category[i] / n) / 10.0;
    }
    return s;
  }

 private:
  DatasetStats s_;
  std::set<std::string> identities_;
  std::set<std::string> instructions_;
};

inline DatasetStats compute_stats(const Manifest& m) {
  StatsAccumulator acc;
  for (const auto& r : m.records) acc.add(r);
  return acc.finish();
}

inline nlohmann::json to_json(const DatasetStats& s) {
  nlohmann::json j;
  j["verified"] = s.verified;
  for (auto t : kAllEditTypes) {
    j["edit_types"][std::string(to_string(t))] = {{"count", s.by_edit_type[index_of(t)]},
                                                  {"percent", s.edit_type_percent[index_of(t)]}};
  }
  for (auto c : kAllCategories) {
    j["categories"][std::string(to_string(c))] = {{"count", s.by_category[static_cast<std::size_t>(c)]},
                                                  {"percent", s.category_percent[static_cast<std::size_t>(c)]}};
  }
  j["splits"] = {{"train", s.train}, {"test", s.test}, {"unassigned", s.unassigned}};
  j["distinct_identities"] = s.distinct_identities;
  j["unique_instructions"] = s.unique_instructions;
  return j;
}

inline std::string render_table(const DatasetStats& s) {
  std::ostringstream o;
  o << std::left << std::setw(18) << "Edit type" << std::right << std::setw(9) << "Samples" << std::setw(8) << "%"
    << "\n";
  for (auto t : kAllEditTypes) {
    o << std::left << std::setw(18) << display_name(t) << std::right << std::setw(9) << s.by_edit_type[index_of(t)]
      << std::setw(8) << s.edit_type_percent[index_of(t)] << "\n";
  }
  o << "\n" << std::left << std::setw(18) << "Category" << std::right << std::setw(9) << "Samples" << std::setw(8)
    << "%" << "\n";
  o << std::fixed << std::setprecision(1);
  for (auto c : kAllCategories) {
    const auto i = static_cast<std::size_t>(c);
    o << std::left << std::setw(18) << to_string(c) << std::right << std::setw(9) << s.by_category[i] << std::setw(8)
      << s.category_percent[i] << "\n";
  }
  o << "\nVerified " << s.verified << " (train " << s.train << ", test " << s.test << ", unassigned " << s.unassigned
    << "); identities " << s.distinct_identities << "; unique instructions " << s.unique_instructions << "\n";
  return o.str();
}

// ---------------------------------------------------------------------------
// Benchmark tasks
// ---------------------------------------------------------------------------

enum class TaskKind { vton_paired, vton_unpaired, vtoff };

inline constexpr std::string_view to_string(TaskKind k) {
  switch (k) {
    case TaskKind::vton_paired: return "vton_paired";
    case TaskKind::vton_unpaired: return "vton_unpaired";
    case TaskKind::vtoff: return "vtoff";
  }
  return "";
}

inline std::optional<TaskKind> task_kind_from_string(std::string_view s) {
  for (auto k : {TaskKind::vton_paired, TaskKind::vton_unpaired, TaskKind::vtoff}) {
    if (to_string(k) == s) return k;
  }
  return std::nullopt;
}

struct BenchmarkTask {
  std::string task_id;
  TaskKind kind = TaskKind::vton_paired;
  EditType edit_type = EditType::change_color;
  GarmentCategory category = GarmentCategory::upper_body;
  ImageRef person_input;
  /// Absent for vtoff.
  std::optional<ImageRef> garment_input;
  /// Sample whose edited garment is the garment input.
  std::string garment_source;
  std::string instruction_text;
  ImageRef ground_truth;

  bool operator==(const BenchmarkTask&) const = default;
};

inline nlohmann::json to_json(const BenchmarkTask& t) {
  nlohmann::json j{{"task_id", t.task_id},
                   {"task", std::string(to_string(t.kind))},
                   {"edit_type", std::string(to_string(t.edit_type))},
                   {"category", std::string(to_string(t.category))},
                   {"person_input", to_json(t.person_input)},
                   {"instruction_text", t.instruction_text},
                   {"ground_truth", to_json(t.ground_truth)}};
  if (t.garment_input) {
    j["garment_input"] = to_json(*t.garment_input);
    j["garment_source"] = t.garment_source;
  }
  return j;
}

inline BenchmarkTask task_from_json(const nlohmann::json& j) {
  try {
    BenchmarkTask t;
    t.task_id = j.at("task_id").get<std::string>();
    auto k = task_kind_from_string(j.at("task").get<std::string>());
    auto e = edit_type_from_string(j.at("edit_type").get<std::string>());
    auto c = category_from_string(j.at("category").get<std::string>());
    if (!k || !e || !c) throw Error(Errc::malformed_document, t.task_id + ": bad task, edit type or category");
    t.kind = *k;
    t.edit_type = *e;
    t.category = *c;
    t.person_input = image_ref_from_json(j.at("person_input"));
    if (j.contains("garment_input")) {
      t.garment_input = image_ref_from_json(j["garment_input"]);
      t.garment_source = j.value("garment_source", "");
    }
    t.instruction_text = j.at("instruction_text").get<std::string>();
    t.ground_truth = image_ref_from_json(j.at("ground_truth"));
    return t;
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::malformed_document, std::string("task: ") + ex.what());
  }
}

namespace detail {

/// Cyclic shift by 1 + (h mod (n-1)); never maps an index to itself.
inline std::size_t rotation(std::size_t n, std::uint64_t h) { return 1 + static_cast<std::size_t>(h % (n - 1)); }

}  // namespace detail

/// Tasks over verified test records, in sample-id order. Unpaired garment
/// inputs come from a seed-keyed rotation within (category, test), so the
/// pairing is a permutation with no fixed points; categories with a single
/// test record are rotated together instead.
inline std::vector<BenchmarkTask> export_benchmark_tasks(const Manifest& manifest, TaskKind kind, std::uint64_t seed = 0) {
  std::vector<const QuadrupletRecord*> test;
  for (const auto& r : manifest.records) {
    if (r.status != RecordStatus::verified) continue;
    if (r.split == Split::unassigned) throw Error(Errc::split_not_assigned, r.sample_id);
    if (r.split == Split::test) test.push_back(&r);
  }
  std::sort(test.begin(), test.end(), [](auto* a, auto* b) { return a->sample_id < b->sample_id; });

  std::map<std::string, const QuadrupletRecord*> partner;
  if (kind == TaskKind::vton_unpaired) {
    if (test.size() == 1) throw Error(Errc::invalid_argument, "unpaired tasks need at least two test records");
    std::map<GarmentCategory, std::vector<const QuadrupletRecord*>> groups;
    for (auto* r : test) groups[r->category].push_back(r);
    // Categories with a single test record are pooled; a pool of one joins the largest group.
    std::vector<std::pair<std::string, std::vector<const QuadrupletRecord*>>> cycles;
    std::vector<const QuadrupletRecord*> pool;
    for (const auto& [cat, group] : groups) {
      if (group.size() >= 2) {
        cycles.emplace_back(std::string(to_string(cat)), group);
      } else {
        pool.push_back(group.front());
      }
    }
    if (pool.size() >= 2) {
      cycles.emplace_back("pooled", pool);
    } else if (pool.size() == 1) {
      auto largest = std::max_element(cycles.begin(), cycles.end(),
                                      [](const auto& x, const auto& y) { return x.second.size() < y.second.size(); });
      largest->second.push_back(pool.front());
      std::sort(largest->second.begin(), largest->second.end(),
                [](auto* x, auto* y) { return x->sample_id < y->sample_id; });
      largest->first += "+pooled";
    }
    for (const auto& [key, cycle] : cycles) {
      const auto k = detail::rotation(cycle.size(), derive_seed(seed, {"unpaired", key}));
      for (std::size_t i = 0; i < cycle.size(); ++i) partner[cycle[i]->sample_id] = cycle[(i + k) % cycle.size()];
    }
  }

  std::vector<BenchmarkTask> tasks;
  tasks.reserve(test.size());
  for (auto* r : test) {
    BenchmarkTask t;
    t.task_id = r->sample_id;
    t.kind = kind;
    t.edit_type = r->instruction.edit_type;
    t.category = r->category;
    t.person_input = r->person_edit;
    t.instruction_text = r->instruction.reverse_text;
    switch (kind) {
      case TaskKind::vton_paired:
        t.garment_input = r->garment_edit;
        t.garment_source = r->sample_id;
        t.ground_truth = r->person;
        break;
      case TaskKind::vton_unpaired: {
        const auto* p = partner.at(r->sample_id);
        t.garment_input = p->garment_edit;
        t.garment_source = p->sample_id;
        t.ground_truth = r->person;
        break;
      }
      case TaskKind::vtoff:
        t.ground_truth = r->garment;
        break;
    }
    tasks.push_back(std::move(t));
  }
  return tasks;
}

inline std::string serialize_tasks(const std::vector<BenchmarkTask>& tasks) {
  std::string out;
  for (const auto& t : tasks) out += to_json(t).dump() + "\n";
  return out;
}

inline std::vector<BenchmarkTask> parse_tasks(std::string_view text) {
  std::vector<BenchmarkTask> out;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_document, "task line is not JSON");
    out.push_back(task_from_json(j));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Judge training records
// ---------------------------------------------------------------------------

/// One line per scored (record, target): the image judged, its source, the
/// instruction and the score.
inline std::string export_judge_records(const Manifest& m) {
  std::string out;
  for (const auto& r : m.records) {
    auto emit = [&](const std::optional<JudgeScore>& s, JudgeTarget target, const ImageRef& original, const ImageRef& edited) {
      if (!s) return;
      out += nlohmann::json{{"sample_id", r.sample_id},
                            {"target", std::string(to_string(target))},
                            {"original", to_json(original)},
                            {"image", to_json(edited)},
                            {"instruction_text", r.instruction.forward_text},
                            {"score", s->score},
                            {"status", std::string(to_string(r.status))}}
                 .dump() +
             "\n";
    };
    emit(r.garment_score, JudgeTarget::garment, r.garment, r.garment_edit);
    emit(r.person_score, JudgeTarget::person, r.person, r.person_edit);
  }
  return out;
}

}  // namespace vtedit

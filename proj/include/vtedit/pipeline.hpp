// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Four-stage generation run (extract + instruct, edit, mask + try-on, judge)
/// with per-(sample, stage) checkpoints, failure isolation and resume.
///
/// Run directory `<root>/runs/<run_id>/`:
///   config.json        config snapshot
///   catalog.jsonl      catalog snapshot
///   checkpoint.jsonl   one event per completed (sample, stage)
///   records.jsonl      durable record log
///   errors.jsonl       terminal per-sample failures (written on finalize)
///   manifest.jsonl     sealed manifest (written on finalize)
///   images/<sample>/   garment_edit.ppm, mask.pbm, person_edit.ppm

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdlib>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/catalog.hpp"
#include "vtedit/evaluate.hpp"
#include "vtedit/http_clients.hpp"
#include "vtedit/manifest.hpp"
#include "vtedit/mask.hpp"
#include "vtedit/mock_backends.hpp"

namespace vtedit {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
  std::uint64_t seed = 0;
  double threshold = kDefaultThreshold;
  /// "mock" or "http".
  std::string backend = "mock";
  ServiceEndpoint extract, edit, tryon, judge;
  EditMix mix = EditMix::dataset_default();
  /// Candidate instructions per catalog garment.
  int oversampling = 1;
  int workers = 4;
  std::filesystem::path storage_root = ".";
  /// Empty: derived from the seed.
  std::string run_id;
  /// Attribute sidecars for the mock extractor; relative to the storage root.
  std::string sidecar_dir = "attributes";
  int mask_margin = 0;
  ClassTable class_table = ClassTable::standard();
  /// Optional split table (CSV) applied when the manifest is sealed.
  std::string split_table;

  std::string effective_run_id() const { return run_id.empty() ? "run-" + std::to_string(seed) : run_id; }
  std::filesystem::path run_dir() const { return storage_root / "runs" / effective_run_id(); }

  void validate() const {
    if (!(threshold >= 0 && threshold <= 100)) throw Error(Errc::config_invalid, "threshold must lie in [0,100]");
    if (backend != "mock" && backend != "http") throw Error(Errc::config_invalid, "backend must be mock or http");
    if (oversampling < 1) throw Error(Errc::config_invalid, "oversampling must be >= 1");
    if (workers < 1) throw Error(Errc::config_invalid, "workers must be >= 1");
    if (mask_margin < 0) throw Error(Errc::config_invalid, "mask_margin must be >= 0");
    std::set<EditType> seen;
    for (const auto& [t, w] : mix.weights) {
      if (!seen.insert(t).second) throw Error(Errc::config_invalid, "edit type listed twice in the mix");
      if (w < 0) throw Error(Errc::config_invalid, "negative edit-type proportion");
    }
    if (seen.size() != kEditTypeCount) throw Error(Errc::config_invalid, "edit mix must list all seven edit types");
    if (std::abs(mix.total() - 100.0) > 1e-6) throw Error(Errc::config_invalid, "edit-type proportions must sum to 100");
    if (backend == "http") {
      extract.validate("extract");
      edit.validate("edit");
      tryon.validate("tryon");
      judge.validate("judge");
      for (const auto* e : {&extract, &edit, &tryon, &judge}) {
        if (e->base_uri.empty()) throw Error(Errc::config_invalid, "http backend needs every stage base_uri");
      }
    }
  }
};

inline nlohmann::json to_json(const PipelineConfig& c) {
  nlohmann::json mix = nlohmann::json::array();
  for (const auto& [t, w] : c.mix.weights) mix.push_back({{"edit_type", std::string(to_string(t))}, {"percent", w}});
  return {{"seed", c.seed},
          {"threshold", c.threshold},
          {"backend", c.backend},
          {"endpoints", {{"extract", to_json(c.extract)}, {"edit", to_json(c.edit)}, {"tryon", to_json(c.tryon)}, {"judge", to_json(c.judge)}}},
          {"edit_mix", mix},
          {"oversampling", c.oversampling},
          {"workers", c.workers},
          {"storage_root", c.storage_root.string()},
          {"run_id", c.run_id},
          {"sidecar_dir", c.sidecar_dir},
          {"mask_margin", c.mask_margin},
          {"class_table", to_json(c.class_table)},
          {"split_table", c.split_table}};
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
  PipelineConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.threshold = j.value("threshold", c.threshold);
    c.backend = j.value("backend", c.backend);
    if (j.contains("endpoints")) {
      const auto& e = j["endpoints"];
      if (e.contains("extract")) c.extract = endpoint_from_json(e["extract"]);
      if (e.contains("edit")) c.edit = endpoint_from_json(e["edit"]);
      if (e.contains("tryon")) c.tryon = endpoint_from_json(e["tryon"]);
      if (e.contains("judge")) c.judge = endpoint_from_json(e["judge"]);
    }
    if (j.contains("edit_mix")) {
      c.mix.weights.clear();
      for (const auto& w : j["edit_mix"]) {
        auto t = edit_type_from_string(w.at("edit_type").get<std::string>());
        if (!t) throw Error(Errc::config_invalid, "unknown edit type in edit_mix");
        c.mix.weights.emplace_back(*t, w.at("percent").get<double>());
      }
    }
    c.oversampling = j.value("oversampling", c.oversampling);
    c.workers = j.value("workers", c.workers);
    c.storage_root = j.value("storage_root", c.storage_root.string());
    c.run_id = j.value("run_id", c.run_id);
    c.sidecar_dir = j.value("sidecar_dir", c.sidecar_dir);
    c.mask_margin = j.value("mask_margin", c.mask_margin);
    if (j.contains("class_table")) c.class_table = class_table_from_json(j["class_table"]);
    c.split_table = j.value("split_table", c.split_table);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_invalid, std::string("config: ") + e.what());
  }
  return c;
}

/// VTEDIT_SEED, VTEDIT_THRESHOLD, VTEDIT_BACKEND, VTEDIT_WORKERS,
/// VTEDIT_OVERSAMPLING, VTEDIT_STORAGE_ROOT, VTEDIT_RUN_ID and
/// VTEDIT_{EXTRACT,EDIT,TRYON,JUDGE}_URI override file values.
inline void apply_env_overrides(PipelineConfig& c, const std::function<const char*(const char*)>& getenv_fn = std::getenv) {
  auto num = [&](const char* name, auto& field) {
    if (const char* v = getenv_fn(name)) {
      try {
        std::size_t used = 0;
        const std::string s(v);
        if constexpr (std::is_same_v<std::decay_t<decltype(field)>, double>) {
          field = std::stod(s, &used);
        } else if constexpr (std::is_same_v<std::decay_t<decltype(field)>, std::uint64_t>) {
          field = std::stoull(s, &used);
        } else {
          field = std::stoi(s, &used);
        }
        if (used != s.size()) throw std::invalid_argument(s);
      } catch (const std::exception&) {
        throw Error(Errc::config_invalid, std::string(name) + " is not a number: " + v);
      }
    }
  };
  num("VTEDIT_SEED", c.seed);
  num("VTEDIT_THRESHOLD", c.threshold);
  num("VTEDIT_WORKERS", c.workers);
  num("VTEDIT_OVERSAMPLING", c.oversampling);
  if (const char* v = getenv_fn("VTEDIT_BACKEND")) c.backend = v;
  if (const char* v = getenv_fn("VTEDIT_STORAGE_ROOT")) c.storage_root = v;
  if (const char* v = getenv_fn("VTEDIT_RUN_ID")) c.run_id = v;
  if (const char* v = getenv_fn("VTEDIT_EXTRACT_URI")) c.extract.base_uri = v;
  if (const char* v = getenv_fn("VTEDIT_EDIT_URI")) c.edit.base_uri = v;
  if (const char* v = getenv_fn("VTEDIT_TRYON_URI")) c.tryon.base_uri = v;
  if (const char* v = getenv_fn("VTEDIT_JUDGE_URI")) c.judge.base_uri = v;
}

inline ModelBackends make_backends(const PipelineConfig& c) {
  StorageRoot storage{c.storage_root};
  if (c.backend == "http") return make_http_backends(c.extract, c.edit, c.tryon, c.judge);
  return make_mock_backends(storage, storage.resolve(c.sidecar_dir));
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

enum class Stage { stage1, stage2, stage3, stage4, done, failed };

inline constexpr std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::stage1: return "stage1";
    case Stage::stage2: return "stage2";
    case Stage::stage3: return "stage3";
    case Stage::stage4: return "stage4";
    case Stage::done: return "done";
    case Stage::failed: return "failed";
  }
  return "";
}

inline std::optional<Stage> stage_from_string(std::string_view s) {
  for (auto v : {Stage::stage1, Stage::stage2, Stage::stage3, Stage::stage4, Stage::done, Stage::failed}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

inline std::string content_hash(std::string_view bytes) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(bytes)));
  return buf;
}

/// Completed stages of one sample, from the checkpoint log.
struct SampleState {
  Stage cursor = Stage::stage1;  // next stage to run
  std::map<Stage, nlohmann::json> outputs;
};

class CheckpointLog {
 public:
  explicit CheckpointLog(std::filesystem::path path) : path_(std::move(path)) {
    const auto log = read_log(path_);
    if (!log.torn_tail.empty()) truncate_torn_tail(path_, log);
    for (std::size_t i = 0; i < log.lines.size(); ++i) {
      auto j = nlohmann::json::parse(log.lines[i], nullptr, false);
      std::optional<Stage> stage;
      if (!j.is_discarded() && j.is_object() && j.contains("sample_id") && j.contains("stage") && j["stage"].is_string()) {
        stage = stage_from_string(j["stage"].get<std::string>());
      }
      if (!stage || !j["sample_id"].is_string()) {
        throw Error(Errc::checkpoint_corrupt, path_.string() + ": line " + std::to_string(i + 1));
      }
      auto& st = states_[j["sample_id"].get<std::string>()];
      st.outputs[*stage] = j.value("data", nlohmann::json::object());
      if (*stage == Stage::failed || *stage == Stage::done) {
        st.cursor = *stage;
      } else if (static_cast<int>(*stage) + 1 > static_cast<int>(st.cursor)) {
        st.cursor = static_cast<Stage>(static_cast<int>(*stage) + 1);
      }
    }
    sink_ = std::make_unique<FileAppendSink>(path_);
  }

  void record(const std::string& sample_id, Stage stage, const nlohmann::json& data) {
    const auto line = nlohmann::json{{"sample_id", sample_id}, {"stage", std::string(to_string(stage))}, {"data", data}}.dump() + "\n";
    std::lock_guard lock(mu_);
    sink_->append(line);
    auto& st = states_[sample_id];
    st.outputs[stage] = data;
    st.cursor = (stage == Stage::done || stage == Stage::failed) ? stage : static_cast<Stage>(static_cast<int>(stage) + 1);
  }

  SampleState state(const std::string& sample_id) const {
    std::lock_guard lock(mu_);
    auto it = states_.find(sample_id);
    return it == states_.end() ? SampleState{} : it->second;
  }

  std::map<std::string, SampleState> all() const {
    std::lock_guard lock(mu_);
    return states_;
  }

 private:
  std::filesystem::path path_;
  std::unique_ptr<FileAppendSink> sink_;
  mutable std::mutex mu_;
  std::map<std::string, SampleState> states_;
};

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

/// Called after each completed stage; returning true halts that sample there
/// (simulates an interrupted process).
using StopPolicy = std::function<bool(const std::string& sample_id, Stage completed)>;

struct SampleFailure {
  std::string sample_id;
  std::string code;
  std::string message;
};

struct RunResult {
  bool interrupted = false;
  std::filesystem::path run_dir;
  /// Sealed manifest; empty when interrupted.
  std::optional<Manifest> manifest;
  std::vector<SampleFailure> failures;
  /// Service calls made during this invocation, per stage.
  std::map<Stage, std::size_t> stage_runs;
};

struct SampleJob {
  std::string sample_id;
  CatalogEntry entry;
};

inline std::vector<SampleJob> plan_samples(const std::vector<CatalogEntry>& catalog, int oversampling) {
  std::vector<SampleJob> jobs;
  for (const auto& e : catalog) {
    for (int k = 0; k < oversampling; ++k) jobs.push_back({e.garment_id + "-" + std::to_string(k), e});
  }
  std::sort(jobs.begin(), jobs.end(), [](const auto& a, const auto& b) { return a.sample_id < b.sample_id; });
  for (std::size_t i = 1; i < jobs.size(); ++i) {
    if (jobs[i].sample_id == jobs[i - 1].sample_id) throw Error(Errc::duplicate_id, jobs[i].sample_id);
  }
  return jobs;
}

class Pipeline {
  using StageCounters = std::array<std::atomic<std::size_t>, 4>;

 public:
  Pipeline(PipelineConfig config, ModelBackends backends) : cfg_(std::move(config)), b_(std::move(backends)) {
    cfg_.validate();
  }

  const PipelineConfig& config() const { return cfg_; }

  /// Starts (or continues) the run for `catalog`.
  RunResult run(const std::vector<CatalogEntry>& catalog, const StopPolicy& stop = {}) {
    if (catalog.empty()) throw Error(Errc::config_invalid, "catalog is empty");
    const auto dir = cfg_.run_dir();
    std::filesystem::create_directories(dir);
    std::string lines;
    for (const auto& e : catalog) lines += to_json(e).dump() + "\n";
    if (!std::filesystem::exists(dir / "catalog.jsonl")) write_file_atomic(dir / "catalog.jsonl", lines);
    if (!std::filesystem::exists(dir / "config.json")) write_file_atomic(dir / "config.json", to_json(cfg_).dump(2) + "\n");
    return execute(catalog, stop);
  }

  /// Completes unfinished samples of an existing run.
  RunResult resume(const StopPolicy& stop = {}) {
    const auto dir = cfg_.run_dir();
    if (!std::filesystem::exists(dir / "checkpoint.jsonl") || !std::filesystem::exists(dir / "catalog.jsonl")) {
      throw Error(Errc::checkpoint_corrupt, "no checkpoint in " + dir.string());
    }
    return execute(load_catalog(dir / "catalog.jsonl"), stop);
  }

 private:
  std::string rel(const std::string& sample_id, const char* file) const {
    return "runs/" + cfg_.effective_run_id() + "/images/" + sample_id + "/" + file;
  }

  bool output_intact(const nlohmann::json& ref_json, const std::string& hash) const {
    try {
      const auto ref = image_ref_from_json(ref_json);
      const auto path = storage().resolve(ref);
      return std::filesystem::exists(path) && content_hash(read_file(path)) == hash;
    } catch (const std::exception&) {
      return false;
    }
  }

  StorageRoot storage() const { return StorageRoot{cfg_.storage_root}; }

  /// Earliest stage whose recorded outputs are missing or altered.
  Stage first_invalid_stage(const SampleState& st) const {
    if (st.cursor == Stage::done || st.cursor == Stage::failed) return st.cursor;
    if (st.cursor > Stage::stage2) {
      const auto& o = st.outputs.at(Stage::stage2);
      if (!output_intact(o.at("garment_edit"), o.at("hash").get<std::string>())) return Stage::stage2;
    }
    if (st.cursor > Stage::stage3) {
      const auto& o = st.outputs.at(Stage::stage3);
      if (!output_intact(o.at("mask"), o.at("mask_hash").get<std::string>()) ||
          !output_intact(o.at("person_edit"), o.at("person_hash").get<std::string>())) {
        return Stage::stage3;
      }
    }
    return st.cursor;
  }

  static nlohmann::json written(const ImageRef& ref, const StorageRoot& s, const char* ref_key, const char* hash_key) {
    return {{ref_key, to_json(ref)}, {hash_key, content_hash(read_file(s.resolve(ref)))}};
  }

  /// Runs the remaining stages of one sample; returns false if halted.
  bool process(const SampleJob& job, CheckpointLog& log, RecordStore& store, const StopPolicy& stop,
               StageCounters& counts) {
    const auto& id = job.sample_id;
    const auto& e = job.entry;
    const auto s = storage();
    SampleState st = log.state(id);
    Stage stage = first_invalid_stage(st);
    if (stage == Stage::done || stage == Stage::failed) return true;

    auto halt = [&](Stage completed) { return stop && stop(id, completed); };
    try {
      // Stage 1: attributes and instruction.
      if (stage == Stage::stage1) {
        const auto attrs = b_.extractor->extract_attributes({request_id(id, "extract"), e.garment, e.person});
        SplitMix64 rng(derive_seed(cfg_.seed, {id, "edit-type"}));
        const auto type = draw_edit_type(enumerate_valid_edits(attrs), cfg_.mix, rng);
        const auto ins = synthesize_instruction(attrs, type, instruction_seed(cfg_.seed, id, type));
        nlohmann::json data{{"attributes", to_json(attrs)}, {"instruction", to_json(ins)}};
        log.record(id, Stage::stage1, data);
        ++counts[0];
        st.outputs[Stage::stage1] = data;
        stage = Stage::stage2;
        if (halt(Stage::stage1)) return false;
      }
      const auto ins = instruction_from_json(st.outputs.at(Stage::stage1).at("instruction"));

      // Stage 2: garment edit.
      if (stage == Stage::stage2) {
        ImageRef out{id + "-garment-edit", rel(id, "garment_edit.ppm"), 0, 0, ImageRole::garment_edit};
        const auto ref = b_.editor->edit_garment({request_id(id, "edit"), e.garment, ins, out});
        auto data = written(ref, s, "garment_edit", "hash");
        log.record(id, Stage::stage2, data);
        ++counts[1];
        st.outputs[Stage::stage2] = data;
        stage = Stage::stage3;
        if (halt(Stage::stage2)) return false;
      }
      const auto garment_edit = image_ref_from_json(st.outputs.at(Stage::stage2).at("garment_edit"));

      // Stage 3: mask and try-on.
      if (stage == Stage::stage3) {
        LabelMap labels{read_pgm(s.resolve(e.label_map)), cfg_.class_table.names};
        const auto mask = bbox_mask(labels, cfg_.class_table, e.category, cfg_.mask_margin);
        ImageRef mask_ref{id + "-mask", rel(id, "mask.pbm"), mask.bits.width, mask.bits.height, ImageRole::mask};
        std::filesystem::create_directories(s.resolve(mask_ref).parent_path());
        write_pbm(s.resolve(mask_ref), mask.bits);
        ImageRef out{id + "-person-edit", rel(id, "person_edit.ppm"), 0, 0, ImageRole::person_edit};
        const auto person_edit = b_.try_on->try_on({request_id(id, "tryon"), e.person, garment_edit, mask_ref, out});
        auto data = written(mask_ref, s, "mask", "mask_hash");
        data.update(written(person_edit, s, "person_edit", "person_hash"));
        log.record(id, Stage::stage3, data);
        ++counts[2];
        st.outputs[Stage::stage3] = data;
        stage = Stage::stage4;
        if (halt(Stage::stage3)) return false;
      }
      const auto& o3 = st.outputs.at(Stage::stage3);
      const auto mask_ref = image_ref_from_json(o3.at("mask"));
      const auto person_edit = image_ref_from_json(o3.at("person_edit"));

      // Stage 4: judge both edits.
      if (stage == Stage::stage4) {
        JudgeRequest g{request_id(id, "judge-garment"), id, JudgeTarget::garment, e.garment, garment_edit,
                       ins.forward_text, ins, {}};
        JudgeRequest p{request_id(id, "judge-person"), id, JudgeTarget::person, e.person, person_edit,
                       ins.forward_text, ins, {garment_edit, mask_ref}};
        const auto gs = b_.judge->judge(g);
        const auto ps = b_.judge->judge(p);
        nlohmann::json data{{"garment_score", to_json(gs)}, {"person_score", to_json(ps)}};
        log.record(id, Stage::stage4, data);
        ++counts[3];
        st.outputs[Stage::stage4] = data;
        stage = Stage::done;
        if (halt(Stage::stage4)) return false;
      }

      QuadrupletRecord r;
      r.sample_id = id;
      r.garment_identity = e.garment_identity;
      r.category = e.category;
      r.garment = e.garment;
      r.person = e.person;
      r.garment_edit = garment_edit;
      r.person_edit = person_edit;
      r.instruction = ins;
      r.garment_score = score_from_json(st.outputs.at(Stage::stage4).at("garment_score"));
      r.person_score = score_from_json(st.outputs.at(Stage::stage4).at("person_score"));
      r.status = judged_status(r, cfg_.threshold);
      if (!store.contains(id)) store.append(r);
      log.record(id, Stage::done, {{"status", std::string(to_string(r.status))}});
      return true;
    } catch (const Error& err) {
      log.record(id, Stage::failed, {{"code", std::string(to_string(err.code()))}, {"message", err.what()}});
    } catch (const std::exception& err) {
      log.record(id, Stage::failed, {{"code", "IoError"}, {"message", err.what()}});
    }
    return true;
  }

  RunResult execute(const std::vector<CatalogEntry>& catalog, const StopPolicy& stop) {
    const auto dir = cfg_.run_dir();
    const auto jobs = plan_samples(catalog, cfg_.oversampling);
    CheckpointLog log(dir / "checkpoint.jsonl");
    RecordStore store(dir / "records.jsonl");
    StageCounters counts{};
    std::vector<char> finished(jobs.size(), 0);
    parallel_for(jobs.size(), cfg_.workers, [&](std::size_t i) { finished[i] = process(jobs[i], log, store, stop, counts); });

    RunResult res;
    res.run_dir = dir;
    for (int k = 0; k < 4; ++k) res.stage_runs[static_cast<Stage>(k)] = counts[k].load();
    res.interrupted = std::any_of(finished.begin(), finished.end(), [](char f) { return !f; });
    const auto states = log.all();
    for (const auto& job : jobs) {
      auto it = states.find(job.sample_id);
      if (it == states.end() || it->second.cursor != Stage::failed) continue;
      const auto& d = it->second.outputs.at(Stage::failed);
      res.failures.push_back({job.sample_id, d.value("code", ""), d.value("message", "")});
    }
    if (res.interrupted) return res;

    std::string errors;
    for (const auto& f : res.failures) {
      errors += nlohmann::json{{"sample_id", f.sample_id}, {"code", f.code}, {"message", f.message}}.dump() + "\n";
    }
    write_file_atomic(dir / "errors.jsonl", errors);
    Manifest m = store.snapshot(cfg_.seed, cfg_.threshold);
    if (!cfg_.split_table.empty()) m = assign_splits(m, parse_split_table(read_file(storage().resolve(cfg_.split_table))));
    write_manifest(dir / "manifest.jsonl", m);
    res.manifest = std::move(m);
    return res;
  }

  PipelineConfig cfg_;
  ModelBackends b_;
};

/// Loads the config snapshot of `<root>/runs/<run_id>`, rebased on `root`.
inline PipelineConfig load_run_config(const std::filesystem::path& root, const std::string& run_id) {
  const auto path = root / "runs" / run_id / "config.json";
  if (!std::filesystem::exists(path)) throw Error(Errc::checkpoint_corrupt, "no run " + run_id + " under " + root.string());
  auto j = nlohmann::json::parse(read_file(path), nullptr, false);
  if (j.is_discarded()) throw Error(Errc::checkpoint_corrupt, path.string() + " is not JSON");
  auto c = config_from_json(j);
  c.storage_root = root;
  c.run_id = run_id;
  return c;
}

}  // namespace vtedit

// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Benchmark evaluation: per-task metrics over a prediction directory
/// (`<dir>/<task_id>.ppm`), aggregated into overall and per-edit-type rows.

#include <algorithm>
#include <atomic>
#include <exception>
#include <filesystem>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/clients.hpp"
#include "vtedit/manifest.hpp"
#include "vtedit/metrics.hpp"

namespace vtedit {

struct EvalOptions {
  SsimOptions ssim;
  KidOptions kid;
  int workers = 4;
};

/// Pixel-aligned metrics are only defined when the ground truth is the
/// target of the prediction (paired VTON and VTOFF).
inline bool has_aligned_ground_truth(TaskKind k) { return k != TaskKind::vton_unpaired; }

inline std::string_view setting_of(TaskKind k) { return k == TaskKind::vton_unpaired ? "unpaired" : "paired"; }

struct EditTypeRow {
  std::size_t count = 0;
  std::optional<double> dists;
  std::optional<double> dino_i;
};

struct MetricReport {
  TaskKind task = TaskKind::vton_paired;
  std::string setting;
  std::string extractor_id;
  std::size_t tasks = 0;
  std::optional<double> ssim, lpips, dists, fid, kid, dino_i;
  std::array<EditTypeRow, kEditTypeCount> per_edit_type{};
};

/// Metrics for one task, before aggregation.
struct TaskScores {
  std::string task_id;
  EditType edit_type = EditType::change_color;
  std::optional<double> ssim, lpips, dists;
  double dino_i = 0;
  std::vector<double> pred_features, gt_features;
};

inline std::filesystem::path prediction_path(const std::filesystem::path& dir, const std::string& task_id) {
  return dir / (task_id + ".ppm");
}

inline TaskScores score_task(const BenchmarkTask& t, const std::filesystem::path& predictions, const StorageRoot& storage,
                             const EvalBackends& backends, const EvalOptions& opt) {
  const auto pred_path = prediction_path(predictions, t.task_id);
  if (!std::filesystem::exists(pred_path)) throw Error(Errc::missing_prediction, t.task_id);
  const Image pred = read_ppm(pred_path);
  const Image gt = read_ppm(storage.resolve(t.ground_truth));
  if (!pred.same_size(gt)) {
    throw Error(Errc::resolution_mismatch, t.task_id + ": prediction " + std::to_string(pred.width) + "x" +
                                               std::to_string(pred.height) + " vs ground truth " +
                                               std::to_string(gt.width) + "x" + std::to_string(gt.height));
  }
  ImageRef pred_ref{t.task_id + "-prediction", pred_path.string(), pred.width, pred.height, t.ground_truth.role};
  TaskScores s;
  s.task_id = t.task_id;
  s.edit_type = t.edit_type;
  if (!backends.features) throw Error(Errc::service_unavailable, "no feature extractor configured");
  s.pred_features = backends.features->embed(pred_ref, pred);
  s.gt_features = backends.features->embed(t.ground_truth, gt);
  s.dino_i = dino_i(s.pred_features, s.gt_features);
  if (has_aligned_ground_truth(t.kind)) {
    s.ssim = ssim(pred, gt, opt.ssim);
    s.lpips = perceptual(backends.perceptual.get(), pred_ref, pred, t.ground_truth, gt, PerceptualKind::lpips);
    s.dists = perceptual(backends.perceptual.get(), pred_ref, pred, t.ground_truth, gt, PerceptualKind::dists);
  }
  return s;
}

/// Runs `fn(i)` for i in [0, n) on up to `workers` threads; rethrows the
/// failure with the lowest index.
template <class F>
void parallel_for(std::size_t n, int workers, F fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const auto k = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1, std::max<std::size_t>(n, 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < k; ++w) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

namespace detail {

inline std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Aggregates per-task scores (any order) into a report; sums run in task-id order.
inline MetricReport aggregate(TaskKind kind, std::vector<TaskScores> scores, const std::string& extractor_id,
                              const EvalOptions& opt = {}) {
  std::sort(scores.begin(), scores.end(), [](const auto& a, const auto& b) { return a.task_id < b.task_id; });
  MetricReport r;
  r.task = kind;
  r.setting = std::string(setting_of(kind));
  r.extractor_id = extractor_id;
  r.tasks = scores.size();
  std::vector<double> ss, lp, di, dn;
  std::array<std::vector<double>, kEditTypeCount> type_dists, type_dino;
  std::vector<std::vector<double>> pf, gf;
  for (const auto& s : scores) {
    if (s.ssim) ss.push_back(*s.ssim);
    if (s.lpips) lp.push_back(*s.lpips);
    if (s.dists) {
      di.push_back(*s.dists);
      type_dists[index_of(s.edit_type)].push_back(*s.dists);
    }
    dn.push_back(s.dino_i);
    type_dino[index_of(s.edit_type)].push_back(s.dino_i);
    ++r.per_edit_type[index_of(s.edit_type)].count;
    pf.push_back(s.pred_features);
    gf.push_back(s.gt_features);
  }
  if (has_aligned_ground_truth(kind)) {
    r.ssim = detail::mean_of(ss);
    r.lpips = detail::mean_of(lp);
    r.dists = detail::mean_of(di);
  }
  r.dino_i = detail::mean_of(dn);
  if (scores.size() >= 2) {
    const auto p = FeatureSet::from_rows(pf, extractor_id), q = FeatureSet::from_rows(gf, extractor_id);
    r.fid = fid(p, q);
    r.kid = kid(p, q, opt.kid);
  }
  for (std::size_t i = 0; i < kEditTypeCount; ++i) {
    r.per_edit_type[i].dists = detail::mean_of(type_dists[i]);
    r.per_edit_type[i].dino_i = detail::mean_of(type_dino[i]);
  }
  return r;
}

/// All tasks must share one kind.
inline MetricReport evaluate(const std::vector<BenchmarkTask>& tasks, const std::filesystem::path& predictions,
                             const StorageRoot& storage, const EvalBackends& backends, const EvalOptions& opt = {}) {
  if (tasks.empty()) throw Error(Errc::invalid_argument, "no tasks to evaluate");
  const auto kind = tasks.front().kind;
  for (const auto& t : tasks) {
    if (t.kind != kind) throw Error(Errc::invalid_argument, "tasks of different kinds in one evaluation");
  }
  std::vector<TaskScores> scores(tasks.size());
  parallel_for(tasks.size(), opt.workers,
               [&](std::size_t i) { scores[i] = score_task(tasks[i], predictions, storage, backends, opt); });
  return aggregate(kind, std::move(scores), backends.features->extractor_id(), opt);
}

inline nlohmann::json to_json(const MetricReport& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(); };
  nlohmann::json j{{"task", std::string(to_string(r.task))},
                   {"setting", r.setting},
                   {"extractor_id", r.extractor_id},
                   {"tasks", r.tasks},
                   {"overall",
                    {{"ssim", opt(r.ssim)},
                     {"lpips", opt(r.lpips)},
                     {"dists", opt(r.dists)},
                     {"fid", opt(r.fid)},
                     {"kid", opt(r.kid)},
                     {"dino_i", opt(r.dino_i)}}}};
  for (auto t : kAllEditTypes) {
    const auto& row = r.per_edit_type[index_of(t)];
    j["per_edit_type"][std::string(to_string(t))] = {{"count", row.count}, {"dists", opt(row.dists)}, {"dino_i", opt(row.dino_i)}};
  }
  return j;
}

inline std::string render_table(const MetricReport& r) {
  auto cell = [](const std::optional<double>& v, int precision) {
    if (!v) return std::string("-");
    std::ostringstream o;
    o.setf(std::ios::fixed);
    o.precision(precision);
    o << *v;
    return o.str();
  };
  auto pad = [](std::string s, std::size_t w) {
    if (s.size() < w) s.insert(0, w - s.size(), ' ');
    return s;
  };
  std::ostringstream o;
  o << to_string(r.task) << " (" << r.setting << ", " << r.tasks << " tasks, features " << r.extractor_id << ")\n";
  o << pad("SSIM", 8) << pad("LPIPS", 8) << pad("DISTS", 8) << pad("FID", 10) << pad("KID", 10) << pad("DINO-I", 8) << "\n";
  o << pad(cell(r.ssim, 3), 8) << pad(cell(r.lpips, 3), 8) << pad(cell(r.dists, 3), 8) << pad(cell(r.fid, 2), 10)
    << pad(cell(r.kid, 2), 10) << pad(cell(r.dino_i, 3), 8) << "\n\n";
  o << "Edit type           n   DISTS  DINO-I\n";
  for (auto t : kAllEditTypes) {
    const auto& row = r.per_edit_type[index_of(t)];
    std::string name(display_name(t));
    name.resize(16, ' ');
    o << name << pad(std::to_string(row.count), 5) << pad(cell(row.dists, 3), 8) << pad(cell(row.dino_i, 3), 8) << "\n";
  }
  return o.str();
}

}  // namespace vtedit

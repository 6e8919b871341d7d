// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Judge-score threshold filtering and judge-vs-human calibration.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/error.hpp"
#include "vtedit/jsonl.hpp"

namespace vtedit {

inline constexpr double kDefaultThreshold = 80.0;

struct JudgeScore {
  double score = 0.0;
  std::string rationale;
  std::string judge_id;

  bool operator==(const JudgeScore&) const = default;
};

inline JudgeScore make_score(double s, std::string rationale = {}, std::string judge_id = {}) {
  if (!(s >= 0.0 && s <= 100.0)) throw Error(Errc::invalid_argument, "judge score outside [0,100]");
  return JudgeScore{s, std::move(rationale), std::move(judge_id)};
}

inline nlohmann::json to_json(const JudgeScore& s) {
  return {{"score", s.score}, {"rationale", s.rationale}, {"judge_id", s.judge_id}};
}

inline JudgeScore score_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("score") || !j.at("score").is_number()) {
    throw Error(Errc::unparseable_score, "missing numeric score");
  }
  const double s = j.at("score").get<double>();
  if (!(s >= 0.0 && s <= 100.0)) throw Error(Errc::unparseable_score, "score outside [0,100]");
  JudgeScore out{s, {}, {}};
  if (auto it = j.find("rationale"); it != j.end() && it->is_string()) out.rationale = it->get<std::string>();
  if (auto it = j.find("judge_id"); it != j.end() && it->is_string()) out.judge_id = it->get<std::string>();
  return out;
}

/// Both edited images must score strictly above t.
inline bool passes_filter(const JudgeScore& garment, const JudgeScore& person, double t) {
  return garment.score > t && person.score > t;
}

// ---------------------------------------------------------------------------
// Human labels
// ---------------------------------------------------------------------------

enum class Verdict { keep, discard };

inline constexpr std::string_view to_string(Verdict v) { return v == Verdict::keep ? "keep" : "discard"; }

inline std::optional<Verdict> verdict_from_string(std::string_view s) {
  if (s == "keep") return Verdict::keep;
  if (s == "discard") return Verdict::discard;
  return std::nullopt;
}

struct HumanLabel {
  std::string sample_id;
  Verdict verdict = Verdict::keep;
  std::string annotator_id;
  std::int64_t timestamp_ms = 0;

  bool operator==(const HumanLabel&) const = default;
};

inline nlohmann::json to_json(const HumanLabel& l) {
  return {{"sample_id", l.sample_id},
          {"verdict", std::string(to_string(l.verdict))},
          {"annotator_id", l.annotator_id},
          {"timestamp_ms", l.timestamp_ms}};
}

inline HumanLabel label_from_json(const nlohmann::json& j) {
  try {
    HumanLabel l;
    l.sample_id = j.at("sample_id").get<std::string>();
    auto v = verdict_from_string(j.at("verdict").get<std::string>());
    if (!v) throw Error(Errc::malformed_document, "verdict must be keep or discard");
    l.verdict = *v;
    l.annotator_id = j.value("annotator_id", std::string{});
    l.timestamp_ms = j.value("timestamp_ms", std::int64_t{0});
    return l;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_document, std::string("label: ") + e.what());
  }
}

/// One verdict per sample: last write wins per annotator (in log order), then
/// majority across annotators; ties resolve to discard.
inline std::map<std::string, Verdict> resolve_labels(const std::vector<HumanLabel>& labels) {
  std::map<std::string, std::map<std::string, Verdict>> per_sample;
  for (const auto& l : labels) per_sample[l.sample_id][l.annotator_id] = l.verdict;
  std::map<std::string, Verdict> out;
  for (const auto& [sample, votes] : per_sample) {
    int keep = 0, discard = 0;
    for (const auto& [annotator, v] : votes) (v == Verdict::keep ? keep : discard)++;
    out[sample] = keep > discard ? Verdict::keep : Verdict::discard;
  }
  return out;
}

/// Append-only label log, one JSON record per line.
class LabelLog {
 public:
  explicit LabelLog(std::filesystem::path path) : path_(std::move(path)) {
    auto contents = read_log(path_);
    truncate_torn_tail(path_, contents);
    for (const auto& line : contents.lines) {
      try {
        labels_.push_back(label_from_json(nlohmann::json::parse(line)));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::storage_failure, path_.string() + ": " + e.what());
      }
    }
    sink_ = std::make_unique<FileAppendSink>(path_);
  }

  void append(const HumanLabel& label) {
    std::lock_guard lock(mu_);
    sink_->append(to_json(label).dump() + "\n");
    labels_.push_back(label);
  }

  std::vector<HumanLabel> labels() const {
    std::lock_guard lock(mu_);
    return labels_;
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::unique_ptr<FileAppendSink> sink_;
  mutable std::mutex mu_;
  std::vector<HumanLabel> labels_;
};

// ---------------------------------------------------------------------------
// Calibration
// ---------------------------------------------------------------------------

struct CalibrationReport {
  double threshold = kDefaultThreshold;
  std::size_t good_keep = 0;
  std::size_t good_discard = 0;
  std::size_t bad_keep = 0;
  std::size_t bad_discard = 0;
  std::size_t total = 0;
  double p_good_keep = 0, p_good_discard = 0, p_bad_keep = 0, p_bad_discard = 0;
  /// p_good_keep + p_bad_discard.
  double accuracy = 0;

  bool operator==(const CalibrationReport&) const = default;
};

/// Percentage rounded to one decimal.
inline double percent_1dp(double proportion) { return std::round(proportion * 1000.0) / 10.0; }

inline CalibrationReport calibrate(const std::vector<HumanLabel>& labels,
                                   const std::map<std::string, JudgeScore>& scores, double t) {
  CalibrationReport r;
  r.threshold = t;
  for (const auto& [sample, verdict] : resolve_labels(labels)) {
    auto it = scores.find(sample);
    if (it == scores.end()) throw Error(Errc::missing_score, sample);
    const bool good = it->second.score > t;
    const bool keep = verdict == Verdict::keep;
    if (good && keep) ++r.good_keep;
    else if (good) ++r.good_discard;
    else if (keep) ++r.bad_keep;
    else ++r.bad_discard;
  }
  r.total = r.good_keep + r.good_discard + r.bad_keep + r.bad_discard;
  if (r.total > 0) {
    const double n = static_cast<double>(r.total);
    r.p_good_keep = static_cast<double>(r.good_keep) / n;
    r.p_good_discard = static_cast<double>(r.good_discard) / n;
    r.p_bad_keep = static_cast<double>(r.bad_keep) / n;
    r.p_bad_discard = static_cast<double>(r.bad_discard) / n;
    r.accuracy = r.p_good_keep + r.p_bad_discard;
  }
  return r;
}

inline std::vector<CalibrationReport> sweep_threshold(const std::vector<HumanLabel>& labels,
                                                      const std::map<std::string, JudgeScore>& scores,
                                                      const std::vector<double>& grid) {
  if (grid.empty()) throw Error(Errc::invalid_argument, "empty threshold grid");
  std::vector<CalibrationReport> out;
  out.reserve(grid.size());
  for (double t : grid) out.push_back(calibrate(labels, scores, t));
  return out;
}

inline nlohmann::json to_json(const CalibrationReport& r) {
  return {{"threshold", r.threshold},
          {"total", r.total},
          {"counts",
           {{"good_keep", r.good_keep},
            {"good_discard", r.good_discard},
            {"bad_keep", r.bad_keep},
            {"bad_discard", r.bad_discard}}},
          {"percent",
           {{"good_keep", percent_1dp(r.p_good_keep)},
            {"good_discard", percent_1dp(r.p_good_discard)},
            {"bad_keep", percent_1dp(r.p_bad_keep)},
            {"bad_discard", percent_1dp(r.p_bad_discard)}}},
          {"accuracy_percent", percent_1dp(r.accuracy)}};
}

inline std::string render_table(const CalibrationReport& r) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(1);
  os << "threshold t = " << r.threshold << "  (good: score > t)   n = " << r.total << "\n";
  os << "                 human keep    human discard\n";
  os << "  judge good   " << std::setw(6) << r.good_keep << " (" << std::setw(5) << percent_1dp(r.p_good_keep)
     << "%)  " << std::setw(6) << r.good_discard << " (" << std::setw(5) << percent_1dp(r.p_good_discard) << "%)\n";
  os << "  judge bad    " << std::setw(6) << r.bad_keep << " (" << std::setw(5) << percent_1dp(r.p_bad_keep)
     << "%)  " << std::setw(6) << r.bad_discard << " (" << std::setw(5) << percent_1dp(r.p_bad_discard) << "%)\n";
  os << "  accuracy " << percent_1dp(r.accuracy) << "%\n";
  return os.str();
}

}  // namespace vtedit

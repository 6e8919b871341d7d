// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Human review of judged samples: pending queue, verdict ingestion into the
/// label log, live calibration.
///
/// HTTP API (JSON bodies):
///   GET  /v1/health
///   GET  /v1/pending                 {"count", "items": [ReviewItem]}
///   GET  /v1/items                   every judged sample with its current verdict
///   POST /v1/labels                  {"sample_id", "verdict", "annotator_id"[, "timestamp_ms"]}
///   GET  /v1/calibration?t=80        CalibrationReport (t defaults to the manifest threshold)
///   GET  /v1/images/<sample>/<role>  image bytes; role in garment|person|garment_edit|person_edit

#include <atomic>
#include <chrono>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vtedit/manifest.hpp"
#include "vtedit/verification.hpp"

namespace vtedit {

/// Score the human verdict is compared against: the lower of the two judge
/// scores, so "good at t" coincides with passing the filter at t.
inline JudgeScore verifier_score(const QuadrupletRecord& r) {
  if (!r.garment_score || !r.person_score) throw Error(Errc::missing_score, r.sample_id);
  return r.garment_score->score <= r.person_score->score ? *r.garment_score : *r.person_score;
}

/// Verifier scores of all judged (non-candidate) records.
inline std::map<std::string, JudgeScore> verifier_scores(const Manifest& m) {
  std::map<std::string, JudgeScore> out;
  for (const auto& r : m.records) {
    if (r.status != RecordStatus::candidate) out.emplace(r.sample_id, verifier_score(r));
  }
  return out;
}

struct ReviewItem {
  std::string sample_id;
  EditType edit_type = EditType::change_color;
  std::string instruction;
  std::string original_uri;
  std::string edited_uri;
  std::string garment_uri;
  std::string garment_edit_uri;
  double score = 0;
  std::optional<Verdict> verdict;
};

inline std::string image_uri(const std::string& sample_id, ImageRole role) {
  return "/v1/images/" + sample_id + "/" + std::string(to_string(role));
}

inline nlohmann::json to_json(const ReviewItem& i) {
  return {{"sample_id", i.sample_id},
          {"edit_type", std::string(to_string(i.edit_type))},
          {"instruction", i.instruction},
          {"original", i.original_uri},
          {"edited", i.edited_uri},
          {"garment", i.garment_uri},
          {"garment_edit", i.garment_edit_uri},
          {"score", i.score},
          {"verdict", i.verdict ? nlohmann::json(std::string(to_string(*i.verdict))) : nlohmann::json("pending")}};
}

class ReviewService {
 public:
  ReviewService(Manifest manifest, const std::filesystem::path& labels_log, StorageRoot storage)
      : m_(std::move(manifest)), log_(labels_log), storage_(std::move(storage)), scores_(verifier_scores(m_)) {
    m_.sort();
  }

  /// Judged samples with their resolved verdict, in sample-id order.
  std::vector<ReviewItem> items() const {
    const auto verdicts = resolve_labels(log_.labels());
    std::vector<ReviewItem> out;
    for (const auto& r : m_.records) {
      if (r.status == RecordStatus::candidate) continue;
      ReviewItem i{r.sample_id,
                   r.instruction.edit_type,
                   r.instruction.forward_text,
                   image_uri(r.sample_id, ImageRole::person),
                   image_uri(r.sample_id, ImageRole::person_edit),
                   image_uri(r.sample_id, ImageRole::garment),
                   image_uri(r.sample_id, ImageRole::garment_edit),
                   scores_.at(r.sample_id).score,
                   std::nullopt};
      if (auto it = verdicts.find(r.sample_id); it != verdicts.end()) i.verdict = it->second;
      out.push_back(std::move(i));
    }
    return out;
  }

  std::vector<ReviewItem> pending() const {
    auto all = items();
    std::erase_if(all, [](const ReviewItem& i) { return i.verdict.has_value(); });
    return all;
  }

  bool knows(const std::string& sample_id) const { return scores_.contains(sample_id); }

  /// Appends a verdict; unknown ids raise InvalidArgument.
  HumanLabel submit(HumanLabel label) {
    if (!knows(label.sample_id)) throw Error(Errc::invalid_argument, "unknown sample " + label.sample_id);
    if (label.timestamp_ms == 0) {
      label.timestamp_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                               std::chrono::system_clock::now().time_since_epoch())
                               .count();
    }
    log_.append(label);
    return label;
  }

  CalibrationReport calibration(double t) const { return calibrate(log_.labels(), scores_, t); }
  CalibrationReport calibration() const { return calibration(m_.threshold); }

  std::optional<std::filesystem::path> image_path(const std::string& sample_id, ImageRole role) const {
    const auto* r = m_.find(sample_id);
    if (!r) return std::nullopt;
    switch (role) {
      case ImageRole::garment: return storage_.resolve(r->garment);
      case ImageRole::person: return storage_.resolve(r->person);
      case ImageRole::garment_edit: return storage_.resolve(r->garment_edit);
      case ImageRole::person_edit: return storage_.resolve(r->person_edit);
      default: return std::nullopt;
    }
  }

  const Manifest& manifest() const { return m_; }
  std::vector<HumanLabel> labels() const { return log_.labels(); }

 private:
  Manifest m_;
  LabelLog log_;
  StorageRoot storage_;
  std::map<std::string, JudgeScore> scores_;
};

class ReviewServer {
 public:
  explicit ReviewServer(ReviewService& service) : svc_(service) {
    // No SO_REUSEPORT: a second server on an occupied port must fail to bind.
    srv_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }
  ~ReviewServer() { stop(); }

  ReviewServer(const ReviewServer&) = delete;
  ReviewServer& operator=(const ReviewServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    host_ = host;
    if (port == 0) {
      port_ = srv_.bind_to_any_port(host);
      if (port_ < 0) throw Error(Errc::bind_failure, "cannot bind " + host);
    } else {
      if (!srv_.bind_to_port(host, port)) throw Error(Errc::bind_failure, host + ":" + std::to_string(port));
      port_ = port;
    }
    thread_ = std::thread([this] { srv_.listen_after_bind(); });
    srv_.wait_until_ready();
    return port_;
  }

  /// Blocks serving on the calling thread.
  void serve(const std::string& host, int port) {
    host_ = host;
    if (!srv_.bind_to_port(host, port)) throw Error(Errc::bind_failure, host + ":" + std::to_string(port));
    port_ = port;
    srv_.listen_after_bind();
  }

  void stop() {
    srv_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string base_uri() const { return "http://" + host_ + ":" + std::to_string(port_); }

 private:
  static void reply(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void fail(httplib::Response& res, int status, std::string_view code, const std::string& message) {
    reply(res, status, {{"error", {{"code", std::string(code)}, {"message", message}}}});
  }

  void routes() {
    srv_.Get("/v1/health", [](const httplib::Request&, httplib::Response& res) { reply(res, 200, {{"ok", true}}); });

    srv_.Get("/v1/pending", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json items = nlohmann::json::array();
      for (const auto& i : svc_.pending()) items.push_back(to_json(i));
      reply(res, 200, {{"count", items.size()}, {"items", items}});
    });

    srv_.Get("/v1/items", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json items = nlohmann::json::array();
      for (const auto& i : svc_.items()) items.push_back(to_json(i));
      reply(res, 200, {{"count", items.size()}, {"items", items}});
    });

    srv_.Post("/v1/labels", [this](const httplib::Request& req, httplib::Response& res) {
      auto j = nlohmann::json::parse(req.body, nullptr, false);
      if (j.is_discarded()) return fail(res, 400, to_string(Errc::malformed_document), "body is not JSON");
      HumanLabel label;
      try {
        label = label_from_json(j);
      } catch (const Error& e) {
        return fail(res, 400, to_string(e.code()), e.what());
      }
      if (!svc_.knows(label.sample_id)) {
        return fail(res, 404, to_string(Errc::invalid_argument), "unknown sample " + label.sample_id);
      }
      try {
        const auto stored = svc_.submit(label);
        reply(res, 200, {{"label", to_json(stored)}, {"pending", svc_.pending().size()}});
      } catch (const Error& e) {
        fail(res, 500, to_string(e.code()), e.what());
      }
    });

    srv_.Get("/v1/calibration", [this](const httplib::Request& req, httplib::Response& res) {
      double t = svc_.manifest().threshold;
      if (req.has_param("t")) {
        const auto s = req.get_param_value("t");
        try {
          std::size_t used = 0;
          t = std::stod(s, &used);
          if (used != s.size() || !(t >= 0 && t <= 100)) throw std::invalid_argument(s);
        } catch (const std::exception&) {
          return fail(res, 400, to_string(Errc::invalid_argument), "t must be a number in [0,100]");
        }
      }
      try {
        reply(res, 200, to_json(svc_.calibration(t)));
      } catch (const Error& e) {
        fail(res, 500, to_string(e.code()), e.what());
      }
    });

    srv_.Get(R"(/v1/images/([^/]+)/([a-z_]+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto role = image_role_from_string(req.matches[2].str());
      const auto path = role ? svc_.image_path(req.matches[1].str(), *role) : std::nullopt;
      if (!path || !std::filesystem::exists(*path)) {
        return fail(res, 404, to_string(Errc::invalid_argument), "no such image");
      }
      const auto ext = path->extension().string();
      const char* type = ext == ".pbm"   ? "image/x-portable-bitmap"
                         : ext == ".pgm" ? "image/x-portable-graymap"
                         : ext == ".ppm" ? "image/x-portable-pixmap"
                                         : "application/octet-stream";
      res.status = 200;
      res.set_content(read_file(*path), type);
    });
  }

  ReviewService& svc_;
  httplib::Server srv_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = -1;
};

}  // namespace vtedit

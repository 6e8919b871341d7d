// SPDX-License-Identifier: Apache-2.0
#pragma once

/// HTTP/JSON clients for the model roles, plus a server that exposes the mock
/// roles over the same wire contract.
///
///   POST /v1/extract     {request_id, garment, person}                -> attribute document
///   POST /v1/edit        {request_id, garment, instruction, output}   -> {image}
///   POST /v1/tryon       {request_id, person, garment, mask, output}  -> {image}
///   POST /v1/judge       {request_id, sample_id, target, original, edited,
///                         instruction_text, instruction?, conditioning} -> {score, rationale}
///   POST /v1/features    {request_id, image}                          -> {extractor_id, vector}
///   POST /v1/perceptual  {request_id, a, b, kind}                     -> {distance}
///
/// Failures carry {"error": {"code": "<ErrorName>", "message": ...}}.
/// Connection failures, 5xx and 429 are retried; other statuses are final.

#include <atomic>
#include <chrono>
#include <memory>
#include <semaphore>
#include <string>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "vtedit/clients.hpp"
#include "vtedit/mock_backends.hpp"

namespace vtedit {

class HttpTransport {
 public:
  struct Response {
    int status = 0;
    std::string body;
  };

  HttpTransport(std::string name, ServiceEndpoint endpoint)
      : name_(std::move(name)), ep_(std::move(endpoint)), slots_(ep_.max_concurrency) {
    ep_.validate(name_);
    if (ep_.base_uri.empty()) throw Error(Errc::config_invalid, name_ + ": base_uri is empty");
  }

  const ServiceEndpoint& endpoint() const { return ep_; }

  Response post(const std::string& path, const nlohmann::json& body, const std::string& request_id) {
    std::string last = "no attempt made";
    for (int attempt = 1; attempt <= ep_.max_attempts; ++attempt) {
      if (const int wait = ep_.backoff_before_attempt(attempt); wait > 0) {
        std::this_thread::sleep_for(std::chrono::milliseconds(wait));
      }
      slots_.acquire();
      httplib::Result res = [&] {
        httplib::Client cli(ep_.base_uri);
        const auto t = std::chrono::milliseconds(ep_.timeout_ms);
        cli.set_connection_timeout(t);
        cli.set_read_timeout(t);
        cli.set_write_timeout(t);
        httplib::Headers headers{{"Idempotency-Key", request_id}};
        if (auto token = ep_.auth_token()) headers.emplace("Authorization", "Bearer " + *token);
        return cli.Post(path, headers, body.dump(), "application/json");
      }();
      slots_.release();
      if (!res) {
        last = "connection error: " + httplib::to_string(res.error());
        continue;
      }
      if (res->status >= 500 || res->status == 429) {
        last = "HTTP " + std::to_string(res->status);
        continue;
      }
      return {res->status, res->body};
    }
    throw Error(Errc::service_unavailable,
                name_ + " " + path + " after " + std::to_string(ep_.max_attempts) + " attempt(s): " + last);
  }

  /// Throws the error named in a non-200 response body.
  [[noreturn]] void raise(const Response& r, Errc fallback) const {
    Errc code = fallback;
    std::string message = "HTTP " + std::to_string(r.status);
    auto j = nlohmann::json::parse(r.body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_object()) {
      code = errc_from_string(j["error"].value("code", ""), fallback);
      message += ": " + j["error"].value("message", "");
    }
    throw Error(code, name_ + ": " + message);
  }

 private:
  std::string name_;
  ServiceEndpoint ep_;
  std::counting_semaphore<4096> slots_;
};

namespace detail {

inline nlohmann::json parse_body(const std::string& body, Errc code, const std::string& what) {
  auto j = nlohmann::json::parse(body, nullptr, false);
  if (j.is_discarded()) throw Error(code, what + ": response is not JSON");
  return j;
}

inline ImageRef image_from_response(const std::string& body, const ImageRef& requested, const std::string& what) {
  const auto j = parse_body(body, Errc::malformed_response, what);
  try {
    ImageRef got = image_ref_from_json(j.at("image"));
    ImageRef out = requested;
    out.width = got.width;
    out.height = got.height;
    return out;
  } catch (const std::exception& e) {
    throw Error(Errc::malformed_response, what + ": " + e.what());
  }
}

}  // namespace detail

class HttpAttributeExtractor final : public AttributeExtractor {
 public:
  explicit HttpAttributeExtractor(ServiceEndpoint ep) : t_("extractor", std::move(ep)) {}

  GarmentAttributes extract_attributes(const ExtractRequest& req) override {
    nlohmann::json body{{"request_id", req.request_id}, {"garment", to_json(req.garment)}, {"person", to_json(req.person)}};
    auto r = t_.post("/v1/extract", body, req.request_id);
    if (r.status != 200) t_.raise(r, Errc::malformed_response);
    try {
      return parse_attributes(r.body);
    } catch (const Error& e) {
      throw Error(Errc::malformed_response, std::string("extractor: ") + e.what());
    }
  }

 private:
  HttpTransport t_;
};

class HttpGarmentEditor final : public GarmentEditor {
 public:
  explicit HttpGarmentEditor(ServiceEndpoint ep) : t_("editor", std::move(ep)) {}

  ImageRef edit_garment(const EditRequest& req) override {
    nlohmann::json body{{"request_id", req.request_id},
                        {"garment", to_json(req.garment)},
                        {"instruction", to_json(req.instruction)},
                        {"output", to_json(req.output)}};
    auto r = t_.post("/v1/edit", body, req.request_id);
    if (r.status == 422) t_.raise(r, Errc::edit_rejected);
    if (r.status != 200) t_.raise(r, Errc::malformed_response);
    return detail::image_from_response(r.body, req.output, "editor");
  }

 private:
  HttpTransport t_;
};

class HttpTryOn final : public TryOnModel {
 public:
  explicit HttpTryOn(ServiceEndpoint ep) : t_("tryon", std::move(ep)) {}

  ImageRef try_on(const TryOnRequest& req) override {
    nlohmann::json body{{"request_id", req.request_id}, {"person", to_json(req.person)},
                        {"garment", to_json(req.garment)}, {"mask", to_json(req.mask)},
                        {"output", to_json(req.output)}};
    auto r = t_.post("/v1/tryon", body, req.request_id);
    if (r.status != 200) t_.raise(r, Errc::malformed_response);
    return detail::image_from_response(r.body, req.output, "tryon");
  }

 private:
  HttpTransport t_;
};

inline nlohmann::json to_json(const JudgeRequest& req) {
  nlohmann::json j{{"request_id", req.request_id},
                   {"sample_id", req.sample_id},
                   {"target", std::string(to_string(req.target))},
                   {"original", to_json(req.original)},
                   {"edited", to_json(req.edited)},
                   {"instruction_text", req.instruction_text},
                   {"conditioning", nlohmann::json::array()}};
  if (req.instruction) j["instruction"] = to_json(*req.instruction);
  for (const auto& c : req.conditioning) j["conditioning"].push_back(to_json(c));
  return j;
}

inline JudgeRequest judge_request_from_json(const nlohmann::json& j) {
  try {
    JudgeRequest req;
    req.request_id = j.at("request_id").get<std::string>();
    req.sample_id = j.at("sample_id").get<std::string>();
    const auto target = j.at("target").get<std::string>();
    if (target != "garment" && target != "person") throw Error(Errc::malformed_document, "judge target");
    req.target = target == "garment" ? JudgeTarget::garment : JudgeTarget::person;
    req.original = image_ref_from_json(j.at("original"));
    req.edited = image_ref_from_json(j.at("edited"));
    req.instruction_text = j.at("instruction_text").get<std::string>();
    if (j.contains("instruction")) req.instruction = instruction_from_json(j["instruction"]);
    for (const auto& c : j.value("conditioning", nlohmann::json::array())) req.conditioning.push_back(image_ref_from_json(c));
    return req;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_document, std::string("judge request: ") + e.what());
  }
}

class HttpJudge final : public Judge {
 public:
  explicit HttpJudge(ServiceEndpoint ep) : t_("judge", std::move(ep)) {}

  JudgeScore judge(const JudgeRequest& req) override {
    auto r = t_.post("/v1/judge", to_json(req), req.request_id);
    if (r.status != 200) t_.raise(r, Errc::unparseable_score);
    auto j = detail::parse_body(r.body, Errc::unparseable_score, "judge");
    auto s = score_from_json(j);
    if (s.judge_id.empty()) s.judge_id = "http-judge";
    return s;
  }

 private:
  HttpTransport t_;
};

class HttpFeatureExtractor final : public FeatureExtractor {
 public:
  HttpFeatureExtractor(ServiceEndpoint ep, std::string extractor_id)
      : t_("features", std::move(ep)), id_(std::move(extractor_id)) {}

  std::string extractor_id() const override { return id_; }

  std::vector<double> embed(const ImageRef& ref, const Image&) override {
    const auto rid = ref.id + "/features";
    auto r = t_.post("/v1/features", {{"request_id", rid}, {"image", to_json(ref)}}, rid);
    if (r.status != 200) t_.raise(r, Errc::malformed_response);
    const auto j = detail::parse_body(r.body, Errc::malformed_response, "features");
    try {
      return j.at("vector").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::malformed_response, std::string("features: ") + e.what());
    }
  }

 private:
  HttpTransport t_;
  std::string id_;
};

class HttpPerceptual final : public PerceptualService {
 public:
  explicit HttpPerceptual(ServiceEndpoint ep) : t_("perceptual", std::move(ep)) {}

  double distance(const ImageRef& a, const Image&, const ImageRef& b, const Image&, PerceptualKind kind) override {
    const auto rid = a.id + "|" + b.id + "/" + std::string(to_string(kind));
    nlohmann::json body{{"request_id", rid}, {"a", to_json(a)}, {"b", to_json(b)}, {"kind", std::string(to_string(kind))}};
    auto r = t_.post("/v1/perceptual", body, rid);
    if (r.status != 200) t_.raise(r, Errc::malformed_response);
    const auto j = detail::parse_body(r.body, Errc::malformed_response, "perceptual");
    try {
      return j.at("distance").get<double>();
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::malformed_response, std::string("perceptual: ") + e.what());
    }
  }

 private:
  HttpTransport t_;
};

// ---------------------------------------------------------------------------
// Mock service server
// ---------------------------------------------------------------------------

/// Serves the mock roles over HTTP. Both sides must share the storage root.
class MockServiceServer {
 public:
  MockServiceServer(StorageRoot storage, ModelBackends backends, EvalBackends eval = make_mock_eval_backends())
      : storage_(std::move(storage)), b_(std::move(backends)), e_(std::move(eval)) {
    srv_.set_socket_options([](socket_t sock) {
      int yes = 1;
      ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
    });
    routes();
  }

  ~MockServiceServer() { stop(); }

  MockServiceServer(const MockServiceServer&) = delete;
  MockServiceServer& operator=(const MockServiceServer&) = delete;

  /// Binds (port 0 picks a free port) and serves on a background thread.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
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

  void stop() {
    if (thread_.joinable()) {
      srv_.stop();
      thread_.join();
    }
  }

  std::string base_uri(const std::string& host = "127.0.0.1") const { return "http://" + host + ":" + std::to_string(port_); }

  /// The next `n` requests answer `status` without reaching a backend.
  void fail_next(int n, int status = 503) {
    fail_status_ = status;
    fail_remaining_ = n;
  }
  /// Judge answers with a non-JSON body.
  void garbage_judge(bool on) { garbage_judge_ = on; }

  int requests_seen() const { return requests_; }

 private:
  static int status_for(Errc code) {
    switch (code) {
      case Errc::edit_rejected: return 422;
      case Errc::resolution_mismatch: return 409;
      case Errc::malformed_document:
      case Errc::malformed_response:
      case Errc::invalid_argument: return 400;
      case Errc::io_error: return 404;
      default: return 500;
    }
  }

  template <class F>
  void handle(const std::string& path, F fn) {
    srv_.Post(path, [this, path, fn](const httplib::Request& req, httplib::Response& res) {
      ++requests_;
      if (fail_remaining_.load() > 0) {
        --fail_remaining_;
        res.status = fail_status_;
        res.set_content(R"({"error":{"code":"ServiceUnavailable","message":"injected"}})", "application/json");
        return;
      }
      if (path == "/v1/judge" && garbage_judge_.load()) {
        res.set_content("the edit looks great", "text/plain");
        return;
      }
      try {
        auto body = nlohmann::json::parse(req.body);
        res.set_content(fn(body, res).dump(), "application/json");
        if (res.status == -1 || res.status == 0) res.status = 200;
      } catch (const Error& e) {
        res.status = status_for(e.code());
        nlohmann::json err{{"error", {{"code", std::string(to_string(e.code()))}, {"message", e.what()}}}};
        res.set_content(err.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        nlohmann::json err{{"error", {{"code", "MalformedDocument"}, {"message", e.what()}}}};
        res.set_content(err.dump(), "application/json");
      }
    });
  }

  void routes() {
    handle("/v1/extract", [this](const nlohmann::json& j, httplib::Response&) {
      ExtractRequest req{j.at("request_id"), image_ref_from_json(j.at("garment")), image_ref_from_json(j.at("person"))};
      return to_json(b_.extractor->extract_attributes(req));
    });
    handle("/v1/edit", [this](const nlohmann::json& j, httplib::Response&) {
      EditRequest req{j.at("request_id"), image_ref_from_json(j.at("garment")), instruction_from_json(j.at("instruction")),
                      image_ref_from_json(j.at("output"))};
      return nlohmann::json{{"image", to_json(b_.editor->edit_garment(req))}};
    });
    handle("/v1/tryon", [this](const nlohmann::json& j, httplib::Response&) {
      TryOnRequest req{j.at("request_id"), image_ref_from_json(j.at("person")), image_ref_from_json(j.at("garment")),
                       image_ref_from_json(j.at("mask")), image_ref_from_json(j.at("output"))};
      return nlohmann::json{{"image", to_json(b_.try_on->try_on(req))}};
    });
    handle("/v1/judge", [this](const nlohmann::json& j, httplib::Response&) {
      const auto sc = b_.judge->judge(judge_request_from_json(j));
      return nlohmann::json{{"score", sc.score}, {"rationale", sc.rationale}, {"judge_id", sc.judge_id}};
    });
    handle("/v1/features", [this](const nlohmann::json& j, httplib::Response&) {
      const auto ref = image_ref_from_json(j.at("image"));
      const Image img = read_ppm(storage_.resolve(ref));
      return nlohmann::json{{"extractor_id", e_.features->extractor_id()}, {"vector", e_.features->embed(ref, img)}};
    });
    handle("/v1/perceptual", [this](const nlohmann::json& j, httplib::Response&) {
      const auto a = image_ref_from_json(j.at("a"));
      const auto b = image_ref_from_json(j.at("b"));
      const auto kind = j.at("kind").get<std::string>() == "lpips" ? PerceptualKind::lpips : PerceptualKind::dists;
      const Image pa = read_ppm(storage_.resolve(a)), pb = read_ppm(storage_.resolve(b));
      return nlohmann::json{{"distance", e_.perceptual->distance(a, pa, b, pb, kind)}};
    });
  }

  StorageRoot storage_;
  ModelBackends b_;
  EvalBackends e_;
  httplib::Server srv_;
  std::thread thread_;
  int port_ = -1;
  std::atomic<int> fail_remaining_{0};
  std::atomic<int> fail_status_{503};
  std::atomic<bool> garbage_judge_{false};
  std::atomic<int> requests_{0};
};

inline ModelBackends make_http_backends(const ServiceEndpoint& extract, const ServiceEndpoint& edit,
                                        const ServiceEndpoint& tryon, const ServiceEndpoint& judge) {
  return {std::make_shared<HttpAttributeExtractor>(extract), std::make_shared<HttpGarmentEditor>(edit),
          std::make_shared<HttpTryOn>(tryon), std::make_shared<HttpJudge>(judge)};
}

}  // namespace vtedit

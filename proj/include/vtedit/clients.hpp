// SPDX-License-Identifier: Apache-2.0
#pragma once

/// Service contracts for the four external model roles of the generation
/// pipeline (attribute extraction, garment editing, try-on, judging) and the
/// two evaluation roles (feature embedding, perceptual distance).
///
/// Images are passed by reference: an ImageRef names a file under a shared
/// storage root, never inline bytes.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "vtedit/attributes.hpp"
#include "vtedit/error.hpp"
#include "vtedit/image.hpp"
#include "vtedit/instructions.hpp"
#include "vtedit/verification.hpp"

namespace vtedit {

inline constexpr int kStandardWidth = 768;
inline constexpr int kStandardHeight = 1024;

enum class ImageRole { garment, person, garment_edit, person_edit, label_map, mask };

inline constexpr std::string_view to_string(ImageRole r) {
  switch (r) {
    case ImageRole::garment: return "garment";
    case ImageRole::person: return "person";
    case ImageRole::garment_edit: return "garment_edit";
    case ImageRole::person_edit: return "person_edit";
    case ImageRole::label_map: return "label_map";
    case ImageRole::mask: return "mask";
  }
  return "";
}

inline std::optional<ImageRole> image_role_from_string(std::string_view s) {
  for (auto r : {ImageRole::garment, ImageRole::person, ImageRole::garment_edit, ImageRole::person_edit,
                 ImageRole::label_map, ImageRole::mask}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

struct ImageRef {
  std::string id;
  /// Relative paths resolve against the storage root.
  std::string path;
  int width = 0;
  int height = 0;
  ImageRole role = ImageRole::garment;

  bool operator==(const ImageRef&) const = default;
};

inline nlohmann::json to_json(const ImageRef& r) {
  return {{"id", r.id}, {"path", r.path}, {"width", r.width}, {"height", r.height},
          {"role", std::string(to_string(r.role))}};
}

inline ImageRef image_ref_from_json(const nlohmann::json& j) {
  try {
    ImageRef r;
    r.id = j.at("id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.width = j.value("width", 0);
    r.height = j.value("height", 0);
    auto role = image_role_from_string(j.at("role").get<std::string>());
    if (!role) throw Error(Errc::malformed_document, "unknown image role");
    r.role = *role;
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_document, std::string("image ref: ") + e.what());
  }
}

/// Shared storage that image references resolve against.
struct StorageRoot {
  std::filesystem::path root{"."};

  std::filesystem::path resolve(const std::string& path) const {
    std::filesystem::path p(path);
    return p.is_absolute() ? p : root / p;
  }
  std::filesystem::path resolve(const ImageRef& ref) const { return resolve(ref.path); }
};

// ---------------------------------------------------------------------------
// Endpoints
// ---------------------------------------------------------------------------

struct ServiceEndpoint {
  std::string base_uri;
  int timeout_ms = 30000;
  int max_attempts = 3;
  /// Delay before retry k (k = 1..); the last entry repeats.
  std::vector<int> backoff_ms{100, 200, 400};
  /// Name of the environment variable holding a bearer token, if any.
  std::string auth_token_env;
  int max_concurrency = 8;

  void validate(const std::string& name) const {
    if (max_attempts < 1) throw Error(Errc::config_invalid, name + ": max_attempts must be >= 1");
    if (max_concurrency < 1) throw Error(Errc::config_invalid, name + ": max_concurrency must be >= 1");
    for (std::size_t i = 1; i < backoff_ms.size(); ++i) {
      if (backoff_ms[i] < backoff_ms[i - 1]) throw Error(Errc::config_invalid, name + ": backoff must be non-decreasing");
    }
    for (int b : backoff_ms) {
      if (b < 0) throw Error(Errc::config_invalid, name + ": negative backoff");
    }
  }

  int backoff_before_attempt(int attempt) const {
    if (attempt <= 1 || backoff_ms.empty()) return 0;
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(attempt - 2), backoff_ms.size() - 1);
    return backoff_ms[i];
  }

  std::optional<std::string> auth_token() const {
    if (auth_token_env.empty()) return std::nullopt;
    const char* v = std::getenv(auth_token_env.c_str());
    if (!v) return std::nullopt;
    return std::string(v);
  }
};

inline nlohmann::json to_json(const ServiceEndpoint& e) {
  return {{"base_uri", e.base_uri},       {"timeout_ms", e.timeout_ms},
          {"max_attempts", e.max_attempts}, {"backoff_ms", e.backoff_ms},
          {"auth_token_env", e.auth_token_env}, {"max_concurrency", e.max_concurrency}};
}

inline ServiceEndpoint endpoint_from_json(const nlohmann::json& j) {
  ServiceEndpoint e;
  try {
    e.base_uri = j.value("base_uri", e.base_uri);
    e.timeout_ms = j.value("timeout_ms", e.timeout_ms);
    e.max_attempts = j.value("max_attempts", e.max_attempts);
    e.backoff_ms = j.value("backoff_ms", e.backoff_ms);
    e.auth_token_env = j.value("auth_token_env", e.auth_token_env);
    e.max_concurrency = j.value("max_concurrency", e.max_concurrency);
  } catch (const nlohmann::json::exception& ex) {
    throw Error(Errc::config_invalid, std::string("endpoint: ") + ex.what());
  }
  return e;
}

// ---------------------------------------------------------------------------
// Requests
// ---------------------------------------------------------------------------

/// Request ids are derived from (sample id, stage) so a retried or resumed
/// call is recognisably the same request.
inline std::string request_id(const std::string& sample_id, std::string_view stage) {
  return sample_id + "/" + std::string(stage);
}

struct ExtractRequest {
  std::string request_id;
  ImageRef garment;
  ImageRef person;
};

struct EditRequest {
  std::string request_id;
  ImageRef garment;
  EditInstruction instruction;
  /// Where the service must write its result (id/path/role; size is filled in).
  ImageRef output;
};

struct TryOnRequest {
  std::string request_id;
  ImageRef person;
  ImageRef garment;
  ImageRef mask;
  ImageRef output;
};

enum class JudgeTarget { garment, person };

inline constexpr std::string_view to_string(JudgeTarget t) { return t == JudgeTarget::garment ? "garment" : "person"; }

struct JudgeRequest {
  std::string request_id;
  std::string sample_id;
  JudgeTarget target = JudgeTarget::garment;
  ImageRef original;
  ImageRef edited;
  std::string instruction_text;
  /// Structured instruction record; judges may ignore it.
  std::optional<EditInstruction> instruction;
  /// For person judging: the edited garment and mask the try-on was given.
  std::vector<ImageRef> conditioning;
};

enum class PerceptualKind { lpips, dists };

inline constexpr std::string_view to_string(PerceptualKind k) { return k == PerceptualKind::lpips ? "lpips" : "dists"; }

// ---------------------------------------------------------------------------
// Roles
// ---------------------------------------------------------------------------

class AttributeExtractor {
 public:
  virtual ~AttributeExtractor() = default;
  virtual GarmentAttributes extract_attributes(const ExtractRequest& req) = 0;
};

class GarmentEditor {
 public:
  virtual ~GarmentEditor() = default;
  virtual ImageRef edit_garment(const EditRequest& req) = 0;
};

class TryOnModel {
 public:
  virtual ~TryOnModel() = default;
  virtual ImageRef try_on(const TryOnRequest& req) = 0;
};

class Judge {
 public:
  virtual ~Judge() = default;
  virtual JudgeScore judge(const JudgeRequest& req) = 0;
};

/// Image embeddings for FID/KID/DINO-I. `pixels` is the already-decoded image
/// behind `ref`; remote services use the reference, local ones the pixels.
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string extractor_id() const = 0;
  virtual std::vector<double> embed(const ImageRef& ref, const Image& pixels) = 0;
};

class PerceptualService {
 public:
  virtual ~PerceptualService() = default;
  virtual double distance(const ImageRef& a, const Image& pa, const ImageRef& b, const Image& pb,
                          PerceptualKind kind) = 0;
};

struct ModelBackends {
  std::shared_ptr<AttributeExtractor> extractor;
  std::shared_ptr<GarmentEditor> editor;
  std::shared_ptr<TryOnModel> try_on;
  std::shared_ptr<Judge> judge;
};

struct EvalBackends {
  std::shared_ptr<FeatureExtractor> features;
  std::shared_ptr<PerceptualService> perceptual;
};

}  // namespace vtedit

// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vtedit {

/// Failure kinds surfaced by the library. Every thrown vtedit::Error carries one.
enum class Errc {
  malformed_document,
  unknown_category,
  out_of_bank_value,
  inapplicable_delta,
  no_valid_target,
  invalid_edit_type,
  missing_slot,
  service_unavailable,
  malformed_response,
  edit_rejected,
  resolution_mismatch,
  unparseable_score,
  empty_region,
  unknown_class_id,
  missing_score,
  duplicate_id,
  storage_failure,
  unmapped_identity,
  split_not_assigned,
  dimension_mismatch,
  degenerate_covariance,
  zero_vector,
  missing_prediction,
  config_invalid,
  checkpoint_corrupt,
  bind_failure,
  io_error,
  invalid_argument,
};

inline constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::malformed_document: return "MalformedDocument";
    case Errc::unknown_category: return "UnknownCategory";
    case Errc::out_of_bank_value: return "OutOfBankValue";
    case Errc::inapplicable_delta: return "InapplicableDelta";
    case Errc::no_valid_target: return "NoValidTarget";
    case Errc::invalid_edit_type: return "InvalidEditType";
    case Errc::missing_slot: return "MissingSlot";
    case Errc::service_unavailable: return "ServiceUnavailable";
    case Errc::malformed_response: return "MalformedResponse";
    case Errc::edit_rejected: return "EditRejected";
    case Errc::resolution_mismatch: return "ResolutionMismatch";
    case Errc::unparseable_score: return "UnparseableScore";
    case Errc::empty_region: return "EmptyRegion";
    case Errc::unknown_class_id: return "UnknownClassId";
    case Errc::missing_score: return "MissingScore";
    case Errc::duplicate_id: return "DuplicateId";
    case Errc::storage_failure: return "StorageFailure";
    case Errc::unmapped_identity: return "UnmappedIdentity";
    case Errc::split_not_assigned: return "SplitNotAssigned";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::degenerate_covariance: return "DegenerateCovariance";
    case Errc::zero_vector: return "ZeroVector";
    case Errc::missing_prediction: return "MissingPrediction";
    case Errc::config_invalid: return "ConfigInvalid";
    case Errc::checkpoint_corrupt: return "CheckpointCorrupt";
    case Errc::bind_failure: return "BindFailure";
    case Errc::io_error: return "IoError";
    case Errc::invalid_argument: return "InvalidArgument";
  }
  return "Unknown";
}

inline Errc errc_from_string(std::string_view name, Errc fallback) {
  for (int i = 0; i <= static_cast<int>(Errc::invalid_argument); ++i) {
    auto code = static_cast<Errc>(i);
    if (to_string(code) == name) return code;
  }
  return fallback;
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace vtedit

#pragma once

#include <stdexcept>
#include <string>

namespace vlct {

// Every failure the library can signal. Validation-family conditions map to
// VLCT_ERROR_VALIDATION at the C boundary; the infrastructure conditions keep
// their own status codes.
enum class errc {
  // input validation
  empty_volume,
  invalid_rescale,
  invalid_spacing,
  no_eligible_series,
  index_out_of_range,
  volume_too_small,
  missing_embedding,
  empty_input,
  too_many_slices,
  shape_mismatch,
  zero_vector,
  invalid_temperature,
  non_finite_gradient,
  wrong_vote_count,
  unparseable_vote,
  length_mismatch,
  degenerate_labels,
  empty_split,
  empty_index,
  empty_pool,
  no_positive_in_gallery,
  invalid_config,
  // infrastructure
  teacher_unavailable,
  generation_unavailable,
  io_error,
  missing_prerequisite,
  config_hash_mismatch,
  internal,
};

const char* errc_name(errc c);

class Error : public std::runtime_error {
 public:
  Error(errc code, const std::string& message)
      : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

  errc code() const { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& message) { throw Error(code, message); }

inline void require(bool ok, errc code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace vlct

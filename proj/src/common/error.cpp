#include "common/error.hpp"

namespace vlct {

const char* errc_name(errc c) {
  switch (c) {
    case errc::empty_volume: return "EmptyVolume";
    case errc::invalid_rescale: return "InvalidRescale";
    case errc::invalid_spacing: return "InvalidSpacing";
    case errc::no_eligible_series: return "NoEligibleSeries";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::volume_too_small: return "VolumeTooSmall";
    case errc::missing_embedding: return "MissingEmbedding";
    case errc::empty_input: return "EmptyInput";
    case errc::too_many_slices: return "TooManySlices";
    case errc::shape_mismatch: return "ShapeMismatch";
    case errc::zero_vector: return "ZeroVector";
    case errc::invalid_temperature: return "InvalidTemperature";
    case errc::non_finite_gradient: return "NonFiniteGradient";
    case errc::wrong_vote_count: return "WrongVoteCount";
    case errc::unparseable_vote: return "UnparseableVote";
    case errc::length_mismatch: return "LengthMismatch";
    case errc::degenerate_labels: return "DegenerateLabels";
    case errc::empty_split: return "EmptySplit";
    case errc::empty_index: return "EmptyIndex";
    case errc::empty_pool: return "EmptyPool";
    case errc::no_positive_in_gallery: return "NoPositiveInGallery";
    case errc::invalid_config: return "InvalidConfig";
    case errc::teacher_unavailable: return "TeacherUnavailable";
    case errc::generation_unavailable: return "GenerationUnavailable";
    case errc::io_error: return "IoError";
    case errc::missing_prerequisite: return "MissingPrerequisite";
    case errc::config_hash_mismatch: return "ConfigHashMismatch";
    case errc::internal: return "InternalError";
  }
  return "UnknownError";
}

}  // namespace vlct

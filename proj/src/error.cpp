#include "bgd/error.hpp"

namespace bgd {

const char* errc_name(Errc code) noexcept {
  switch (code) {
    case Errc::io: return "IoError";
    case Errc::decode: return "DecodeError";
    case Errc::encode: return "EncodeError";
    case Errc::too_small: return "TooSmall";
    case Errc::invalid_argument: return "InvalidArgument";
    case Errc::out_of_range: return "RangeError";
    case Errc::zero_value: return "ZeroValue";
    case Errc::fit_diverged: return "FitDiverged";
    case Errc::length_mismatch: return "LengthMismatch";
    case Errc::alpha_one: return "AlphaOne";
    case Errc::non_finite: return "NonFinite";
    case Errc::empty_node: return "EmptyNode";
    case Errc::single_class: return "SingleClass";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::fingerprint_mismatch: return "FingerprintMismatch";
    case Errc::too_few_groups: return "TooFewGroups";
    case Errc::empty_stratum: return "EmptyStratum";
    case Errc::missing_cache: return "MissingCache";
    case Errc::parse: return "ParseError";
  }
  return "Unknown";
}

}  // namespace bgd

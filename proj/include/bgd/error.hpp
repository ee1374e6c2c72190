#pragma once

#include <stdexcept>
#include <string>

namespace bgd {

enum class Errc {
  io,
  decode,
  encode,
  too_small,
  invalid_argument,
  out_of_range,
  zero_value,
  fit_diverged,
  length_mismatch,
  alpha_one,
  non_finite,
  empty_node,
  single_class,
  dimension_mismatch,
  fingerprint_mismatch,
  too_few_groups,
  empty_stratum,
  missing_cache,
  parse,
};

const char* errc_name(Errc code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what) : std::runtime_error(what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace bgd

#pragma once

#include <stdexcept>
#include <string>

namespace hmmrf {

/// Base class for every failure raised by the library.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define HMMRF_DEFINE_ERROR(name)            \
  class name : public error {               \
   public:                                  \
    using error::error;                     \
  }

HMMRF_DEFINE_ERROR(config_error);
HMMRF_DEFINE_ERROR(argument_error);
HMMRF_DEFINE_ERROR(encoding_error);
HMMRF_DEFINE_ERROR(degenerate_observation_error);
HMMRF_DEFINE_ERROR(training_error);
HMMRF_DEFINE_ERROR(numerical_error);
HMMRF_DEFINE_ERROR(ingestion_error);
HMMRF_DEFINE_ERROR(empty_corpus_error);
HMMRF_DEFINE_ERROR(short_sample_error);
HMMRF_DEFINE_ERROR(stratification_error);
HMMRF_DEFINE_ERROR(io_error);
HMMRF_DEFINE_ERROR(fit_error);
HMMRF_DEFINE_ERROR(search_error);
HMMRF_DEFINE_ERROR(format_error);

#undef HMMRF_DEFINE_ERROR

/// Rethrow `e` as the same error type with `context` prefixed to its message.
[[noreturn]] void rethrow_with_context(const error& e, const std::string& context);

}  // namespace hmmrf

#include "hmmrf/errors.hpp"

namespace hmmrf {
namespace {

template <typename First, typename... Rest>
[[noreturn]] void rethrow_as(const error& e, const std::string& message) {
  if (dynamic_cast<const First*>(&e) != nullptr) throw First(message);
  if constexpr (sizeof...(Rest) > 0) {
    rethrow_as<Rest...>(e, message);
  } else {
    throw error(message);
  }
}

}  // namespace

void rethrow_with_context(const error& e, const std::string& context) {
  rethrow_as<config_error, argument_error, encoding_error, degenerate_observation_error,
             training_error, numerical_error, ingestion_error, empty_corpus_error,
             short_sample_error, stratification_error, io_error, fit_error, search_error,
             format_error>(e, context + ": " + e.what());
}

}  // namespace hmmrf

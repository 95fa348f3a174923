#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <vector>

#include "hmmrf/serialization.hpp"

namespace hmmrf::cli {

inline constexpr const char* kToolVersion = "1.0.0";

/// Run record written beside every artifact: what ran, with which resolved
/// parameters, on which corpus, and when.
class Manifest {
 public:
  Manifest(std::string command, std::vector<std::string> argv);

  void config(json resolved) { config_ = std::move(resolved); }
  void seed(std::uint64_t value) { seed_ = value; }
  void corpus(const std::filesystem::path& root);
  void output(const std::filesystem::path& path) { outputs_.push_back(path.generic_string()); }

  void write(const std::filesystem::path& path) const;

 private:
  std::string command_;
  std::vector<std::string> argv_;
  json config_ = json::object();
  std::uint64_t seed_ = 0;
  std::string corpus_root_;
  std::string fingerprint_;
  std::vector<std::string> outputs_;
  std::chrono::system_clock::time_point started_;
};

/// `<dir>/<stem>.manifest.json` for file outputs.
std::filesystem::path manifest_path_for(const std::filesystem::path& output_file);

}  // namespace hmmrf::cli

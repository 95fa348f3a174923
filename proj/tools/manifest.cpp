#include "manifest.hpp"

#include <ctime>

#include "hmmrf/corpus.hpp"

namespace hmmrf::cli {
namespace {

std::string iso8601(std::chrono::system_clock::time_point tp) {
  const std::time_t t = std::chrono::system_clock::to_time_t(tp);
  std::tm utc{};
  gmtime_r(&t, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

}  // namespace

Manifest::Manifest(std::string command, std::vector<std::string> argv)
    : command_(std::move(command)), argv_(std::move(argv)), started_(std::chrono::system_clock::now()) {}

void Manifest::corpus(const std::filesystem::path& root) {
  corpus_root_ = root.generic_string();
  fingerprint_ = corpus_fingerprint(root);
}

void Manifest::write(const std::filesystem::path& path) const {
  json j;
  j["command"] = command_;
  j["argv"] = argv_;
  j["version"] = kToolVersion;
  j["model_format"] = kModelFormatVersion;
  j["seed"] = seed_;
  j["config"] = config_;
  j["corpus"] = {{"root", corpus_root_}, {"fingerprint", fingerprint_}};
  j["outputs"] = outputs_;
  j["started_at"] = iso8601(started_);
  j["finished_at"] = iso8601(std::chrono::system_clock::now());
  write_json(path, j);
}

std::filesystem::path manifest_path_for(const std::filesystem::path& output_file) {
  return output_file.parent_path() / (output_file.stem().string() + ".manifest.json");
}

}  // namespace hmmrf::cli

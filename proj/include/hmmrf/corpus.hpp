#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "hmmrf/hmm.hpp"
#include "hmmrf/random.hpp"

namespace hmmrf {

/// A sample as read from disk: mnemonics already normalized.
struct RawSequence {
  std::string sample_id;
  std::string family;
  std::vector<std::string> mnemonics;
};

/// An encoded sample. unseen_count is the number of mnemonics that were not
/// in the vocabulary and fell back to id 0.
struct LabeledSequence {
  std::string sample_id;
  std::string family;
  std::vector<Symbol> symbols;
  std::size_t unseen_count = 0;
};

/// Dense mapping between normalized mnemonics and ids, ordered by
/// descending training frequency (ties lexicographic).
class OpcodeVocabulary {
 public:
  OpcodeVocabulary() = default;
  /// Ids follow the order of `mnemonics`; throws format_error on duplicates.
  explicit OpcodeVocabulary(std::vector<std::string> mnemonics);

  std::size_t size() const { return id_to_mnemonic_.size(); }
  bool contains(std::string_view mnemonic) const;
  Symbol id(std::string_view mnemonic) const;  // throws argument_error when absent
  const std::string& mnemonic(Symbol id) const;
  const std::vector<std::string>& mnemonics() const { return id_to_mnemonic_; }

  /// FNV-1a 64 over the ordered mnemonic list, as 16 hex digits.
  std::string hash() const;

  friend bool operator==(const OpcodeVocabulary& a, const OpcodeVocabulary& b) {
    return a.id_to_mnemonic_ == b.id_to_mnemonic_;
  }

 private:
  std::vector<std::string> id_to_mnemonic_;
  std::unordered_map<std::string, Symbol> mnemonic_to_id_;
};

/// ASCII-uppercase with surrounding whitespace trimmed.
std::string normalize_mnemonic(std::string_view text);

/// Parse .opseq text: one mnemonic per line, blank lines ignored.
std::vector<std::string> parse_opseq(std::string_view text);

/// Read a single .opseq file. Throws ingestion_error if it cannot be read.
std::vector<std::string> read_opseq_file(const std::filesystem::path& path);

struct LoadedCorpus {
  std::vector<RawSequence> sequences;
  std::vector<std::string> warnings;
};

/// Load `<root>/<family>/<sample>.opseq`. Families and samples are visited in
/// lexicographic order; sample_id is "<family>/<stem>". Directories whose
/// name starts with '_' or '.' are skipped.
LoadedCorpus load_corpus(const std::filesystem::path& root);

/// Drop every family with fewer than min_samples samples.
std::vector<RawSequence> filter_small_classes(std::vector<RawSequence> sequences,
                                              std::size_t min_samples);

OpcodeVocabulary build_vocabulary(const std::vector<RawSequence>& training);

struct Encoded {
  std::vector<Symbol> symbols;
  std::size_t unseen_count = 0;
};

/// Total: unknown mnemonics map to id 0.
Encoded encode(const OpcodeVocabulary& vocabulary, const std::vector<std::string>& mnemonics);

LabeledSequence encode_sample(const OpcodeVocabulary& vocabulary, const RawSequence& raw);

struct DroppedSample {
  std::string sample_id;
  std::string family;
  std::size_t length = 0;
  std::string reason;
};

struct CorpusSplit {
  std::vector<LabeledSequence> train;
  std::vector<LabeledSequence> test;
  OpcodeVocabulary vocabulary;
  std::vector<DroppedSample> dropped;

  /// Families present in the training split, lexicographic.
  std::vector<std::string> families() const;
};

/// Drops samples shorter than min_length, then does a seeded stratified
/// shuffle-split per family. Each family sends round(test_fraction * n)
/// samples to test, clamped to [1, n - 1]. The vocabulary is built from the
/// training side only. Both sides keep input order.
CorpusSplit split_corpus(const std::vector<RawSequence>& sequences, double test_fraction,
                         std::size_t min_length, std::uint64_t seed);

/// Stratified split of already-encoded samples, used to carve a validation
/// set out of a training split.
std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> stratified_split(
    const std::vector<LabeledSequence>& sequences, double holdout_fraction, std::uint64_t seed);

/// CSV with columns sample_id,family,length,reason.
void write_dropped_csv(const std::filesystem::path& path, const std::vector<DroppedSample>& dropped);

/// Content hash over every .opseq file under root (relative paths + bytes),
/// as 16 hex digits.
std::string corpus_fingerprint(const std::filesystem::path& root);

struct PlantedCorpusConfig {
  std::size_t n_families = 3;
  std::size_t n_states = 4;
  std::size_t n_symbols = 30;
  std::size_t samples_per_family = 120;
  std::size_t min_length = 300;
  std::size_t max_length = 800;
  double separation = 0.8;
  std::uint64_t seed = 42;
  /// Extra samples of length short_length, assigned to families round-robin.
  std::size_t short_samples = 0;
  std::size_t short_length = 10;

  void validate() const;
};

struct PlantedFamily {
  std::string name;
  HmmModel model;
};

struct PlantedCorpus {
  std::vector<PlantedFamily> families;
  std::vector<std::string> mnemonics;  // planted symbol k is written as mnemonics[k]
  std::vector<RawSequence> sequences;
  std::size_t total_symbols = 0;
};

/// Build the per-family planted models. The symbol alphabet is cut into one
/// block per family. Each family's emission row is
///   (1 - separation) * shared_row + separation * family_row
/// where shared_row is common to all families and family_row is supported on
/// that family's block only, so the total-variation distance between two
/// families' rows for the same state is exactly `separation`. Transitions and
/// initial distributions are mixed the same way, which makes separation 0
/// produce identical families.
std::vector<PlantedFamily> planted_models(const PlantedCorpusConfig& config);

/// Draw an observation sequence: initial state from pi, then alternate
/// emission and transition draws.
std::vector<Symbol> sample_sequence(const HmmModel& model, std::size_t length, Rng& rng);

/// Stationary distribution of the transition matrix by power iteration.
std::vector<double> stationary_distribution(const HmmModel& model);

/// Generate the corpus in memory; deterministic for a fixed config.
PlantedCorpus make_planted_corpus(const PlantedCorpusConfig& config);

/// Generate the corpus and write the load_corpus layout plus `_planted.json`
/// under root. Throws io_error if root cannot be written.
PlantedCorpus generate_planted_corpus(const PlantedCorpusConfig& config,
                                      const std::filesystem::path& root);

}  // namespace hmmrf

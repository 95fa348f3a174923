#include "hmmrf/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hmmrf/errors.hpp"
#include "hmmrf/hash.hpp"
#include "hmmrf/serialization.hpp"

namespace fs = std::filesystem;

namespace hmmrf {
namespace {

// Common x86 mnemonics used to name planted symbols; beyond the list symbols
// are named OPnnn.
constexpr const char* kMnemonicNames[] = {
    "MOV",  "PUSH", "CALL", "POP",   "CMP",   "JZ",    "LEA",   "TEST",  "JMP",   "ADD",
    "JNZ",  "RETN", "XOR",  "AND",   "SUB",   "INC",   "DEC",   "OR",    "SHL",   "SHR",
    "IMUL", "MOVZX", "NOP", "JB",    "JA",    "JBE",   "JNB",   "SETZ",  "NEG",   "NOT",
    "SAR",  "ROL",  "ROR",  "MOVSX", "CDQ",   "IDIV",  "DIV",   "MUL",   "LEAVE", "STOSD",
    "MOVSD", "REP", "SBB",  "ADC",   "XCHG",  "FLD",   "FSTP",  "INT3",
};

std::string planted_mnemonic(std::size_t k) {
  constexpr std::size_t named = std::size(kMnemonicNames);
  if (k < named) return kMnemonicNames[k];
  char buf[32];
  std::snprintf(buf, sizeof(buf), "OP%03zu", k);
  return buf;
}

std::string indexed_name(const char* prefix, std::size_t index, int width) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%0*zu", prefix, width, index);
  return buf;
}

std::vector<double> dirichlet_ones(std::size_t n, Rng& rng) {
  std::vector<double> w(n);
  double sum = 0.0;
  for (double& v : w) {
    v = -std::log(rng.uniform_open_zero());
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string quoted = "\"";
  for (char c : text) {
    if (c == '"') quoted += '"';
    quoted += c;
  }
  return quoted + "\"";
}

// For each family (lexicographic), picks round(fraction * n) members, clamped
// to [1, n - 1], by a seeded shuffle. Returns a membership mask.
template <typename Sample>
std::vector<bool> stratified_mask(const std::vector<Sample>& samples, double fraction,
                                  std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw config_error("split fraction must lie strictly between 0 and 1");
  }
  std::map<std::string, std::vector<std::size_t>> by_family;
  for (std::size_t i = 0; i < samples.size(); ++i) by_family[samples[i].family].push_back(i);

  std::vector<bool> held_out(samples.size(), false);
  Rng rng(seed);
  for (auto& [family, members] : by_family) {
    const std::size_t n = members.size();
    if (n < 2) {
      throw stratification_error("family '" + family + "' has " + std::to_string(n) +
                                 " sample(s); at least 2 are needed to split");
    }
    const auto wanted = static_cast<std::size_t>(std::lround(fraction * static_cast<double>(n)));
    const std::size_t n_held = std::clamp<std::size_t>(wanted, 1, n - 1);
    rng.shuffle(std::span<std::size_t>(members));
    for (std::size_t k = 0; k < n_held; ++k) held_out[members[k]] = true;
  }
  return held_out;
}

}  // namespace

OpcodeVocabulary::OpcodeVocabulary(std::vector<std::string> mnemonics)
    : id_to_mnemonic_(std::move(mnemonics)) {
  for (std::size_t i = 0; i < id_to_mnemonic_.size(); ++i) {
    if (!mnemonic_to_id_.emplace(id_to_mnemonic_[i], static_cast<Symbol>(i)).second) {
      throw format_error("duplicate mnemonic '" + id_to_mnemonic_[i] + "' in vocabulary");
    }
  }
}

bool OpcodeVocabulary::contains(std::string_view mnemonic) const {
  return mnemonic_to_id_.contains(std::string(mnemonic));
}

Symbol OpcodeVocabulary::id(std::string_view mnemonic) const {
  auto it = mnemonic_to_id_.find(std::string(mnemonic));
  if (it == mnemonic_to_id_.end()) {
    throw argument_error("mnemonic '" + std::string(mnemonic) + "' is not in the vocabulary");
  }
  return it->second;
}

const std::string& OpcodeVocabulary::mnemonic(Symbol id) const {
  if (id >= id_to_mnemonic_.size()) throw argument_error("symbol id out of range");
  return id_to_mnemonic_[id];
}

std::string OpcodeVocabulary::hash() const {
  Fnv1a h;
  for (const auto& m : id_to_mnemonic_) {
    h.update(m);
    h.update("\n");
  }
  return h.hex();
}

std::string normalize_mnemonic(std::string_view text) {
  auto is_space = [](unsigned char c) { return std::isspace(c) != 0; };
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && is_space(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && is_space(static_cast<unsigned char>(text[end - 1]))) --end;
  std::string out(text.substr(begin, end - begin));
  for (char& c : out) {
    if (c >= 'a' && c <= 'z') c = static_cast<char>(c - 'a' + 'A');
  }
  return out;
}

std::vector<std::string> parse_opseq(std::string_view text) {
  std::vector<std::string> mnemonics;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find('\n', pos), text.size());
    std::string m = normalize_mnemonic(text.substr(pos, next - pos));
    if (!m.empty()) mnemonics.push_back(std::move(m));
    pos = next + 1;
  }
  return mnemonics;
}

std::vector<std::string> read_opseq_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ingestion_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw ingestion_error("error while reading " + path.string());
  return parse_opseq(buffer.str());
}

LoadedCorpus load_corpus(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw ingestion_error("corpus root " + root.string() + " is not a readable directory");
  }

  std::vector<fs::path> family_dirs;
  for (const auto& entry : fs::directory_iterator(root, ec)) {
    const std::string name = entry.path().filename().string();
    if (entry.is_directory() && !name.empty() && name[0] != '_' && name[0] != '.') {
      family_dirs.push_back(entry.path());
    }
  }
  if (ec) throw ingestion_error("cannot list " + root.string() + ": " + ec.message());
  std::sort(family_dirs.begin(), family_dirs.end());

  LoadedCorpus corpus;
  for (const auto& dir : family_dirs) {
    const std::string family = dir.filename().string();
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir, ec)) {
      if (entry.is_regular_file() && entry.path().extension() == ".opseq") {
        files.push_back(entry.path());
      }
    }
    if (ec) throw ingestion_error("cannot list " + dir.string() + ": " + ec.message());
    std::sort(files.begin(), files.end());

    std::size_t loaded = 0;
    for (const auto& file : files) {
      auto mnemonics = read_opseq_file(file);
      if (mnemonics.empty()) {
        corpus.warnings.push_back("empty sample " + file.string() + " skipped");
        continue;
      }
      corpus.sequences.push_back({family + "/" + file.stem().string(), family, std::move(mnemonics)});
      ++loaded;
    }
    if (loaded == 0) corpus.warnings.push_back("family '" + family + "' has no samples");
  }

  if (corpus.sequences.empty()) {
    throw empty_corpus_error("no samples found under " + root.string());
  }
  return corpus;
}

std::vector<RawSequence> filter_small_classes(std::vector<RawSequence> sequences,
                                              std::size_t min_samples) {
  if (min_samples == 0) throw config_error("min_samples must be at least 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& s : sequences) ++counts[s.family];
  std::erase_if(sequences, [&](const RawSequence& s) { return counts[s.family] < min_samples; });
  if (sequences.empty()) {
    throw empty_corpus_error("no family has at least " + std::to_string(min_samples) + " samples");
  }
  return sequences;
}

OpcodeVocabulary build_vocabulary(const std::vector<RawSequence>& training) {
  std::map<std::string, std::size_t> counts;
  for (const auto& s : training) {
    for (const auto& m : s.mnemonics) ++counts[m];
  }
  if (counts.empty()) throw argument_error("cannot build a vocabulary from no mnemonics");

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> ordered;
  ordered.reserve(ranked.size());
  for (auto& [m, c] : ranked) ordered.push_back(m);
  return OpcodeVocabulary(std::move(ordered));
}

Encoded encode(const OpcodeVocabulary& vocabulary, const std::vector<std::string>& mnemonics) {
  if (mnemonics.empty()) throw encoding_error("cannot encode an empty opcode sequence");
  if (vocabulary.size() == 0) throw encoding_error("vocabulary is empty");
  Encoded out;
  out.symbols.reserve(mnemonics.size());
  for (const auto& m : mnemonics) {
    if (vocabulary.contains(m)) {
      out.symbols.push_back(vocabulary.id(m));
    } else {
      out.symbols.push_back(0);
      ++out.unseen_count;
    }
  }
  return out;
}

LabeledSequence encode_sample(const OpcodeVocabulary& vocabulary, const RawSequence& raw) {
  if (raw.family.empty()) throw encoding_error("sample " + raw.sample_id + " has no family");
  Encoded e = encode(vocabulary, raw.mnemonics);
  return {raw.sample_id, raw.family, std::move(e.symbols), e.unseen_count};
}

std::vector<std::string> CorpusSplit::families() const {
  std::vector<std::string> names;
  for (const auto& s : train) names.push_back(s.family);
  std::sort(names.begin(), names.end());
  names.erase(std::unique(names.begin(), names.end()), names.end());
  return names;
}

CorpusSplit split_corpus(const std::vector<RawSequence>& sequences, double test_fraction,
                         std::size_t min_length, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw config_error("test_fraction must lie strictly between 0 and 1");
  }

  CorpusSplit split;
  std::vector<RawSequence> retained;
  for (const auto& s : sequences) {
    if (s.mnemonics.size() < min_length) {
      split.dropped.push_back({s.sample_id, s.family, s.mnemonics.size(), "short"});
    } else {
      retained.push_back(s);
    }
  }
  if (retained.empty()) {
    throw empty_corpus_error("every sample is shorter than " + std::to_string(min_length) +
                             " opcodes");
  }

  const auto held_out = stratified_mask(retained, test_fraction, seed);
  std::vector<RawSequence> train_raw;
  for (std::size_t i = 0; i < retained.size(); ++i) {
    if (!held_out[i]) train_raw.push_back(retained[i]);
  }
  split.vocabulary = build_vocabulary(train_raw);
  for (std::size_t i = 0; i < retained.size(); ++i) {
    auto encoded = encode_sample(split.vocabulary, retained[i]);
    (held_out[i] ? split.test : split.train).push_back(std::move(encoded));
  }
  return split;
}

std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> stratified_split(
    const std::vector<LabeledSequence>& sequences, double holdout_fraction, std::uint64_t seed) {
  const auto held_out = stratified_mask(sequences, holdout_fraction, seed);
  std::pair<std::vector<LabeledSequence>, std::vector<LabeledSequence>> out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    (held_out[i] ? out.second : out.first).push_back(sequences[i]);
  }
  return out;
}

void write_dropped_csv(const fs::path& path, const std::vector<DroppedSample>& dropped) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << "sample_id,family,length,reason\n";
  for (const auto& d : dropped) {
    out << csv_field(d.sample_id) << ',' << csv_field(d.family) << ',' << d.length << ','
        << csv_field(d.reason) << '\n';
  }
  if (!out) throw io_error("error while writing " + path.string());
}

std::string corpus_fingerprint(const fs::path& root) {
  std::vector<fs::path> files;
  std::error_code ec;
  for (auto it = fs::recursive_directory_iterator(root, ec); !ec && it != fs::recursive_directory_iterator();
       it.increment(ec)) {
    if (it->is_regular_file() && it->path().extension() == ".opseq") files.push_back(it->path());
  }
  if (ec) throw ingestion_error("cannot scan " + root.string() + ": " + ec.message());
  std::sort(files.begin(), files.end());

  Fnv1a h;
  for (const auto& file : files) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw ingestion_error("cannot read " + file.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    h.update(fs::relative(file, root).generic_string());
    h.update(std::string_view("\0", 1));
    h.update(buffer.str());
    h.update(std::string_view("\0", 1));
  }
  return h.hex();
}

void PlantedCorpusConfig::validate() const {
  if (n_families == 0) throw config_error("planted corpus needs at least one family");
  if (n_states == 0) throw config_error("planted corpus needs at least one state");
  if (n_symbols < n_families) {
    throw config_error("planted corpus needs at least one symbol per family");
  }
  if (samples_per_family == 0) throw config_error("samples_per_family must be positive");
  if (min_length == 0 || min_length > max_length) {
    throw config_error("sequence length range must satisfy 1 <= min <= max");
  }
  if (!(separation >= 0.0 && separation <= 1.0)) {
    throw config_error("separation must lie in [0, 1]");
  }
  if (short_samples > 0 && short_length == 0) throw config_error("short_length must be positive");
}

std::vector<PlantedFamily> planted_models(const PlantedCorpusConfig& config) {
  config.validate();
  const std::size_t n = config.n_states;
  const std::size_t m = config.n_symbols;
  const std::size_t families = config.n_families;
  const double sep = config.separation;
  Rng rng(derive_seed(config.seed, 0));

  const auto shared_initial = dirichlet_ones(n, rng);
  std::vector<std::vector<double>> shared_transition;
  std::vector<std::vector<double>> shared_emission;
  for (std::size_t i = 0; i < n; ++i) shared_transition.push_back(dirichlet_ones(n, rng));
  for (std::size_t i = 0; i < n; ++i) shared_emission.push_back(dirichlet_ones(m, rng));

  std::vector<PlantedFamily> out;
  for (std::size_t f = 0; f < families; ++f) {
    const std::size_t block_begin = f * m / families;
    const std::size_t block_end = (f + 1) * m / families;

    HmmModel model;
    model.n_states = n;
    model.n_symbols = m;
    model.initial.resize(n);
    model.transition = Matrix(n, n);
    model.emission = Matrix(n, m);

    const auto own_initial = dirichlet_ones(n, rng);
    for (std::size_t i = 0; i < n; ++i) {
      model.initial[i] = (1.0 - sep) * shared_initial[i] + sep * own_initial[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto own = dirichlet_ones(n, rng);
      for (std::size_t j = 0; j < n; ++j) {
        model.transition(i, j) = (1.0 - sep) * shared_transition[i][j] + sep * own[j];
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto own = dirichlet_ones(block_end - block_begin, rng);
      for (std::size_t k = 0; k < m; ++k) {
        const double specific = (k >= block_begin && k < block_end) ? own[k - block_begin] : 0.0;
        model.emission(i, k) = (1.0 - sep) * shared_emission[i][k] + sep * specific;
      }
    }
    out.push_back({indexed_name("family", f, 2), std::move(model)});
  }
  return out;
}

std::vector<Symbol> sample_sequence(const HmmModel& model, std::size_t length, Rng& rng) {
  std::vector<Symbol> out;
  out.reserve(length);
  if (length == 0) return out;
  std::size_t state = rng.categorical(model.initial);
  for (std::size_t t = 0; t < length; ++t) {
    out.push_back(static_cast<Symbol>(rng.categorical(model.emission.row(state))));
    if (t + 1 < length) state = rng.categorical(model.transition.row(state));
  }
  return out;
}

std::vector<double> stationary_distribution(const HmmModel& model) {
  const std::size_t n = model.n_states;
  std::vector<double> p(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (int iter = 0; iter < 10'000; ++iter) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) next[j] += p[i] * model.transition(i, j);
    }
    double diff = 0.0;
    for (std::size_t j = 0; j < n; ++j) diff += std::abs(next[j] - p[j]);
    p.swap(next);
    if (diff < 1e-14) break;
  }
  return p;
}

PlantedCorpus make_planted_corpus(const PlantedCorpusConfig& config) {
  PlantedCorpus corpus;
  corpus.families = planted_models(config);
  for (std::size_t k = 0; k < config.n_symbols; ++k) corpus.mnemonics.push_back(planted_mnemonic(k));

  Rng rng(derive_seed(config.seed, 1));
  auto emit = [&](std::size_t family, std::string name, std::size_t length) {
    const auto symbols = sample_sequence(corpus.families[family].model, length, rng);
    RawSequence raw;
    raw.family = corpus.families[family].name;
    raw.sample_id = raw.family + "/" + name;
    raw.mnemonics.reserve(length);
    for (Symbol s : symbols) raw.mnemonics.push_back(corpus.mnemonics[s]);
    corpus.total_symbols += length;
    corpus.sequences.push_back(std::move(raw));
  };

  const std::size_t span = config.max_length - config.min_length + 1;
  for (std::size_t f = 0; f < config.n_families; ++f) {
    for (std::size_t s = 0; s < config.samples_per_family; ++s) {
      const std::size_t length = config.min_length + static_cast<std::size_t>(rng.index(span));
      emit(f, indexed_name("sample", s, 4), length);
    }
  }
  for (std::size_t s = 0; s < config.short_samples; ++s) {
    emit(s % config.n_families, indexed_name("short", s, 3), config.short_length);
  }
  return corpus;
}

PlantedCorpus generate_planted_corpus(const PlantedCorpusConfig& config, const fs::path& root) {
  PlantedCorpus corpus = make_planted_corpus(config);
  try {
    fs::create_directories(root);
    for (const auto& family : corpus.families) fs::create_directories(root / family.name);
  } catch (const fs::filesystem_error& e) {
    throw io_error("cannot create corpus directory " + root.string() + ": " + e.what());
  }

  for (const auto& raw : corpus.sequences) {
    const fs::path path = root / (raw.sample_id + ".opseq");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw io_error("cannot write " + path.string());
    for (const auto& m : raw.mnemonics) out << m << '\n';
    if (!out) throw io_error("error while writing " + path.string());
  }

  json truth;
  truth["config"] = to_json(config);
  truth["mnemonics"] = corpus.mnemonics;
  truth["families"] = json::array();
  for (const auto& family : corpus.families) {
    truth["families"].push_back({{"name", family.name}, {"model", to_json(family.model)}});
  }
  write_json(root / "_planted.json", truth);
  return corpus;
}

}  // namespace hmmrf

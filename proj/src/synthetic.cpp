#include "relalign/synthetic.hpp"

#include <array>
#include <cstdio>

#include "relalign/rng.hpp"
#include "relalign/types.hpp"

namespace relalign::ingest {

namespace {

constexpr std::array<const char*, 16> kSyllables = {"ba", "ce", "di", "fo", "gu", "ka",
                                                    "le", "mi", "no", "pu", "ra", "se",
                                                    "ti", "vo", "zu", "xa"};
constexpr std::array<const char*, 8> kSharedWords = {"the", "and", "of", "to",
                                                     "in",  "it",  "is", "was"};
constexpr std::array<const char*, 12> kClassNames = {"alpha",  "bravo",   "charlie", "delta",
                                                     "echo",   "foxtrot", "golf",    "hotel",
                                                     "india",  "juliett", "kilo",    "lima"};
constexpr int kMarkersPerClass = 12;

/// Marker vocabulary is a pure function of the class index, so corpora drawn
/// with different seeds share class structure.
std::string marker_word(int cls, int i) {
  std::string word;
  word += static_cast<char>('a' + cls / 26);
  word += static_cast<char>('a' + cls % 26);
  word += kSyllables[i % kSyllables.size()];
  word += kSyllables[(i * 5 + 3) % kSyllables.size()];
  return word;
}

/// Classes under the same level-1 group share a second vocabulary, which
/// keeps the corpus separable through the class markers but stops class
/// geometry from being trivially perfect.
std::string group_word(int cls, int i) {
  std::string word = "g";
  word += static_cast<char>('a' + (cls / 2) % 26);
  word += kSyllables[(i * 7 + 1) % kSyllables.size()];
  word += kSyllables[(i * 3 + 5) % kSyllables.size()];
  return word;
}

std::string class_name(int cls) {
  if (cls < static_cast<int>(kClassNames.size())) return kClassNames[cls];
  return "class-" + std::to_string(cls);
}

/// Classes differ in how loudly they signal: most draw a third of their words
/// from their own markers, but every fourth class is marker-poor and is
/// largely recognizable by the absence of other classes' markers. Shared
/// filler dominates, so class means sit close together; weak classes are what
/// stress embedding quality without breaking separability.
double own_marker_rate(int cls) { return cls % 4 == 2 ? 0.12 : 0.35; }

std::string make_argument(int cls, Rng& rng) {
  const int len = 8 + static_cast<int>(rng.below(5));
  const double own = own_marker_rate(cls);
  std::string out;
  for (int w = 0; w < len; ++w) {
    if (!out.empty()) out += " ";
    const double roll = rng.uniform();
    if (roll < own) {
      out += marker_word(cls, static_cast<int>(rng.below(kMarkersPerClass)));
    } else if (roll < own + 0.05) {
      out += group_word(cls, static_cast<int>(rng.below(kMarkersPerClass)));
    } else {
      out += kSharedWords[rng.below(kSharedWords.size())];
    }
  }
  return out;
}

}  // namespace

SyntheticCorpus generate_synthetic_corpus(int n_classes, int n_per_class, std::uint64_t seed) {
  if (n_classes < 2) throw ValidationError("synthetic corpus: need at least 2 classes");
  if (n_per_class < 1) throw ValidationError("synthetic corpus: need at least 1 per class");

  SyntheticCorpus corpus;
  corpus.taxonomy.framework_name = "synthetic";
  for (int c = 0; c < n_classes; ++c) {
    LabelRecord rec;
    rec.name = class_name(c);
    rec.description = "link signalled by markers like " + marker_word(c, 0) + " " +
                      marker_word(c, 1) + " " + marker_word(c, 2);
    rec.hierarchy_path = std::vector<std::string>{"group-" + std::to_string(c / 2), rec.name};
    corpus.taxonomy.labels.push_back(std::move(rec));
  }
  corpus.taxonomy.validate();

  Rng rng(seed);
  int doc = 0;
  for (int j = 0; j < n_per_class; ++j) {
    for (int c = 0; c < n_classes; ++c) {
      RelationInstance inst;
      inst.arg1 = make_argument(c, rng);
      inst.arg2 = make_argument(c, rng);
      inst.label = c;
      inst.framework = Framework::OTHER;
      inst.relation_kind = RelationKind::NA;
      char buf[16];
      std::snprintf(buf, sizeof(buf), "synth_%04d", doc++);
      inst.doc_id = buf;
      inst.source = InstanceSource::ORIGINAL;
      corpus.instances.push_back(std::move(inst));
    }
  }
  return corpus;
}

SyntheticCorpus rename_synthetic_corpus(const SyntheticCorpus& corpus, const std::string& prefix,
                                        const std::vector<int>& permutation) {
  const int k = corpus.taxonomy.size();
  std::vector<int> perm = permutation;
  if (perm.empty()) {
    perm.resize(k);
    for (int i = 0; i < k; ++i) perm[i] = i;
  }
  if (static_cast<int>(perm.size()) != k) {
    throw ValidationError("rename: permutation size does not match taxonomy");
  }
  std::vector<int> new_id_of(k, -1);  // old label id -> new label id
  SyntheticCorpus out;
  out.taxonomy.framework_name = prefix + corpus.taxonomy.framework_name;
  for (int new_id = 0; new_id < k; ++new_id) {
    const int old_id = perm[new_id];
    if (old_id < 0 || old_id >= k || new_id_of[old_id] != -1) {
      throw ValidationError("rename: not a permutation");
    }
    new_id_of[old_id] = new_id;
    const LabelRecord& old_rec = corpus.taxonomy.labels[old_id];
    LabelRecord rec;
    rec.name = prefix + old_rec.name;
    rec.description = old_rec.description;
    if (old_rec.hierarchy_path) {
      std::vector<std::string> path = *old_rec.hierarchy_path;
      for (auto& level : path) level = prefix + level;
      rec.hierarchy_path = std::move(path);
    }
    out.taxonomy.labels.push_back(std::move(rec));
  }
  out.taxonomy.validate();

  out.instances = corpus.instances;
  for (auto& inst : out.instances) inst.label = new_id_of[inst.label];
  return out;
}

}  // namespace relalign::ingest

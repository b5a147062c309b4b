#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relalign/config.hpp"
#include "relalign/taxonomy.hpp"
#include "relalign/types.hpp"

namespace relalign {

/// Lowercasing hash tokenizer. Alphanumeric runs become tokens and are hashed
/// into a fixed id space; ids 0 and 1 are the sequence-start and separator
/// markers.
class Tokenizer {
 public:
  static constexpr int kStart = 0;
  static constexpr int kSep = 1;

  explicit Tokenizer(int vocab_size);

  std::vector<int> tokenize(const std::string& text) const;

  /// Pair template: start marker, arg1 tokens (truncated to max_a), separator,
  /// arg2 tokens (truncated to max_b), separator. Segment 0 covers the first
  /// argument, segment 1 the second (separators included).
  struct Encoded {
    std::vector<int> ids;
    std::vector<int> segments;
  };
  Encoded encode_pair(const std::string& arg1, const std::string& arg2, int max_a,
                      int max_b) const;
  Encoded encode_single(const std::string& text, int max_len) const;

  int vocab_size() const { return vocab_size_; }

 private:
  int vocab_size_;
};

/// Trainable text encoder: token + segment embedding average followed by a
/// linear mixer. The output is the sequence-level aggregate vector; no
/// non-linear transformation is applied on top of it.
struct TextEncoder {
  Mat token_emb;    // vocab x d
  Mat segment_emb;  // 2 x d
  Mat mixer;        // d x d
  Vec bias;         // d

  int dim() const { return static_cast<int>(bias.size()); }
  int vocab() const { return static_cast<int>(token_emb.rows()); }
};

struct EncoderGrads {
  Mat token_emb;
  Mat segment_emb;
  Mat mixer;
  Vec bias;

  static EncoderGrads zeros_like(const TextEncoder& enc);
};

/// Per-batch cache of everything backward needs.
struct EncodeCache {
  std::vector<Tokenizer::Encoded> tokens;
  Mat pooled;  // N x d, embedding averages before the mixer
};

/// Deterministic weights for a named encoder family. The same family string
/// always yields the same parameters, so separately trained runs that share a
/// family start from a common representation space. If `cache_dir` (or the
/// RELALIGN_CHECKPOINT_DIR environment variable) holds "<family>.bin", that
/// checkpoint is loaded instead.
TextEncoder make_encoder(const std::string& family, int vocab_size, int dim,
                         const std::string& cache_dir = "");

/// Encode a batch of tokenized pairs; rows of the result are input
/// representations. Pass a cache to enable encoder_backward.
Mat encode_tokenized(const TextEncoder& enc, const std::vector<Tokenizer::Encoded>& batch,
                     EncodeCache* cache = nullptr);

/// Convenience wrapper: tokenize + encode argument pairs.
Mat encode_inputs(const TextEncoder& enc, const Tokenizer& tok,
                  const std::vector<std::pair<std::string, std::string>>& batch, int max_a,
                  int max_b, EncodeCache* cache = nullptr);

/// Accumulates parameter gradients for d(loss)/d(output) rows in `d_out`.
void encoder_backward(const TextEncoder& enc, const EncodeCache& cache, const Mat& d_out,
                      EncoderGrads& grads);

void save_encoder(const TextEncoder& enc, std::ostream& out);
TextEncoder load_encoder(std::istream& in);

/// Learnable k x d table of label vectors; row l embeds label l. Row order
/// always equals taxonomy order.
struct LabelEmbeddingTable {
  Mat matrix;
  RelationTaxonomy taxonomy;
  LabelEncoderKind encoder_kind = LabelEncoderKind::RANDOM;
  std::string encoder_family;
};

/// Label-name text fed to pretrained label encoders: lowercase, hierarchy
/// separators replaced by spaces.
std::string label_text(const std::string& name);

/// Build the initial label table for one of the five encoder variants. The
/// table is trainable in every variant; the variant decides initialization.
LabelEmbeddingTable init_label_table(const RelationTaxonomy& taxonomy, LabelEncoderKind kind,
                                     const ExperimentConfig& cfg, std::uint64_t seed,
                                     const std::string& cache_dir = "");

}  // namespace relalign

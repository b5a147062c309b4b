#include "relalign/encoder.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>

#include "relalign/rng.hpp"

namespace relalign {

namespace fs = std::filesystem;

Tokenizer::Tokenizer(int vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ < 8) throw ValidationError("tokenizer vocab size must be >= 8");
}

std::vector<int> Tokenizer::tokenize(const std::string& text) const {
  std::vector<int> ids;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) {
      ids.push_back(static_cast<int>(fnv1a64(token) % (vocab_size_ - 2)) + 2);
      token.clear();
    }
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) {
      token.push_back(static_cast<char>(std::tolower(c)));
    } else {
      flush();
    }
  }
  flush();
  return ids;
}

Tokenizer::Encoded Tokenizer::encode_pair(const std::string& arg1, const std::string& arg2,
                                          int max_a, int max_b) const {
  std::vector<int> a = tokenize(arg1);
  std::vector<int> b = tokenize(arg2);
  if (static_cast<int>(a.size()) > max_a) a.resize(max_a);
  if (static_cast<int>(b.size()) > max_b) b.resize(max_b);
  Encoded e;
  e.ids.push_back(kStart);
  e.segments.push_back(0);
  for (int id : a) {
    e.ids.push_back(id);
    e.segments.push_back(0);
  }
  e.ids.push_back(kSep);
  e.segments.push_back(0);
  for (int id : b) {
    e.ids.push_back(id);
    e.segments.push_back(1);
  }
  e.ids.push_back(kSep);
  e.segments.push_back(1);
  return e;
}

Tokenizer::Encoded Tokenizer::encode_single(const std::string& text, int max_len) const {
  std::vector<int> t = tokenize(text);
  if (static_cast<int>(t.size()) > max_len) t.resize(max_len);
  Encoded e;
  e.ids.push_back(kStart);
  e.segments.push_back(0);
  for (int id : t) {
    e.ids.push_back(id);
    e.segments.push_back(0);
  }
  e.ids.push_back(kSep);
  e.segments.push_back(0);
  return e;
}

EncoderGrads EncoderGrads::zeros_like(const TextEncoder& enc) {
  EncoderGrads g;
  g.token_emb = Mat::Zero(enc.token_emb.rows(), enc.token_emb.cols());
  g.segment_emb = Mat::Zero(enc.segment_emb.rows(), enc.segment_emb.cols());
  g.mixer = Mat::Zero(enc.mixer.rows(), enc.mixer.cols());
  g.bias = Vec::Zero(enc.bias.size());
  return g;
}

TextEncoder make_encoder(const std::string& family, int vocab_size, int dim,
                         const std::string& cache_dir) {
  std::string dir = cache_dir;
  if (dir.empty()) {
    if (const char* env = std::getenv("RELALIGN_CHECKPOINT_DIR")) dir = env;
  }
  if (!dir.empty()) {
    const fs::path p = fs::path(dir) / (family + ".bin");
    if (fs::exists(p)) {
      std::ifstream in(p, std::ios::binary);
      if (!in) throw RuntimeFailure("cannot open checkpoint: " + p.string());
      TextEncoder enc = load_encoder(in);
      if (enc.vocab() != vocab_size || enc.dim() != dim) {
        throw ValidationError("checkpoint " + p.string() + " has vocab/dim " +
                              std::to_string(enc.vocab()) + "/" + std::to_string(enc.dim()) +
                              ", config wants " + std::to_string(vocab_size) + "/" +
                              std::to_string(dim));
      }
      return enc;
    }
  }

  Rng rng(fnv1a64(family));
  TextEncoder enc;
  enc.token_emb = Mat::NullaryExpr(vocab_size, dim, [&](Index, Index) { return 0.2 * rng.normal(); });
  enc.segment_emb = Mat::NullaryExpr(2, dim, [&](Index, Index) { return 0.02 * rng.normal(); });
  // Near-identity mixer keeps the initial output close to the embedding
  // average while still being trainable.
  enc.mixer = Mat::NullaryExpr(dim, dim, [&](Index, Index) { return 0.01 * rng.normal(); });
  enc.mixer += Mat::Identity(dim, dim);
  enc.bias = Vec::Zero(dim);
  return enc;
}

Mat encode_tokenized(const TextEncoder& enc, const std::vector<Tokenizer::Encoded>& batch,
                     EncodeCache* cache) {
  if (batch.empty()) throw ValidationError("encode: empty batch");
  const int d = enc.dim();
  Mat pooled = Mat::Zero(batch.size(), d);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& e = batch[i];
    Vec h = Vec::Zero(d);
    for (std::size_t p = 0; p < e.ids.size(); ++p) {
      h += enc.token_emb.row(e.ids[p]).transpose();
      h += enc.segment_emb.row(e.segments[p]).transpose();
    }
    pooled.row(i) = h.transpose() / static_cast<double>(e.ids.size());
  }
  Mat out = pooled * enc.mixer.transpose();
  out.rowwise() += enc.bias.transpose();
  if (cache) {
    cache->tokens = batch;
    cache->pooled = pooled;
  }
  return out;
}

Mat encode_inputs(const TextEncoder& enc, const Tokenizer& tok,
                  const std::vector<std::pair<std::string, std::string>>& batch, int max_a,
                  int max_b, EncodeCache* cache) {
  if (batch.empty()) throw ValidationError("encode_inputs: empty batch");
  std::vector<Tokenizer::Encoded> enc_batch;
  enc_batch.reserve(batch.size());
  for (const auto& [a, b] : batch) {
    enc_batch.push_back(tok.encode_pair(a, b, max_a, max_b));
  }
  return encode_tokenized(enc, enc_batch, cache);
}

void encoder_backward(const TextEncoder& enc, const EncodeCache& cache, const Mat& d_out,
                      EncoderGrads& grads) {
  if (d_out.rows() != static_cast<Index>(cache.tokens.size())) {
    throw ValidationError("encoder_backward: gradient rows do not match cached batch");
  }
  grads.mixer.noalias() += d_out.transpose() * cache.pooled;
  grads.bias.noalias() += d_out.colwise().sum().transpose();
  Mat d_pooled = d_out * enc.mixer;  // row i: mixer^T * d_out_i
  for (std::size_t i = 0; i < cache.tokens.size(); ++i) {
    const auto& e = cache.tokens[i];
    const double inv_len = 1.0 / static_cast<double>(e.ids.size());
    const Eigen::RowVectorXd g = d_pooled.row(i) * inv_len;
    for (std::size_t p = 0; p < e.ids.size(); ++p) {
      grads.token_emb.row(e.ids[p]) += g;
      grads.segment_emb.row(e.segments[p]) += g;
    }
  }
}

namespace {

void write_mat(std::ostream& out, const Mat& m) {
  const std::int64_t r = m.rows(), c = m.cols();
  out.write(reinterpret_cast<const char*>(&r), sizeof(r));
  out.write(reinterpret_cast<const char*>(&c), sizeof(c));
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      out.write(reinterpret_cast<const char*>(&v), sizeof(v));
    }
  }
}

Mat read_mat(std::istream& in) {
  std::int64_t r = 0, c = 0;
  in.read(reinterpret_cast<char*>(&r), sizeof(r));
  in.read(reinterpret_cast<char*>(&c), sizeof(c));
  if (!in || r < 0 || c < 0 || r > (1 << 24) || c > (1 << 24)) {
    throw ValidationError("corrupt encoder checkpoint");
  }
  Mat m(r, c);
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      double v = 0;
      in.read(reinterpret_cast<char*>(&v), sizeof(v));
      m(i, j) = v;
    }
  }
  if (!in) throw ValidationError("truncated encoder checkpoint");
  return m;
}

}  // namespace

void save_encoder(const TextEncoder& enc, std::ostream& out) {
  const char magic[8] = {'r', 'l', 'e', 'n', 'c', '0', '1', '\n'};
  out.write(magic, sizeof(magic));
  write_mat(out, enc.token_emb);
  write_mat(out, enc.segment_emb);
  write_mat(out, enc.mixer);
  write_mat(out, enc.bias);
}

TextEncoder load_encoder(std::istream& in) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::string(magic, 8) != "rlenc01\n") {
    throw ValidationError("not an encoder checkpoint");
  }
  TextEncoder enc;
  enc.token_emb = read_mat(in);
  enc.segment_emb = read_mat(in);
  enc.mixer = read_mat(in);
  enc.bias = read_mat(in);
  return enc;
}

std::string label_text(const std::string& name) {
  std::string out;
  for (unsigned char c : name) {
    if (c == '.') {
      out.push_back(' ');
    } else {
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

LabelEmbeddingTable init_label_table(const RelationTaxonomy& taxonomy, LabelEncoderKind kind,
                                     const ExperimentConfig& cfg, std::uint64_t seed,
                                     const std::string& cache_dir) {
  taxonomy.validate();
  const int k = taxonomy.size();
  const int d = cfg.embed_dim;
  LabelEmbeddingTable table;
  table.taxonomy = taxonomy;
  table.encoder_kind = kind;
  table.encoder_family = "";

  if (kind == LabelEncoderKind::RANDOM) {
    // Symmetric uniform with a fan-based range; recorded in config for
    // reproducibility.
    const double r = std::sqrt(6.0 / static_cast<double>(k + d));
    Rng rng(seed);
    table.matrix = Mat::NullaryExpr(k, d, [&](Index, Index) { return rng.uniform(-r, r); });
    return table;
  }

  const std::string family = [&] {
    switch (kind) {
      case LabelEncoderKind::PRETRAINED_A: return std::string("tiny-a");
      case LabelEncoderKind::PRETRAINED_B: return std::string("tiny-b");
      default: return cfg.input_encoder_family;
    }
  }();
  table.encoder_family = family;
  const TextEncoder enc = make_encoder(family, cfg.vocab_size, d, cache_dir);
  const Tokenizer tok(cfg.vocab_size);

  std::vector<Tokenizer::Encoded> batch;
  batch.reserve(k);
  for (const auto& l : taxonomy.labels) {
    switch (kind) {
      case LabelEncoderKind::DESCRIPTION: {
        if (!l.description || l.description->empty()) {
          throw ValidationError("label '" + l.name + "' has no description");
        }
        batch.push_back(
            tok.encode_pair(label_text(l.name), *l.description, cfg.max_len_arg1, cfg.max_len_arg2));
        break;
      }
      case LabelEncoderKind::HIERARCHY: {
        if (!l.hierarchy_path || l.hierarchy_path->empty()) {
          throw ValidationError("label '" + l.name + "' has no hierarchy path");
        }
        std::string path;
        for (const auto& level : *l.hierarchy_path) {
          if (!path.empty()) path += " ";
          path += label_text(level);
        }
        batch.push_back(tok.encode_single(path, cfg.max_len_arg1));
        break;
      }
      default:
        batch.push_back(tok.encode_single(label_text(l.name), cfg.max_len_arg1));
    }
  }
  table.matrix = encode_tokenized(enc, batch);
  return table;
}

}  // namespace relalign

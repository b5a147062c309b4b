#include <doctest.h>

#include <set>
#include <sstream>

#include "relalign/encoder.hpp"
#include "relalign/math.hpp"
#include "relalign/rng.hpp"
#include "test_util.hpp"

using namespace relalign;

namespace {

ExperimentConfig small_config(int d = 16, int vocab = 128) {
  ExperimentConfig cfg;
  cfg.embed_dim = d;
  cfg.vocab_size = vocab;
  cfg.max_len_arg1 = 8;
  cfg.max_len_arg2 = 8;
  return cfg;
}

}  // namespace

TEST_CASE("tokenizer basics") {
  const Tokenizer tok(64);
  const auto ids = tok.tokenize("Hello, WORLD hello");
  REQUIRE(ids.size() == 3);
  CHECK(ids[0] == ids[2]);  // case-insensitive
  CHECK(ids[0] >= 2);       // marker ids reserved

  const auto pair = tok.encode_pair("one two three", "four", 2, 8);
  // start + 2 truncated arg1 tokens + sep + 1 arg2 token + sep
  REQUIRE(pair.ids.size() == 6);
  CHECK(pair.ids[0] == Tokenizer::kStart);
  CHECK(pair.ids[3] == Tokenizer::kSep);
  CHECK(pair.ids[5] == Tokenizer::kSep);
  CHECK(pair.segments == std::vector<int>{0, 0, 0, 0, 1, 1});
}

TEST_CASE("encoding is deterministic and respects the shape contract") {
  const auto cfg = small_config();
  const auto enc = make_encoder("tiny-a", cfg.vocab_size, cfg.embed_dim);
  const Tokenizer tok(cfg.vocab_size);

  const std::vector<std::pair<std::string, std::string>> batch = {
      {"the quick brown fox", "jumped over it"},
      {"the quick brown fox jumps higher and higher and higher still", "jumped over it"},
  };
  const Mat a = encode_inputs(enc, tok, batch, cfg.max_len_arg1, cfg.max_len_arg2);
  const Mat b = encode_inputs(enc, tok, batch, cfg.max_len_arg1, cfg.max_len_arg2);
  CHECK(a == b);                      // repeat encoding is identical
  CHECK(a.cols() == cfg.embed_dim);   // truncation keeps the dimension
  CHECK(a.rows() == 2);
  CHECK(a.allFinite());

  CHECK_THROWS_AS(encode_inputs(enc, tok, {}, 8, 8), ValidationError);
}

TEST_CASE("shared arg1 with different arg2 separates representations") {
  const auto cfg = small_config();
  const auto enc = make_encoder("tiny-a", cfg.vocab_size, cfg.embed_dim);
  const Tokenizer tok(cfg.vocab_size);
  Rng rng(42);
  const std::vector<std::string> words = {"alpha", "beta",  "gamma", "delta", "omega",
                                          "kappa", "sigma", "theta", "zeta",  "iota"};
  int distinct = 0, total = 0;
  for (int trial = 0; trial < 50; ++trial) {
    auto sample = [&] {
      std::string s;
      for (int w = 0; w < 4; ++w) s += words[rng.below(words.size())] + " ";
      return s;
    };
    const std::string shared = sample();
    const Mat x = encode_inputs(enc, tok, {{shared, sample()}, {shared, sample()}}, 8, 8);
    ++total;
    if ((x.row(0) - x.row(1)).norm() > 1e-9) ++distinct;
  }
  CHECK(distinct == total);
}

TEST_CASE("batch encoding is permutation-equivariant") {
  const auto cfg = small_config();
  const auto enc = make_encoder("tiny-b", cfg.vocab_size, cfg.embed_dim);
  const Tokenizer tok(cfg.vocab_size);
  const std::vector<std::pair<std::string, std::string>> batch = {
      {"first pair left", "right"}, {"second pair", "other side"}, {"third", "words here"}};
  std::vector<std::pair<std::string, std::string>> shuffled = {batch[2], batch[0], batch[1]};
  const Mat x = encode_inputs(enc, tok, batch, 8, 8);
  const Mat y = encode_inputs(enc, tok, shuffled, 8, 8);
  CHECK((y.row(0) - x.row(2)).norm() < 1e-12);
  CHECK((y.row(1) - x.row(0)).norm() < 1e-12);
  CHECK((y.row(2) - x.row(1)).norm() < 1e-12);
}

TEST_CASE("encoder families are deterministic and distinct") {
  const auto a1 = make_encoder("tiny-a", 64, 8);
  const auto a2 = make_encoder("tiny-a", 64, 8);
  const auto b = make_encoder("tiny-b", 64, 8);
  CHECK(a1.token_emb == a2.token_emb);
  CHECK(a1.mixer == a2.mixer);
  CHECK(a1.token_emb != b.token_emb);
}

TEST_CASE("encoder checkpoint round-trip preserves outputs") {
  const auto enc = make_encoder("tiny-a", 64, 8);
  std::stringstream buf;
  save_encoder(enc, buf);
  const auto back = load_encoder(buf);
  CHECK(back.token_emb == enc.token_emb);
  CHECK(back.segment_emb == enc.segment_emb);
  CHECK(back.mixer == enc.mixer);
  CHECK(back.bias == enc.bias);

  std::stringstream junk("not a checkpoint at all");
  CHECK_THROWS_AS(load_encoder(junk), ValidationError);
}

TEST_CASE("checkpoint cache directory overrides the seeded family") {
  const auto dir = testutil::temp_dir("ckpt");
  auto custom = make_encoder("tiny-a", 32, 4);
  custom.bias.setConstant(3.5);
  {
    std::ofstream out(dir + "/tiny-a.bin", std::ios::binary);
    save_encoder(custom, out);
  }
  const auto loaded = make_encoder("tiny-a", 32, 4, dir);
  CHECK(loaded.bias == custom.bias);
  // Mismatched dimensions are rejected rather than silently reseeded.
  CHECK_THROWS_AS(make_encoder("tiny-a", 32, 8, dir), ValidationError);
}

TEST_CASE("encoder backward matches finite differences") {
  const auto cfg = small_config(6, 32);
  auto enc = make_encoder("tiny-a", cfg.vocab_size, cfg.embed_dim);
  const Tokenizer tok(cfg.vocab_size);
  const std::vector<Tokenizer::Encoded> batch = {tok.encode_pair("aa bb cc", "dd ee", 8, 8),
                                                 tok.encode_pair("ff gg", "hh", 8, 8)};
  // Scalar objective: sum of squares of outputs.
  auto objective = [&] {
    const Mat x = encode_tokenized(enc, batch);
    return 0.5 * x.squaredNorm();
  };
  EncodeCache cache;
  const Mat x = encode_tokenized(enc, batch, &cache);
  EncoderGrads grads = EncoderGrads::zeros_like(enc);
  encoder_backward(enc, cache, x, grads);  // d(obj)/d(out) = out

  auto check = [&](Mat& param, const Mat& grad) {
    Rng rng(7);
    for (int probe = 0; probe < 20; ++probe) {
      const Index i = rng.below(param.rows());
      const Index j = rng.below(param.cols());
      const double orig = param(i, j);
      const double h = 1e-6;
      param(i, j) = orig + h;
      const double up = objective();
      param(i, j) = orig - h;
      const double down = objective();
      param(i, j) = orig;
      const double numeric = (up - down) / (2 * h);
      CHECK(std::abs(numeric - grad(i, j)) <
            1e-4 * std::max({1.0, std::abs(numeric), std::abs(grad(i, j))}));
    }
  };
  check(enc.token_emb, grads.token_emb);
  check(enc.segment_emb, grads.segment_emb);
  check(enc.mixer, grads.mixer);
}

TEST_CASE("label table initialization variants") {
  auto cfg = small_config();
  auto tax = testutil::tiny_taxonomy(4);

  SUBCASE("random tables are seeded and bounded") {
    const auto t1 = init_label_table(tax, LabelEncoderKind::RANDOM, cfg, 9);
    const auto t2 = init_label_table(tax, LabelEncoderKind::RANDOM, cfg, 9);
    const auto t3 = init_label_table(tax, LabelEncoderKind::RANDOM, cfg, 10);
    CHECK(t1.matrix == t2.matrix);
    CHECK(t1.matrix != t3.matrix);
    const double bound = std::sqrt(6.0 / (4 + cfg.embed_dim));
    CHECK(t1.matrix.cwiseAbs().maxCoeff() <= bound);
    CHECK(t1.matrix.rows() == 4);
    CHECK(t1.matrix.cols() == cfg.embed_dim);
  }

  SUBCASE("pretrained kinds re-encode label text reproducibly") {
    const auto t1 = init_label_table(tax, LabelEncoderKind::PRETRAINED_B, cfg, 1);
    const auto t2 = init_label_table(tax, LabelEncoderKind::PRETRAINED_B, cfg, 999);
    CHECK(t1.matrix == t2.matrix);  // seed-independent
    CHECK(t1.encoder_family == "tiny-b");
    const auto ta = init_label_table(tax, LabelEncoderKind::PRETRAINED_A, cfg, 1);
    CHECK(ta.matrix != t1.matrix);
  }

  SUBCASE("hierarchy separators in names become spaces") {
    CHECK(label_text("Contingency.Cause") == "contingency cause");
    CHECK(label_text("Expansion.Level-of-detail") == "expansion level-of-detail");
  }

  SUBCASE("description kind requires every description") {
    tax.labels[0].description = "first relation kind";
    CHECK_THROWS_WITH_AS(init_label_table(tax, LabelEncoderKind::DESCRIPTION, cfg, 1),
                         doctest::Contains("label-1"), ValidationError);
    for (auto& l : tax.labels) l.description = "a description of " + l.name;
    CHECK_NOTHROW(init_label_table(tax, LabelEncoderKind::DESCRIPTION, cfg, 1));
  }

  SUBCASE("hierarchy kind requires paths") {
    CHECK_THROWS_AS(init_label_table(tax, LabelEncoderKind::HIERARCHY, cfg, 1), ValidationError);
    for (std::size_t i = 0; i < tax.labels.size(); ++i) {
      tax.labels[i].hierarchy_path =
          std::vector<std::string>{"group-" + std::to_string(i / 2), tax.labels[i].name};
    }
    const auto t = init_label_table(tax, LabelEncoderKind::HIERARCHY, cfg, 1);
    CHECK(t.matrix.rows() == 4);
  }

  SUBCASE("duplicate label names are rejected upstream") {
    tax.labels[1].name = tax.labels[0].name;
    CHECK_THROWS_AS(init_label_table(tax, LabelEncoderKind::RANDOM, cfg, 1), ValidationError);
  }
}

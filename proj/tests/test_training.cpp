#include <doctest.h>

#include <algorithm>
#include <map>

#include "relalign/dataset_io.hpp"
#include "relalign/eval.hpp"
#include "relalign/synthetic.hpp"
#include "relalign/trainer.hpp"
#include "test_util.hpp"

using namespace relalign;
using namespace relalign::train;

namespace {

ExperimentConfig synthetic_config() {
  ExperimentConfig cfg;
  cfg.embed_dim = 24;
  cfg.vocab_size = 512;
  cfg.max_len_arg1 = 16;
  cfg.max_len_arg2 = 16;
  cfg.batch_size = 16;
  cfg.learning_rate = 0.02;
  cfg.lr_explicit = true;
  cfg.max_epochs = 10;
  cfg.early_stop_patience = 6;
  cfg.seeds = {1};
  cfg.label_encoder_kind = LabelEncoderKind::RANDOM;
  return cfg;
}

struct Corpus {
  DatasetSplits splits;
  RelationTaxonomy taxonomy;
};

Corpus synthetic_corpus(int classes = 4, int train_pc = 50, int dev_pc = 10, int test_pc = 10,
                        std::uint64_t seed = 7) {
  const auto corpus =
      ingest::generate_synthetic_corpus(classes, train_pc + dev_pc + test_pc, seed);
  Corpus out;
  out.taxonomy = corpus.taxonomy;
  const auto& all = corpus.instances;
  const int n_train = classes * train_pc, n_dev = classes * dev_pc;
  out.splits.train.assign(all.begin(), all.begin() + n_train);
  out.splits.dev.assign(all.begin() + n_train, all.begin() + n_train + n_dev);
  out.splits.test.assign(all.begin() + n_train + n_dev, all.end());
  return out;
}

/// Independent separability oracle: bag-of-words nearest centroid, no shared
/// code with the encoder path.
double nearest_centroid_accuracy(const std::vector<RelationInstance>& train,
                                 const std::vector<RelationInstance>& eval_set, int k) {
  std::map<std::string, int> vocab;
  auto featurize = [&vocab](const RelationInstance& inst, bool grow) {
    std::map<int, double> feats;
    std::string word;
    for (const std::string* arg : {&inst.arg1, &inst.arg2}) {
      for (char c : *arg + std::string(" ")) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
          word += static_cast<char>(std::tolower(c));
        } else if (!word.empty()) {
          auto it = vocab.find(word);
          if (it == vocab.end() && grow) {
            it = vocab.emplace(word, static_cast<int>(vocab.size())).first;
          }
          if (it != vocab.end()) feats[it->second] += 1;
          word.clear();
        }
      }
    }
    return feats;
  };
  std::vector<std::map<int, double>> centroids(k);
  std::vector<int> counts(k, 0);
  for (const auto& inst : train) {
    for (const auto& [f, v] : featurize(inst, true)) centroids[inst.label][f] += v;
    ++counts[inst.label];
  }
  for (int c = 0; c < k; ++c) {
    for (auto& [f, v] : centroids[c]) v /= std::max(counts[c], 1);
  }
  int correct = 0;
  for (const auto& inst : eval_set) {
    const auto feats = featurize(inst, false);
    int best = 0;
    double best_dist = 1e300;
    for (int c = 0; c < k; ++c) {
      double dist = 0;
      for (const auto& [f, v] : feats) {
        const auto it = centroids[c].find(f);
        const double cv = it == centroids[c].end() ? 0.0 : it->second;
        dist += (v - cv) * (v - cv);
      }
      for (const auto& [f, cv] : centroids[c]) {
        if (!feats.count(f)) dist += cv * cv;
      }
      if (dist < best_dist) {
        best_dist = dist;
        best = c;
      }
    }
    if (best == inst.label) ++correct;
  }
  return static_cast<double>(correct) / eval_set.size();
}

double dev_accuracy(const TrainedArtifact& artifact, const DatasetSplits& splits) {
  const auto preds = model_predict(artifact, encode_dataset(artifact, splits.dev));
  int correct = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i] == splits.dev[i].label) ++correct;
  }
  return static_cast<double>(correct) / preds.size();
}

}  // namespace

TEST_CASE("aggregate mean and sample standard deviation") {
  auto result = [](double acc) {
    SeedResult r;
    r.metrics.accuracy = acc;
    r.metrics.macro_f1 = acc;
    r.metrics.leq = acc;
    return r;
  };
  SUBCASE("60/62/64 gives mean 62 and std 2") {
    const auto rep = aggregate({result(0.60), result(0.62), result(0.64)});
    CHECK(rep.mean_accuracy == doctest::Approx(0.62));
    CHECK(rep.std_accuracy == doctest::Approx(0.02));
    CHECK_FALSE(rep.single_run);
  }
  SUBCASE("identical seeds give zero std") {
    const auto rep = aggregate({result(0.5), result(0.5), result(0.5)});
    CHECK(rep.std_accuracy == 0.0);
    CHECK(rep.std_leq == 0.0);
  }
  SUBCASE("a single seed is flagged") {
    const auto rep = aggregate({result(0.7)});
    CHECK(rep.single_run);
    CHECK(rep.std_accuracy == 0.0);
  }
}

TEST_CASE("early stopping stops after patience runs out") {
  auto corpus = synthetic_corpus(2, 8, 4, 4);
  auto cfg = synthetic_config();
  cfg.learning_rate = 1e-300;  // parameters never move, so dev loss never improves
  cfg.max_epochs = 5;
  cfg.early_stop_patience = 1;
  const auto run = train::train(cfg, corpus.splits, corpus.taxonomy, 3);
  CHECK(run.artifact.metrics.epochs_run == 2);
  CHECK(run.artifact.metrics.best_epoch == 1);
  CHECK(run.artifact.metrics.dev_losses.size() == 2);
}

TEST_CASE("training runs to max epochs when dev loss keeps improving") {
  auto corpus = synthetic_corpus(2, 10, 4, 4);
  auto cfg = synthetic_config();
  cfg.max_epochs = 4;
  const auto run = train::train(cfg, corpus.splits, corpus.taxonomy, 3);
  CHECK(run.artifact.metrics.epochs_run <= 4);
  CHECK(run.artifact.metrics.dev_losses.size() ==
        static_cast<std::size_t>(run.artifact.metrics.epochs_run));
}

TEST_CASE("same seed reproduces the final label table exactly") {
  const auto corpus = synthetic_corpus(3, 12, 4, 4);
  auto cfg = synthetic_config();
  cfg.max_epochs = 3;
  const auto a = train::train(cfg, corpus.splits, corpus.taxonomy, 11);
  const auto b = train::train(cfg, corpus.splits, corpus.taxonomy, 11);
  CHECK(a.artifact.label_table == b.artifact.label_table);
  CHECK(a.artifact.encoder.token_emb == b.artifact.encoder.token_emb);
  const auto c = train::train(cfg, corpus.splits, corpus.taxonomy, 12);
  CHECK(a.artifact.label_table != c.artifact.label_table);
}

TEST_CASE("synthetic corpus end-to-end with the full objective") {
  const auto corpus = synthetic_corpus();  // 200/40/40 over 4 classes
  // The corpus must be separable by construction: an encoder-free
  // nearest-centroid reference already clears the bar.
  CHECK(nearest_centroid_accuracy(corpus.splits.train, corpus.splits.dev, 4) >= 0.95);

  const auto cfg = synthetic_config();
  const auto run = train::train(cfg, corpus.splits, corpus.taxonomy, 1);
  CHECK(run.artifact.metrics.epochs_run <= 10);
  CHECK(dev_accuracy(run.artifact, corpus.splits) >= 0.95);
  CHECK(run.artifact.metrics.accuracy >= 0.95);
  REQUIRE(run.artifact.metrics.leq.has_value());
  CHECK(*run.artifact.metrics.leq >= 0.90);

  SUBCASE("gradient clipping bounds every logged step") {
    for (const auto& rec : run.log) {
      CHECK(rec.grad_norm <= cfg.grad_clip_norm + 1e-6);
    }
    CHECK(run.log.size() >= 10);
  }

  SUBCASE("stored metrics match re-evaluation after a round-trip") {
    const auto dir = testutil::temp_dir("selfcheck");
    save_artifact(run.artifact, dir, run.log);
    const auto loaded = load_artifact(dir);
    const auto again = evaluate_artifact(loaded, corpus.splits);
    CHECK(std::abs(again.accuracy - run.artifact.metrics.accuracy) < 1e-6);
    CHECK(std::abs(again.macro_f1 - run.artifact.metrics.macro_f1) < 1e-6);
    REQUIRE(again.leq.has_value());
    CHECK(std::abs(*again.leq - *run.artifact.metrics.leq) < 1e-6);
  }
}

TEST_CASE("classifier baseline") {
  const auto corpus = synthetic_corpus();
  auto cfg = synthetic_config();

  const auto run = train_baseline_classifier(cfg, corpus.splits, corpus.taxonomy, 1);
  CHECK(run.artifact.kind == ModelKind::CLASSIFIER);
  CHECK(run.artifact.config.loss_toggles.describe() == "ice");
  CHECK_FALSE(run.artifact.has_label_table());
  CHECK(run.artifact.metrics.accuracy >= 0.95);
  // The head rows stand in for label embeddings, so a quality score exists.
  CHECK(effective_label_vectors(run.artifact).rows() == 4);
  CHECK(run.artifact.metrics.leq.has_value());

  SUBCASE("ice-only training follows the exact same trajectory") {
    auto ice_cfg = cfg;
    ice_cfg.loss_toggles = toggles_from_string("ice");
    const auto direct = train::train(ice_cfg, corpus.splits, corpus.taxonomy, 1, ModelKind::CLASSIFIER);
    CHECK(direct.artifact.head_w == run.artifact.head_w);
    CHECK(direct.artifact.head_b == run.artifact.head_b);
    CHECK(direct.artifact.metrics.accuracy == run.artifact.metrics.accuracy);
  }

  SUBCASE("default baseline learning rate applies when none was given") {
    auto implicit = cfg;
    implicit.lr_explicit = false;
    implicit.max_epochs = 1;
    const auto r = train_baseline_classifier(implicit, corpus.splits, corpus.taxonomy, 1);
    CHECK(r.artifact.config.learning_rate == 5e-5);
  }
}

TEST_CASE("label-embedding baseline") {
  const auto corpus = synthetic_corpus();
  auto cfg = synthetic_config();
  const auto run = train_baseline_labelemb(cfg, corpus.splits, corpus.taxonomy, 1);
  CHECK(run.artifact.kind == ModelKind::LABELEMB_BASELINE);
  CHECK(run.artifact.config.loss_toggles.describe() == "icl");
  CHECK(run.artifact.has_label_table());
  CHECK(run.artifact.metrics.accuracy >= 0.90);
}

TEST_CASE("hierarchy-aware training runs on a hierarchical taxonomy") {
  const auto corpus = synthetic_corpus(4, 20, 5, 5);
  auto cfg = synthetic_config();
  cfg.label_encoder_kind = LabelEncoderKind::HIERARCHY;
  cfg.max_epochs = 3;
  const auto run = train::train(cfg, corpus.splits, corpus.taxonomy, 2);
  CHECK(run.artifact.metrics.accuracy > 0.0);
  for (const auto& rec : run.log) CHECK(std::isfinite(rec.total));
}

TEST_CASE("multi-seed runs aggregate and fail loudly when everything fails") {
  const auto corpus = synthetic_corpus(2, 10, 4, 4);
  auto cfg = synthetic_config();
  cfg.max_epochs = 2;
  cfg.seeds = {1, 2, 3};
  const auto multi = run_multi_seed(cfg, corpus.splits, corpus.taxonomy);
  CHECK(multi.runs.size() == 3);
  CHECK(multi.report.per_seed.size() == 3);
  CHECK(multi.report.failures.empty());

  DatasetSplits broken = corpus.splits;
  broken.dev.clear();
  CHECK_THROWS_AS(run_multi_seed(cfg, broken, corpus.taxonomy), RuntimeFailure);
}

TEST_CASE("divergence aborts with diagnostics") {
  const auto corpus = synthetic_corpus(2, 10, 4, 4);
  auto cfg = synthetic_config();
  cfg.learning_rate = 1e300;
  cfg.max_epochs = 3;
  CHECK_THROWS_AS(train::train(cfg, corpus.splits, corpus.taxonomy, 1), RuntimeFailure);
}

TEST_CASE("training rejects empty splits and single-toggle misuse") {
  const auto corpus = synthetic_corpus(2, 6, 2, 2);
  auto cfg = synthetic_config();
  DatasetSplits no_train;
  no_train.dev = corpus.splits.dev;
  CHECK_THROWS_AS(train::train(cfg, no_train, corpus.taxonomy, 1), ValidationError);

  // The classifier path refuses contrastive toggles.
  CHECK_THROWS_AS(train::train(cfg, corpus.splits, corpus.taxonomy, 1, ModelKind::CLASSIFIER),
                  ValidationError);
}

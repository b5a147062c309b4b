#include "relalign/trainer.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "relalign/eval.hpp"
#include "relalign/losses.hpp"
#include "relalign/math.hpp"
#include "relalign/optimizer.hpp"
#include "relalign/rng.hpp"

namespace relalign::train {

namespace {

struct Model {
  TextEncoder encoder;
  Mat table;   // empty for the classifier baseline
  Mat head_w;  // empty when ice is off
  Vec head_b;
};

std::vector<int> gold_labels(const std::vector<RelationInstance>& data) {
  std::vector<int> out(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) out[i] = data[i].label;
  return out;
}

/// Fixed parameter order shared by views, sizes and gradient flattening:
/// token_emb, segment_emb, mixer, bias, [table], [head_w, head_b].
std::vector<ParamView> param_views(Model& m) {
  std::vector<ParamView> v;
  v.emplace_back(m.encoder.token_emb.data(), m.encoder.token_emb.size());
  v.emplace_back(m.encoder.segment_emb.data(), m.encoder.segment_emb.size());
  v.emplace_back(m.encoder.mixer.data(), m.encoder.mixer.size());
  v.emplace_back(m.encoder.bias.data(), m.encoder.bias.size());
  if (m.table.size()) v.emplace_back(m.table.data(), m.table.size());
  if (m.head_w.size()) {
    v.emplace_back(m.head_w.data(), m.head_w.size());
    v.emplace_back(m.head_b.data(), m.head_b.size());
  }
  return v;
}

std::vector<Eigen::ArrayXd> flatten_grads(const EncoderGrads& eg, const Mat& d_table,
                                          const Mat& d_head_w, const Vec& d_head_b,
                                          bool has_table, bool has_head) {
  std::vector<Eigen::ArrayXd> g;
  auto push = [&g](const double* data, Index n) {
    g.emplace_back(Eigen::Map<const Eigen::ArrayXd>(data, n));
  };
  push(eg.token_emb.data(), eg.token_emb.size());
  push(eg.segment_emb.data(), eg.segment_emb.size());
  push(eg.mixer.data(), eg.mixer.size());
  push(eg.bias.data(), eg.bias.size());
  if (has_table) push(d_table.data(), d_table.size());
  if (has_head) {
    push(d_head_w.data(), d_head_w.size());
    push(d_head_b.data(), d_head_b.size());
  }
  return g;
}

struct BatchLosses {
  losses::LossBreakdown bd;
};

/// Loss composition for one batch. For hierarchy-aware training the two-level
/// contrastive term replaces the flat icl + lcl pair; its value is logged in
/// the icl slot.
losses::LossBreakdown batch_losses(const ExperimentConfig& cfg, const RelationTaxonomy& taxonomy,
                                   const Mat& X, const std::vector<int>& labels, const Mat& table,
                                   const Mat& logits, bool use_hier) {
  const LossToggles& t = cfg.loss_toggles;
  if (!use_hier) {
    if (table.size()) {
      losses::BatchTensors batch{X, labels, table, cfg.temperature};
      return losses::total_loss(batch, logits, t, cfg.lcl_include_positives);
    }
    // Classifier path: only ice is defined without a table.
    losses::LossBreakdown bd;
    bd.d_inputs = Mat::Zero(X.rows(), X.cols());
    auto r = losses::ice_loss(logits, labels);
    bd.ice = r.value;
    bd.total = r.value;
    bd.d_logits = std::move(r.d_logits);
    return bd;
  }

  losses::LossBreakdown bd;
  bd.d_inputs = Mat::Zero(X.rows(), X.cols());
  bd.d_table = Mat::Zero(table.rows(), table.cols());
  losses::BatchTensors batch{X, labels, table, cfg.temperature};
  if (t.icl || t.lcl) {
    auto h = losses::hier_loss(batch, taxonomy, cfg.hier_penalties);
    bd.icl = h.value;
    bd.lcl_single_class = h.single_class;
    bd.d_inputs += h.d_inputs;
    bd.d_table += h.d_table;
  }
  if (t.lec) {
    auto r = losses::lec_loss(table, cfg.temperature);
    bd.lec = r.value;
    bd.d_table += r.d_table;
  }
  if (t.ice) {
    auto r = losses::ice_loss(logits, labels);
    bd.ice = r.value;
    bd.d_logits = std::move(r.d_logits);
  }
  bd.total = bd.icl + bd.lcl + bd.lec + bd.ice;
  return bd;
}

}  // namespace

TrainRun train(const ExperimentConfig& cfg_in, const DatasetSplits& splits,
               const RelationTaxonomy& taxonomy, std::uint64_t seed, ModelKind kind,
               const std::string& checkpoint_dir) {
  ExperimentConfig cfg = cfg_in;
  cfg.validate();
  taxonomy.validate();
  if (splits.train.empty() || splits.dev.empty()) {
    throw ValidationError("train: non-empty train and dev splits are required");
  }
  for (const auto& inst : splits.train) inst.validate(taxonomy);
  for (const auto& inst : splits.dev) inst.validate(taxonomy);
  for (const auto& inst : splits.test) inst.validate(taxonomy);

  if (kind == ModelKind::CLASSIFIER) {
    if (!(cfg.loss_toggles.ice && !cfg.loss_toggles.icl && !cfg.loss_toggles.lcl &&
          !cfg.loss_toggles.lec)) {
      throw ValidationError("classifier baseline requires the ice toggle alone");
    }
  }
  if (kind == ModelKind::LABELEMB_BASELINE) {
    if (!(cfg.loss_toggles.icl && !cfg.loss_toggles.lcl && !cfg.loss_toggles.lec &&
          !cfg.loss_toggles.ice)) {
      throw ValidationError("label-embedding baseline uses its softmax objective alone");
    }
  }

  const int k = taxonomy.size();
  const int d = cfg.embed_dim;
  const bool use_hier =
      kind == ModelKind::LABEL_EMBEDDING && cfg.label_encoder_kind == LabelEncoderKind::HIERARCHY;

  Model model;
  model.encoder = make_encoder(cfg.input_encoder_family, cfg.vocab_size, d, checkpoint_dir);
  std::string label_family;
  if (kind != ModelKind::CLASSIFIER) {
    LabelEmbeddingTable table =
        init_label_table(taxonomy, cfg.label_encoder_kind, cfg, seed, checkpoint_dir);
    model.table = std::move(table.matrix);
    label_family = table.encoder_family;
  }
  if (cfg.loss_toggles.ice) {
    model.head_w = Mat::Zero(k, d);
    model.head_b = Vec::Zero(k);
  }

  const Tokenizer tok(cfg.vocab_size);
  auto tokenize_all = [&](const std::vector<RelationInstance>& data) {
    std::vector<Tokenizer::Encoded> out;
    out.reserve(data.size());
    for (const auto& inst : data) {
      out.push_back(tok.encode_pair(inst.arg1, inst.arg2, cfg.max_len_arg1, cfg.max_len_arg2));
    }
    return out;
  };
  const auto train_tokens = tokenize_all(splits.train);
  const auto dev_tokens = tokenize_all(splits.dev);
  const std::vector<int> train_golds = gold_labels(splits.train);
  const std::vector<int> dev_golds = gold_labels(splits.dev);

  auto forward = [&](const Model& m, const std::vector<Tokenizer::Encoded>& toks,
                     const std::vector<int>& golds, Index lo, Index hi, EncodeCache* cache,
                     Mat& X, Mat& logits, std::vector<int>& labels) {
    std::vector<Tokenizer::Encoded> batch(toks.begin() + lo, toks.begin() + hi);
    labels.assign(golds.begin() + lo, golds.begin() + hi);
    X = encode_tokenized(m.encoder, batch, cache);
    if (cfg.loss_toggles.ice) {
      logits = X * m.head_w.transpose();
      logits.rowwise() += m.head_b.transpose();
    } else {
      logits.resize(0, 0);
    }
  };

  auto split_loss = [&](const Model& m, const std::vector<Tokenizer::Encoded>& toks,
                        const std::vector<int>& golds) {
    double sum = 0;
    int batches = 0;
    const Index n = static_cast<Index>(toks.size());
    for (Index lo = 0; lo < n; lo += cfg.batch_size) {
      const Index hi = std::min<Index>(lo + cfg.batch_size, n);
      Mat X, logits;
      std::vector<int> labels;
      forward(m, toks, golds, lo, hi, nullptr, X, logits, labels);
      sum += batch_losses(cfg, taxonomy, X, labels, m.table, logits, use_hier).total;
      ++batches;
    }
    return sum / std::max(batches, 1);
  };

  std::vector<ParamView> params = param_views(model);
  std::vector<Index> sizes;
  for (const auto& p : params) sizes.push_back(p.size());
  AdamW optimizer(sizes,
                  {cfg.learning_rate, 0.9, 0.999, 1e-8, cfg.weight_decay});

  Rng order_rng(seed ^ 0x5eedbeefULL);
  std::vector<Index> order(train_tokens.size());
  std::iota(order.begin(), order.end(), 0);

  TrainRun run;
  Model best = model;
  double best_dev = std::numeric_limits<double>::infinity();
  int best_epoch = 0;
  int patience_left = cfg.early_stop_patience;
  int step = 0;
  int epochs_run = 0;
  std::vector<double> dev_losses;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    epochs_run = epoch;
    order_rng.shuffle(order);
    const Index n = static_cast<Index>(order.size());
    for (Index lo = 0; lo < n; lo += cfg.batch_size) {
      const Index hi = std::min<Index>(lo + cfg.batch_size, n);
      std::vector<Tokenizer::Encoded> batch_toks;
      std::vector<int> labels;
      batch_toks.reserve(hi - lo);
      for (Index i = lo; i < hi; ++i) {
        batch_toks.push_back(train_tokens[order[i]]);
        labels.push_back(train_golds[order[i]]);
      }
      EncodeCache cache;
      Mat X = encode_tokenized(model.encoder, batch_toks, &cache);
      Mat logits;
      if (cfg.loss_toggles.ice) {
        logits = X * model.head_w.transpose();
        logits.rowwise() += model.head_b.transpose();
      }

      losses::LossBreakdown bd =
          batch_losses(cfg, taxonomy, X, labels, model.table, logits, use_hier);
      ++step;
      if (!std::isfinite(bd.total)) {
        std::ostringstream msg;
        msg << "training diverged at epoch " << epoch << " step " << step << ": icl=" << bd.icl
            << " lcl=" << bd.lcl << " lec=" << bd.lec << " ice=" << bd.ice;
        throw RuntimeFailure(msg.str());
      }

      Mat d_inputs = bd.d_inputs;
      Mat d_head_w;
      Vec d_head_b;
      if (cfg.loss_toggles.ice) {
        d_inputs += bd.d_logits * model.head_w;
        d_head_w = bd.d_logits.transpose() * X;
        d_head_b = bd.d_logits.colwise().sum().transpose();
      }
      EncoderGrads eg = EncoderGrads::zeros_like(model.encoder);
      encoder_backward(model.encoder, cache, d_inputs, eg);

      std::vector<Eigen::ArrayXd> grads = flatten_grads(
          eg, bd.d_table, d_head_w, d_head_b, model.table.size() > 0, cfg.loss_toggles.ice);
      clip_global_norm(grads, cfg.grad_clip_norm);
      const double post_norm = global_norm(grads);
      optimizer.step(params, grads);

      StepRecord rec;
      rec.step = step;
      rec.epoch = epoch;
      rec.icl = bd.icl;
      rec.lcl = bd.lcl;
      rec.lec = bd.lec;
      rec.ice = bd.ice;
      rec.total = bd.total;
      rec.grad_norm = post_norm;
      run.log.push_back(rec);
    }

    const double dev_loss = split_loss(model, dev_tokens, dev_golds);
    if (!std::isfinite(dev_loss)) {
      throw RuntimeFailure("training diverged: non-finite dev loss at epoch " +
                           std::to_string(epoch));
    }
    dev_losses.push_back(dev_loss);
    if (dev_loss < best_dev) {
      best_dev = dev_loss;
      best = model;
      best_epoch = epoch;
      patience_left = cfg.early_stop_patience;
    } else {
      --patience_left;
      if (patience_left <= 0) break;
    }
  }

  TrainedArtifact artifact;
  artifact.config = cfg;
  artifact.taxonomy = taxonomy;
  artifact.kind = kind;
  artifact.encoder = std::move(best.encoder);
  artifact.label_table = std::move(best.table);
  artifact.head_w = std::move(best.head_w);
  artifact.head_b = std::move(best.head_b);
  artifact.seed = seed;
  artifact.label_encoder_kind = cfg.label_encoder_kind;
  artifact.label_encoder_family = label_family;

  artifact.metrics = splits.test.empty() ? MetricsReport{} : evaluate_artifact(artifact, splits);
  artifact.metrics.dev_losses = dev_losses;
  artifact.metrics.best_epoch = best_epoch;
  artifact.metrics.epochs_run = epochs_run;
  run.artifact = std::move(artifact);
  return run;
}

TrainRun train_baseline_classifier(const ExperimentConfig& cfg, const DatasetSplits& splits,
                                   const RelationTaxonomy& taxonomy, std::uint64_t seed,
                                   const std::string& checkpoint_dir) {
  ExperimentConfig c = cfg;
  c.loss_toggles = LossToggles{false, false, false, true};
  if (!c.lr_explicit) c.learning_rate = 5e-5;
  return train(c, splits, taxonomy, seed, ModelKind::CLASSIFIER, checkpoint_dir);
}

TrainRun train_baseline_labelemb(const ExperimentConfig& cfg, const DatasetSplits& splits,
                                 const RelationTaxonomy& taxonomy, std::uint64_t seed,
                                 const std::string& checkpoint_dir) {
  ExperimentConfig c = cfg;
  c.loss_toggles = LossToggles{true, false, false, false};
  return train(c, splits, taxonomy, seed, ModelKind::LABELEMB_BASELINE, checkpoint_dir);
}

AggregateReport aggregate(const std::vector<SeedResult>& results,
                          const std::vector<std::string>& failures) {
  AggregateReport rep;
  rep.per_seed = results;
  rep.failures = failures;
  rep.single_run = results.size() == 1;
  if (results.empty()) return rep;

  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0;
    for (double x : xs) mean += x;
    mean /= xs.size();
    double var = 0;
    if (xs.size() > 1) {
      for (double x : xs) var += (x - mean) * (x - mean);
      var /= (xs.size() - 1);
    }
    return std::pair<double, double>{mean, std::sqrt(var)};
  };

  std::vector<double> acc, f1, leq;
  for (const auto& r : results) {
    acc.push_back(r.metrics.accuracy);
    f1.push_back(r.metrics.macro_f1);
    if (r.metrics.leq) leq.push_back(*r.metrics.leq);
  }
  std::tie(rep.mean_accuracy, rep.std_accuracy) = mean_std(acc);
  std::tie(rep.mean_macro_f1, rep.std_macro_f1) = mean_std(f1);
  if (!leq.empty() && leq.size() == results.size()) {
    std::tie(rep.mean_leq, rep.std_leq) = mean_std(leq);
    rep.leq_available = true;
  }
  return rep;
}

MultiSeedRun run_multi_seed(const ExperimentConfig& cfg, const DatasetSplits& splits,
                            const RelationTaxonomy& taxonomy, ModelKind kind,
                            const std::string& checkpoint_dir) {
  if (cfg.seeds.empty()) throw ValidationError("run_multi_seed: at least one seed required");
  MultiSeedRun out;
  std::vector<SeedResult> results;
  std::vector<std::string> failures;
  for (std::uint64_t seed : cfg.seeds) {
    try {
      TrainRun run = kind == ModelKind::CLASSIFIER
                         ? train_baseline_classifier(cfg, splits, taxonomy, seed, checkpoint_dir)
                     : kind == ModelKind::LABELEMB_BASELINE
                         ? train_baseline_labelemb(cfg, splits, taxonomy, seed, checkpoint_dir)
                         : train(cfg, splits, taxonomy, seed, kind, checkpoint_dir);
      results.push_back(SeedResult{seed, run.artifact.metrics});
      out.runs.push_back(std::move(run));
    } catch (const std::exception& e) {
      failures.push_back("seed " + std::to_string(seed) + ": " + e.what());
    }
  }
  if (out.runs.empty()) {
    std::string msg = "all seeds failed:";
    for (const auto& f : failures) msg += "\n  " + f;
    throw RuntimeFailure(msg);
  }
  out.report = aggregate(results, failures);
  return out;
}

MetricsReport evaluate_artifact(const TrainedArtifact& artifact, const DatasetSplits& splits) {
  if (splits.test.empty()) throw ValidationError("evaluate: empty test split");
  MetricsReport m;
  const int k = artifact.taxonomy.size();
  const Mat x_test = encode_dataset(artifact, splits.test);
  const std::vector<int> preds = model_predict(artifact, x_test);
  const std::vector<int> golds = gold_labels(splits.test);
  const auto cm = eval::classification_metrics(preds, golds, k);
  m.accuracy = cm.accuracy;
  m.macro_f1 = cm.macro_f1;

  const SplitId split = artifact.config.proxy_split;
  const std::vector<RelationInstance>& proxy_data =
      split == SplitId::TRAIN ? splits.train : split == SplitId::DEV ? splits.dev : splits.test;
  if (proxy_data.empty()) {
    m.notices.push_back("proxy split '" + to_string(split) + "' is empty; quality score skipped");
    return m;
  }
  const Mat x_proxy = split == SplitId::TEST ? x_test : encode_dataset(artifact, proxy_data);
  const auto proxies = eval::class_proxies(x_proxy, gold_labels(proxy_data), k, split);
  if (proxies.leakage_notice) {
    m.notices.push_back("class proxies computed on the test split (evaluation-on-test)");
  }
  const auto corr = eval::correlation_matrix(proxies, effective_label_vectors(artifact));
  int excluded = 0;
  for (bool e : corr.excluded) excluded += e ? 1 : 0;
  if (excluded > 0) {
    m.notices.push_back(std::to_string(excluded) +
                        " class(es) excluded from the quality score (absent or degenerate)");
  }
  try {
    m.leq = eval::leq_score(corr);
  } catch (const ValidationError& e) {
    m.notices.push_back(std::string("quality score unavailable: ") + e.what());
  }
  return m;
}

}  // namespace relalign::train

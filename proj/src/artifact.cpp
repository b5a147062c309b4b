#include "relalign/artifact.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "relalign/math.hpp"

namespace relalign {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::LABEL_EMBEDDING: return "label-embedding";
    case ModelKind::CLASSIFIER: return "classifier";
    default: return "labelemb-baseline";
  }
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "label-embedding") return ModelKind::LABEL_EMBEDDING;
  if (s == "classifier") return ModelKind::CLASSIFIER;
  if (s == "labelemb-baseline") return ModelKind::LABELEMB_BASELINE;
  throw ValidationError("unknown model kind: '" + s + "'");
}

void TrainedArtifact::validate() const {
  taxonomy.validate();
  if (has_label_table() && label_table.rows() != taxonomy.size()) {
    throw ValidationError("artifact: label table has " + std::to_string(label_table.rows()) +
                          " rows, taxonomy has " + std::to_string(taxonomy.size()) + " labels");
  }
  if (kind == ModelKind::CLASSIFIER) {
    if (head_w.rows() != taxonomy.size()) {
      throw ValidationError("artifact: classifier head has " + std::to_string(head_w.rows()) +
                            " rows, taxonomy has " + std::to_string(taxonomy.size()) + " labels");
    }
  } else if (!has_label_table()) {
    throw ValidationError("artifact: label-embedding model without a label table");
  }
}

void save_matrix_text(const Mat& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write matrix file: " + path);
  out << m.rows() << " " << m.cols() << "\n";
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      // 17 significant digits round-trip IEEE doubles exactly.
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << (j ? " " : "") << buf;
    }
    out << "\n";
  }
  if (!out) throw RuntimeFailure("write failed: " + path);
}

Mat load_matrix_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open matrix file: " + path);
  Index r = 0, c = 0;
  in >> r >> c;
  if (!in || r < 0 || c < 0) throw ValidationError("malformed matrix header in " + path);
  Mat m(r, c);
  for (Index i = 0; i < r; ++i) {
    for (Index j = 0; j < c; ++j) {
      if (!(in >> m(i, j))) {
        throw ValidationError("truncated matrix in " + path);
      }
    }
  }
  return m;
}

namespace {

json metrics_to_json(const TrainedArtifact& a) {
  json j;
  j["accuracy"] = a.metrics.accuracy;
  j["macro_f1"] = a.metrics.macro_f1;
  if (a.metrics.leq) {
    j["leq"] = *a.metrics.leq;
  } else {
    j["leq"] = nullptr;
  }
  j["dev_losses"] = a.metrics.dev_losses;
  j["best_epoch"] = a.metrics.best_epoch;
  j["epochs_run"] = a.metrics.epochs_run;
  j["notices"] = a.metrics.notices;
  j["seed"] = a.seed;
  j["model_kind"] = to_string(a.kind);
  j["label_encoder_kind"] = to_string(a.label_encoder_kind);
  j["label_encoder_family"] = a.label_encoder_family;
  j["input_encoder_family"] = a.config.input_encoder_family;
  return j;
}

void metrics_from_json(const json& j, TrainedArtifact& a) {
  a.metrics.accuracy = j.at("accuracy").get<double>();
  a.metrics.macro_f1 = j.at("macro_f1").get<double>();
  if (j.contains("leq") && !j["leq"].is_null()) {
    a.metrics.leq = j["leq"].get<double>();
  }
  a.metrics.dev_losses = j.value("dev_losses", std::vector<double>{});
  a.metrics.best_epoch = j.value("best_epoch", 0);
  a.metrics.epochs_run = j.value("epochs_run", 0);
  a.metrics.notices = j.value("notices", std::vector<std::string>{});
  a.seed = j.value("seed", std::uint64_t{0});
  a.kind = model_kind_from_string(j.at("model_kind").get<std::string>());
  a.label_encoder_kind = label_encoder_kind_from_string(j.at("label_encoder_kind").get<std::string>());
  a.label_encoder_family = j.value("label_encoder_family", "");
}

}  // namespace

void save_artifact(const TrainedArtifact& artifact, const std::string& dir,
                   const std::vector<StepRecord>& train_log) {
  artifact.validate();
  std::error_code ec;
  fs::create_directories(dir, ec);
  save_config(artifact.config, (fs::path(dir) / "config.ini").string());
  save_taxonomy(artifact.taxonomy, (fs::path(dir) / "taxonomy.json").string());
  if (artifact.has_label_table()) {
    save_matrix_text(artifact.label_table, (fs::path(dir) / "label_table.txt").string());
  }

  {
    const std::string path = (fs::path(dir) / "encoder.bin").string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw RuntimeFailure("cannot write checkpoint: " + path);
    save_encoder(artifact.encoder, out);
    if (!out) throw RuntimeFailure("write failed: " + path);
  }
  if (artifact.head_w.size() > 0) {
    save_matrix_text(artifact.head_w, (fs::path(dir) / "head.txt").string());
    save_matrix_text(artifact.head_b, (fs::path(dir) / "head_bias.txt").string());
  }

  {
    const std::string path = (fs::path(dir) / "metrics.json").string();
    std::ofstream out(path);
    if (!out) throw RuntimeFailure("cannot write metrics: " + path);
    out << metrics_to_json(artifact).dump(2) << "\n";
  }

  if (!train_log.empty()) {
    std::ofstream out((fs::path(dir) / "train_log.jsonl").string());
    for (const auto& rec : train_log) {
      json j;
      j["step"] = rec.step;
      j["epoch"] = rec.epoch;
      j["icl"] = rec.icl;
      j["lcl"] = rec.lcl;
      j["lec"] = rec.lec;
      j["ice"] = rec.ice;
      j["total"] = rec.total;
      j["grad_norm"] = rec.grad_norm;
      out << j.dump() << "\n";
    }
  }
}

TrainedArtifact load_artifact(const std::string& dir) {
  TrainedArtifact a;
  a.config = load_config((fs::path(dir) / "config.ini").string());
  a.taxonomy = load_taxonomy((fs::path(dir) / "taxonomy.json").string());

  const fs::path table_path = fs::path(dir) / "label_table.txt";
  if (fs::exists(table_path)) {
    a.label_table = load_matrix_text(table_path.string());
  }

  {
    const std::string path = (fs::path(dir) / "encoder.bin").string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open checkpoint: " + path);
    a.encoder = load_encoder(in);
  }
  const fs::path head_path = fs::path(dir) / "head.txt";
  if (fs::exists(head_path)) {
    a.head_w = load_matrix_text(head_path.string());
    a.head_b = load_matrix_text((fs::path(dir) / "head_bias.txt").string());
  }

  {
    const std::string path = (fs::path(dir) / "metrics.json").string();
    std::ifstream in(path);
    if (!in) throw RuntimeFailure("cannot open metrics: " + path);
    json j;
    in >> j;
    metrics_from_json(j, a);
  }

  a.validate();
  return a;
}

const Mat& effective_label_vectors(const TrainedArtifact& artifact) {
  if (artifact.has_label_table()) return artifact.label_table;
  if (artifact.head_w.size() == 0) {
    throw ValidationError("artifact has neither a label table nor a classifier head");
  }
  return artifact.head_w;
}

Mat encode_dataset(const TrainedArtifact& artifact, const std::vector<RelationInstance>& data) {
  if (data.empty()) throw ValidationError("encode_dataset: empty dataset");
  const Tokenizer tok(artifact.config.vocab_size);
  std::vector<Tokenizer::Encoded> batch;
  batch.reserve(data.size());
  for (const auto& inst : data) {
    batch.push_back(tok.encode_pair(inst.arg1, inst.arg2, artifact.config.max_len_arg1,
                                    artifact.config.max_len_arg2));
  }
  return encode_tokenized(artifact.encoder, batch);
}

Mat model_scores(const TrainedArtifact& artifact, const Mat& inputs) {
  if (artifact.kind == ModelKind::CLASSIFIER) {
    Mat logits = inputs * artifact.head_w.transpose();
    logits.rowwise() += artifact.head_b.transpose();
    return logits;
  }
  return cosine_rows(inputs, artifact.label_table) / artifact.config.temperature;
}

Mat model_distribution(const TrainedArtifact& artifact, const Mat& inputs) {
  return softmax_rows(model_scores(artifact, inputs));
}

std::vector<int> model_predict(const TrainedArtifact& artifact, const Mat& inputs) {
  const Mat scores = model_scores(artifact, inputs);
  std::vector<int> out(scores.rows());
  for (Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Index l = 1; l < scores.cols(); ++l) {
      if (scores(i, l) > scores(i, best)) best = static_cast<int>(l);
    }
    out[i] = best;
  }
  return out;
}

}  // namespace relalign

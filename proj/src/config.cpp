#include "relalign/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace relalign {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    double d = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not a number: '" + v + "'");
  }
}

int to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    int i = std::stoi(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return i;
  } catch (const std::exception&) {
    throw ValidationError("config key '" + key + "': not an integer: '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  const std::string s = lower(v);
  if (s == "true" || s == "on" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "off" || s == "0" || s == "no") return false;
  throw ValidationError("config key '" + key + "': not a boolean: '" + v + "'");
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string to_string(LabelEncoderKind k) {
  switch (k) {
    case LabelEncoderKind::PRETRAINED_A: return "pretrained-a";
    case LabelEncoderKind::PRETRAINED_B: return "pretrained-b";
    case LabelEncoderKind::RANDOM: return "random";
    case LabelEncoderKind::DESCRIPTION: return "description";
    default: return "hierarchy";
  }
}

std::string to_string(SplitId s) {
  switch (s) {
    case SplitId::TRAIN: return "train";
    case SplitId::DEV: return "dev";
    default: return "test";
  }
}

LabelEncoderKind label_encoder_kind_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "pretrained-a") return LabelEncoderKind::PRETRAINED_A;
  if (v == "pretrained-b") return LabelEncoderKind::PRETRAINED_B;
  if (v == "random") return LabelEncoderKind::RANDOM;
  if (v == "description") return LabelEncoderKind::DESCRIPTION;
  if (v == "hierarchy") return LabelEncoderKind::HIERARCHY;
  throw ValidationError("unknown label encoder kind: '" + s + "'");
}

SplitId split_id_from_string(const std::string& s) {
  const std::string v = lower(s);
  if (v == "train") return SplitId::TRAIN;
  if (v == "dev") return SplitId::DEV;
  if (v == "test") return SplitId::TEST;
  throw ValidationError("unknown split: '" + s + "'");
}

std::string LossToggles::describe() const {
  std::string out;
  auto add = [&out](bool on, const char* name) {
    if (on) {
      if (!out.empty()) out += ",";
      out += name;
    }
  };
  add(icl, "icl");
  add(lcl, "lcl");
  add(lec, "lec");
  add(ice, "ice");
  return out.empty() ? "none" : out;
}

LossToggles toggles_from_string(const std::string& csv) {
  LossToggles t;
  t.icl = t.lcl = t.lec = t.ice = false;
  for (const auto& item : split_csv(lower(csv))) {
    if (item == "icl") t.icl = true;
    else if (item == "lcl") t.lcl = true;
    else if (item == "lec") t.lec = true;
    else if (item == "ice") t.ice = true;
    else throw ValidationError("unknown loss toggle: '" + item + "'");
  }
  return t;
}

std::string ExperimentConfig::label_encoder_family() const {
  switch (label_encoder_kind) {
    case LabelEncoderKind::PRETRAINED_A: return "tiny-a";
    case LabelEncoderKind::PRETRAINED_B: return "tiny-b";
    case LabelEncoderKind::RANDOM: return "";
    // Description and hierarchy variants reuse the input-encoder family.
    default: return input_encoder_family;
  }
}

void ExperimentConfig::validate() const {
  if (temperature <= 0.0) throw ValidationError("config: temperature must be > 0");
  if (learning_rate <= 0.0) throw ValidationError("config: learning_rate must be > 0");
  if (grad_clip_norm <= 0.0) throw ValidationError("config: grad_clip_norm must be > 0");
  if (max_epochs < 1) throw ValidationError("config: max_epochs must be >= 1");
  if (early_stop_patience < 1) throw ValidationError("config: early_stop_patience must be >= 1");
  if (batch_size < 1) throw ValidationError("config: batch_size must be >= 1");
  if (seeds.empty()) throw ValidationError("config: at least one seed required");
  if (!loss_toggles.any()) throw ValidationError("config: at least one loss toggle must be on");
  if (hier_penalties.size() != 2) throw ValidationError("config: hier_penalties must have 2 entries");
  if (max_len_arg1 < 1 || max_len_arg2 < 1) throw ValidationError("config: max lengths must be >= 1");
  if (embed_dim < 2) throw ValidationError("config: embed_dim must be >= 2");
  if (vocab_size < 8) throw ValidationError("config: vocab_size must be >= 8");
}

std::map<std::string, std::string> parse_ini(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeFailure("cannot open config file: " + path);
  std::map<std::string, std::string> kv;
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError(path + ":" + std::to_string(lineno) + ": malformed section header");
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ValidationError(path + ":" + std::to_string(lineno) + ": empty key");
    }
    kv[section.empty() ? key : section + "." + key] = val;
  }
  return kv;
}

ExperimentConfig config_from_ini(const std::map<std::string, std::string>& kv) {
  ExperimentConfig cfg;
  for (const auto& [key, val] : kv) {
    if (key == "train.temperature") cfg.temperature = to_double(key, val);
    else if (key == "train.learning_rate") {
      cfg.learning_rate = to_double(key, val);
      cfg.lr_explicit = true;
    }
    else if (key == "train.weight_decay") cfg.weight_decay = to_double(key, val);
    else if (key == "train.grad_clip_norm") cfg.grad_clip_norm = to_double(key, val);
    else if (key == "train.max_epochs") cfg.max_epochs = to_int(key, val);
    else if (key == "train.early_stop_patience") cfg.early_stop_patience = to_int(key, val);
    else if (key == "train.batch_size") cfg.batch_size = to_int(key, val);
    else if (key == "train.seeds") {
      cfg.seeds.clear();
      for (const auto& s : split_csv(val)) cfg.seeds.push_back(std::stoull(s));
    } else if (key == "train.label_encoder") cfg.label_encoder_kind = label_encoder_kind_from_string(val);
    else if (key == "train.hier_penalty_l1") cfg.hier_penalties[0] = to_double(key, val);
    else if (key == "train.hier_penalty_l2") cfg.hier_penalties[1] = to_double(key, val);
    else if (key == "losses.toggles") cfg.loss_toggles = toggles_from_string(val);
    else if (key == "losses.lcl_include_positives") cfg.lcl_include_positives = to_bool(key, val);
    else if (key == "encoder.max_len_arg1") cfg.max_len_arg1 = to_int(key, val);
    else if (key == "encoder.max_len_arg2") cfg.max_len_arg2 = to_int(key, val);
    else if (key == "encoder.embed_dim") cfg.embed_dim = to_int(key, val);
    else if (key == "encoder.vocab_size") cfg.vocab_size = to_int(key, val);
    else if (key == "encoder.input_family") cfg.input_encoder_family = val;
    else if (key == "eval.proxy_split") cfg.proxy_split = split_id_from_string(val);
    // Unknown keys are left for other stages (data paths, pipeline wiring).
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) { return config_from_ini(parse_ini(path)); }

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeFailure("cannot write config file: " + path);
  out << "[train]\n";
  out << "temperature = " << fmt_double(cfg.temperature) << "\n";
  out << "learning_rate = " << fmt_double(cfg.learning_rate) << "\n";
  out << "weight_decay = " << fmt_double(cfg.weight_decay) << "\n";
  out << "grad_clip_norm = " << fmt_double(cfg.grad_clip_norm) << "\n";
  out << "max_epochs = " << cfg.max_epochs << "\n";
  out << "early_stop_patience = " << cfg.early_stop_patience << "\n";
  out << "batch_size = " << cfg.batch_size << "\n";
  out << "seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    if (i) out << ",";
    out << cfg.seeds[i];
  }
  out << "\n";
  out << "label_encoder = " << to_string(cfg.label_encoder_kind) << "\n";
  out << "hier_penalty_l1 = " << fmt_double(cfg.hier_penalties[0]) << "\n";
  out << "hier_penalty_l2 = " << fmt_double(cfg.hier_penalties[1]) << "\n";
  out << "\n[losses]\n";
  out << "toggles = " << cfg.loss_toggles.describe() << "\n";
  out << "lcl_include_positives = " << (cfg.lcl_include_positives ? "true" : "false") << "\n";
  out << "\n[encoder]\n";
  out << "max_len_arg1 = " << cfg.max_len_arg1 << "\n";
  out << "max_len_arg2 = " << cfg.max_len_arg2 << "\n";
  out << "embed_dim = " << cfg.embed_dim << "\n";
  out << "vocab_size = " << cfg.vocab_size << "\n";
  out << "input_family = " << cfg.input_encoder_family << "\n";
  out << "\n[eval]\n";
  out << "proxy_split = " << to_string(cfg.proxy_split) << "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::ostringstream canon;
  canon << cfg.temperature << "|" << cfg.learning_rate << "|" << cfg.weight_decay << "|"
        << cfg.grad_clip_norm << "|" << cfg.max_epochs << "|" << cfg.early_stop_patience << "|"
        << cfg.batch_size << "|" << to_string(cfg.label_encoder_kind) << "|"
        << cfg.hier_penalties[0] << "|" << cfg.hier_penalties[1] << "|"
        << cfg.loss_toggles.describe() << "|" << cfg.lcl_include_positives << "|"
        << cfg.max_len_arg1 << "|" << cfg.max_len_arg2 << "|" << cfg.embed_dim << "|"
        << cfg.vocab_size << "|" << cfg.input_encoder_family << "|" << to_string(cfg.proxy_split);
  for (auto s : cfg.seeds) canon << "|" << s;
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(canon.str())));
  return buf;
}

int suggest_batch_size(std::size_t n_train, int embed_dim, std::size_t budget_bytes) {
  int bs = 256;
  const std::size_t per_row = static_cast<std::size_t>(embed_dim) * sizeof(double) * 8;
  while (bs > 1 && static_cast<std::size_t>(bs) * per_row > budget_bytes) bs /= 2;
  while (static_cast<std::size_t>(bs) > std::max<std::size_t>(n_train, 1)) bs /= 2;
  return std::max(bs, 1);
}

}  // namespace relalign

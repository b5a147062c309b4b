#include "relalign/augment.hpp"

#include <httplib.h>
#include <json.hpp>

#include <fstream>

namespace relalign::ingest {

using nlohmann::json;

namespace {

std::string request_key(const std::string& text, const std::string& src, const std::string& tgt) {
  return src + "\x1f" + tgt + "\x1f" + text;
}

}  // namespace

ReplayTranslator::ReplayTranslator(const std::string& fixture_path) {
  std::ifstream in(fixture_path);
  if (!in) throw RuntimeFailure("cannot open translation fixture: " + fixture_path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw ValidationError(fixture_path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    recorded_[request_key(j.at("text"), j.at("source"), j.at("target"))] =
        j.at("result").get<std::string>();
  }
}

std::string ReplayTranslator::translate(const std::string& text, const std::string& source_lang,
                                        const std::string& target_lang) {
  const auto it = recorded_.find(request_key(text, source_lang, target_lang));
  if (it == recorded_.end()) {
    throw RuntimeFailure("no recorded translation for " + source_lang + "->" + target_lang +
                         ": '" + text.substr(0, 60) + (text.size() > 60 ? "...'" : "'"));
  }
  return it->second;
}

HttpTranslator::HttpTranslator(const std::string& host, int port, const std::string& path)
    : host_(host), port_(port), path_(path) {}

std::string HttpTranslator::translate(const std::string& text, const std::string& source_lang,
                                      const std::string& target_lang) {
  httplib::Client client(host_, port_);
  client.set_read_timeout(30, 0);
  json body;
  body["q"] = text;
  body["source"] = source_lang;
  body["target"] = target_lang;
  auto res = client.Post(path_, body.dump(), "application/json");
  if (!res) {
    throw RuntimeFailure("translation service unreachable at " + host_ + ":" +
                         std::to_string(port_));
  }
  if (res->status != 200) {
    throw RuntimeFailure("translation service returned status " + std::to_string(res->status));
  }
  try {
    return json::parse(res->body).at("translatedText").get<std::string>();
  } catch (const json::exception& e) {
    throw RuntimeFailure(std::string("malformed translation response: ") + e.what());
  }
}

AugmentResult backtranslate_augment(const std::vector<RelationInstance>& train,
                                    const std::set<int>& skip_labels, TranslationClient& translator,
                                    const std::string& source_lang, const std::string& pivot_lang) {
  AugmentResult res;
  res.instances = train;
  int attempted = 0;
  std::vector<RelationInstance> copies;
  for (const auto& inst : train) {
    if (skip_labels.count(inst.label)) {
      ++res.skipped_by_label;
      continue;
    }
    ++attempted;
    try {
      RelationInstance copy = inst;
      copy.arg1 = translator.translate(translator.translate(inst.arg1, source_lang, pivot_lang),
                                       pivot_lang, source_lang);
      copy.arg2 = translator.translate(translator.translate(inst.arg2, source_lang, pivot_lang),
                                       pivot_lang, source_lang);
      copy.source = InstanceSource::AUGMENTED;
      copies.push_back(std::move(copy));
      ++res.augmented;
    } catch (const std::exception&) {
      ++res.failures;
    }
  }
  if (attempted > 0 && res.failures * 2 > attempted) {
    throw RuntimeFailure("back-translation failed for " + std::to_string(res.failures) + " of " +
                         std::to_string(attempted) + " instances");
  }
  res.instances.insert(res.instances.end(), copies.begin(), copies.end());
  return res;
}

}  // namespace relalign::ingest

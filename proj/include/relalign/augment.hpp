#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "relalign/instance.hpp"
#include "relalign/types.hpp"

namespace relalign::ingest {

/// Round-trip translation backend. Implementations must be safe to call
/// sequentially; failures are reported by throwing.
class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  virtual std::string translate(const std::string& text, const std::string& source_lang,
                                const std::string& target_lang) = 0;
};

/// Returns inputs unchanged; for tests and dry runs.
class IdentityTranslator : public TranslationClient {
 public:
  std::string translate(const std::string& text, const std::string&, const std::string&) override {
    return text;
  }
};

/// Bit-exact replay of recorded translations. The fixture is JSON lines with
/// fields text, source, target, result; unknown requests are an error so
/// replays never silently drift.
class ReplayTranslator : public TranslationClient {
 public:
  explicit ReplayTranslator(const std::string& fixture_path);
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  std::map<std::string, std::string> recorded_;
};

/// Adapter for a self-hosted translation HTTP service with a LibreTranslate-
/// style JSON API: POST /translate {"q","source","target"} ->
/// {"translatedText"}.
class HttpTranslator : public TranslationClient {
 public:
  HttpTranslator(const std::string& host, int port, const std::string& path = "/translate");
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  std::string host_;
  int port_;
  std::string path_;
};

struct AugmentResult {
  std::vector<RelationInstance> instances;  // originals plus appended copies
  int augmented = 0;
  int skipped_by_label = 0;
  int failures = 0;
};

/// Appends one paraphrased copy (source -> pivot -> source round trip) per
/// training instance whose label is not in skip_labels. Originals are kept;
/// copies carry the augmented source tag. Failed translations skip the
/// instance with a warning count; more than 50% failures aborts.
AugmentResult backtranslate_augment(const std::vector<RelationInstance>& train,
                                    const std::set<int>& skip_labels, TranslationClient& translator,
                                    const std::string& source_lang = "en",
                                    const std::string& pivot_lang = "fr");

}  // namespace relalign::ingest

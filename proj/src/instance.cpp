#include "relalign/instance.hpp"

#include <algorithm>
#include <cctype>

namespace relalign {

namespace {

std::string trimmed(const std::string& s) {
  auto b = s.begin();
  auto e = s.end();
  while (b != e && std::isspace(static_cast<unsigned char>(*b))) ++b;
  while (e != b && std::isspace(static_cast<unsigned char>(*(e - 1)))) --e;
  return std::string(b, e);
}

}  // namespace

std::string to_string(Framework f) {
  switch (f) {
    case Framework::RST: return "rst";
    case Framework::PDTB: return "pdtb";
    default: return "other";
  }
}

std::string to_string(RelationKind k) {
  switch (k) {
    case RelationKind::EXPLICIT: return "explicit";
    case RelationKind::IMPLICIT: return "implicit";
    case RelationKind::OTHER: return "other";
    default: return "na";
  }
}

std::string to_string(InstanceSource s) {
  switch (s) {
    case InstanceSource::ORIGINAL: return "original";
    case InstanceSource::AUGMENTED: return "augmented";
    default: return "relabeled";
  }
}

Framework framework_from_string(const std::string& s) {
  if (s == "rst") return Framework::RST;
  if (s == "pdtb") return Framework::PDTB;
  if (s == "other") return Framework::OTHER;
  throw ValidationError("unknown framework: '" + s + "'");
}

RelationKind relation_kind_from_string(const std::string& s) {
  if (s == "explicit") return RelationKind::EXPLICIT;
  if (s == "implicit") return RelationKind::IMPLICIT;
  if (s == "other") return RelationKind::OTHER;
  if (s == "na") return RelationKind::NA;
  throw ValidationError("unknown relation kind: '" + s + "'");
}

InstanceSource instance_source_from_string(const std::string& s) {
  if (s == "original") return InstanceSource::ORIGINAL;
  if (s == "augmented") return InstanceSource::AUGMENTED;
  if (s == "relabeled") return InstanceSource::RELABELED;
  throw ValidationError("unknown instance source: '" + s + "'");
}

void RelationInstance::validate(const RelationTaxonomy& tax) const {
  if (trimmed(arg1).empty()) {
    throw ValidationError("instance in doc '" + doc_id + "': arg1 empty after trimming");
  }
  if (trimmed(arg2).empty()) {
    throw ValidationError("instance in doc '" + doc_id + "': arg2 empty after trimming");
  }
  if (label < 0 || label >= tax.size()) {
    throw ValidationError("instance in doc '" + doc_id + "': label id " + std::to_string(label) +
                          " outside taxonomy of size " + std::to_string(tax.size()));
  }
}

}  // namespace relalign

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "relalign/instance.hpp"
#include "relalign/taxonomy.hpp"

namespace relalign::ingest {

struct SyntheticCorpus {
  std::vector<RelationInstance> instances;
  RelationTaxonomy taxonomy;
};

/// Deterministic balanced corpus whose classes are separable by construction:
/// each class draws most words from its own marker vocabulary plus a small
/// shared function-word pool. Labels carry descriptions and a two-level
/// hierarchy so every label-encoder variant can run on it.
SyntheticCorpus generate_synthetic_corpus(int n_classes, int n_per_class, std::uint64_t seed);

/// Same class structure under different label names (and optionally a
/// permuted label order); instances are re-tagged to match. Used to exercise
/// cross-framework mapping against a known ground-truth bijection.
SyntheticCorpus rename_synthetic_corpus(const SyntheticCorpus& corpus, const std::string& prefix,
                                        const std::vector<int>& permutation = {});

}  // namespace relalign::ingest

#ifndef GERBERA_SYNTHETIC_HPP
#define GERBERA_SYNTHETIC_HPP

#include <cstdint>

#include "gerbera/trainer.hpp"

namespace gerbera {

// Knobs for the generated transfer benchmark: a small "biomedical-like"
// target and a larger general source that share context templates but use
// disjoint mention lexicons. Dev/test entities are mostly surfaces unseen
// in training, so scores measure context-driven recognition rather than
// lexicon lookup.
struct SynthConfig {
  uint64_t seed = 7;
  size_t target_train_sentences = 300;
  size_t target_dev_sentences = 60;
  size_t target_test_sentences = 120;
  size_t source_train_sentences = 1500;
  size_t n_templates = 120;
  size_t target_pool_concepts = 60;
  size_t source_pool_concepts = 240;
  double no_entity_fraction = 0.2;   // sentences whose slot holds a filler
  double singleton_fraction = 0.15;  // train mentions used exactly once
};

struct TransferPair {
  CorpusTriple target;
  Corpus source_train;
};

// Deterministic for a fixed config. Corpora are untyped BIO and carry
// concept ids, so generalization buckets work out of the box.
TransferPair make_transfer_pair(const SynthConfig& config);

}  // namespace gerbera

#endif  // GERBERA_SYNTHETIC_HPP

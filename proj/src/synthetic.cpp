#include "gerbera/synthetic.hpp"

#include <set>
#include <string>
#include <vector>

#include "gerbera/rng.hpp"

namespace gerbera {

namespace {

// Shared context vocabulary; both corpora build their templates from it,
// which is what makes the source transferable.
const std::vector<std::string> kFillers = {
    "the",      "a",        "of",        "in",       "was",      "were",
    "noted",    "observed", "reported",  "during",   "after",    "before",
    "study",    "series",   "case",      "group",    "levels",   "records",
    "analysis", "review",   "treatment", "with",     "without",  "showed",
    "presence", "absence",  "findings",  "measured", "between",  "within",
    "initial",  "final",    "repeated",  "standard", "routine",  "overall",
    "results",  "data",     "samples",   "subjects", "patients", "controls",
    "response", "to",       "for",       "under",    "over",     "and",
    "but",      "while",    "when",      "where",    "each",     "several",
    "following","previous", "increased", "decreased","stable",   "marked",
    "mild",     "severe",   "apparent",  "possible", "known",    "new",
    "documented","confirmed","suspected", "examined", "recorded", "described",
};

const std::vector<std::string> kTargetSyllables = {
    "zor", "mib", "lex", "tal", "pra", "vex", "dun", "kel",
    "ryn", "fos", "quil", "nar", "cid", "omab", "inib", "axel",
};

const std::vector<std::string> kSourceSyllables = {
    "bar", "ston", "well", "ham", "ford", "berg", "mont", "ley",
    "win", "dale", "brook", "shaw", "firth", "combe", "garth", "mere",
};

struct Template {
  std::vector<std::string> prefix;
  std::vector<std::string> suffix;
};

struct Concept {
  std::string id;
  std::vector<std::vector<std::string>> surfaces;  // [0]=train, [1]=variant
};

class Generator {
 public:
  Generator(const SynthConfig& cfg, Rng& rng) : cfg_(cfg), rng_(rng) {
    templates_.reserve(cfg.n_templates);
    for (size_t i = 0; i < cfg.n_templates; ++i) {
      Template t;
      size_t pre = 2 + rng_.below(4);  // 2..5
      size_t suf = 1 + rng_.below(4);  // 1..4
      for (size_t k = 0; k < pre; ++k) t.prefix.push_back(filler());
      for (size_t k = 0; k < suf; ++k) t.suffix.push_back(filler());
      templates_.push_back(std::move(t));
    }
  }

  std::string filler() { return kFillers[rng_.below(kFillers.size())]; }

  std::string word(const std::vector<std::string>& syllables) {
    for (int attempt = 0; attempt < 64; ++attempt) {
      size_t n = 2 + rng_.below(2);  // 2..3 syllables
      std::string w;
      for (size_t i = 0; i < n; ++i) w += syllables[rng_.below(syllables.size())];
      if (used_words_.insert(w).second) return w;
    }
    // Syllable space is large enough that this is unreachable in practice;
    // fall back to a numbered word rather than loop forever.
    std::string w = syllables[0] + std::to_string(used_words_.size());
    used_words_.insert(w);
    return w;
  }

  std::vector<std::string> mention(const std::vector<std::string>& syllables) {
    size_t n = 1 + rng_.below(3);  // 1..3 words
    std::vector<std::string> m;
    for (size_t i = 0; i < n; ++i) m.push_back(word(syllables));
    return m;
  }

  std::vector<Concept> concept_pool(const std::string& id_prefix, size_t n,
                                    const std::vector<std::string>& syllables) {
    std::vector<Concept> pool;
    pool.reserve(n);
    for (size_t i = 0; i < n; ++i) {
      Concept c;
      c.id = id_prefix + std::to_string(i);
      c.surfaces.push_back(mention(syllables));
      // The variant keeps the head word, so it reads as the same concept.
      std::vector<std::string> variant = c.surfaces[0];
      variant.push_back(word(syllables));
      c.surfaces.push_back(std::move(variant));
      pool.push_back(std::move(c));
    }
    return pool;
  }

  Sentence sentence(const std::vector<std::string>& mention_words,
                    const std::string& concept_id) {
    const Template& t = templates_[rng_.below(templates_.size())];
    Sentence s;
    for (const auto& w : t.prefix) s.tokens.push_back({w, "O", {}});
    for (size_t i = 0; i < mention_words.size(); ++i) {
      Token tok{mention_words[i], i == 0 ? "B" : "I", {}};
      if (!concept_id.empty()) tok.concept_id = concept_id;
      s.tokens.push_back(std::move(tok));
    }
    for (const auto& w : t.suffix) s.tokens.push_back({w, "O", {}});
    return s;
  }

  Sentence no_entity_sentence() { return sentence({filler()}, ""); }

 private:
  const SynthConfig& cfg_;
  Rng& rng_;
  std::vector<Template> templates_;
  std::set<std::string> used_words_;
};

// Overrides the tag column for the no-entity case: the slot filler is O.
Sentence strip_tags(Sentence s) {
  for (auto& tok : s.tokens) {
    tok.tag = "O";
    tok.concept_id.reset();
  }
  return s;
}

}  // namespace

TransferPair make_transfer_pair(const SynthConfig& cfg) {
  Rng rng(cfg.seed);
  Generator gen(cfg, rng);

  std::vector<Concept> target_pool =
      gen.concept_pool("T", cfg.target_pool_concepts, kTargetSyllables);
  std::vector<Concept> source_pool =
      gen.concept_pool("S", cfg.source_pool_concepts, kSourceSyllables);

  size_t singleton_counter = 0;
  auto fresh_concept = [&](const std::vector<std::string>& syllables) {
    Concept c;
    c.id = "U" + std::to_string(singleton_counter++);
    c.surfaces.push_back(gen.mention(syllables));
    return c;
  };

  auto make_train = [&](const std::vector<Concept>& pool,
                        const std::vector<std::string>& syllables,
                        size_t n_sentences) {
    std::vector<Sentence> out;
    out.reserve(n_sentences);
    for (size_t i = 0; i < n_sentences; ++i) {
      double roll = rng.uniform();
      if (roll < cfg.no_entity_fraction) {
        out.push_back(strip_tags(gen.no_entity_sentence()));
      } else if (roll < cfg.no_entity_fraction + cfg.singleton_fraction) {
        Concept c = fresh_concept(syllables);
        out.push_back(gen.sentence(c.surfaces[0], c.id));
      } else {
        const Concept& c = pool[rng.below(pool.size())];
        out.push_back(gen.sentence(c.surfaces[0], c.id));
      }
    }
    return out;
  };

  // Dev/test mix: a third each of seen surfaces (memorization), unseen
  // variants of seen concepts (synonym), and fresh concepts.
  auto make_eval = [&](size_t n_sentences) {
    std::vector<Sentence> out;
    out.reserve(n_sentences);
    for (size_t i = 0; i < n_sentences; ++i) {
      double roll = rng.uniform();
      if (roll < cfg.no_entity_fraction) {
        out.push_back(strip_tags(gen.no_entity_sentence()));
        continue;
      }
      double kind = rng.uniform();
      if (kind < 1.0 / 3.0) {
        const Concept& c = target_pool[rng.below(target_pool.size())];
        out.push_back(gen.sentence(c.surfaces[0], c.id));
      } else if (kind < 2.0 / 3.0) {
        const Concept& c = target_pool[rng.below(target_pool.size())];
        out.push_back(gen.sentence(c.surfaces[1], c.id));
      } else {
        Concept c = fresh_concept(kTargetSyllables);
        out.push_back(gen.sentence(c.surfaces[0], c.id));
      }
    }
    return out;
  };

  TransferPair pair;
  pair.target.train.name = "synthetic-bio";
  pair.target.train.domain_kind = DomainKind::biomedical;
  pair.target.train.split = Split::train;
  pair.target.train.sentences =
      make_train(target_pool, kTargetSyllables, cfg.target_train_sentences);
  pair.target.train.rebuild_tag_alphabet();

  Corpus dev;
  dev.name = "synthetic-bio";
  dev.domain_kind = DomainKind::biomedical;
  dev.split = Split::dev;
  dev.sentences = make_eval(cfg.target_dev_sentences);
  dev.rebuild_tag_alphabet();
  pair.target.dev = std::move(dev);

  Corpus test;
  test.name = "synthetic-bio";
  test.domain_kind = DomainKind::biomedical;
  test.split = Split::test;
  test.sentences = make_eval(cfg.target_test_sentences);
  test.rebuild_tag_alphabet();
  pair.target.test = std::move(test);

  pair.source_train.name = "synthetic-general";
  pair.source_train.domain_kind = DomainKind::general;
  pair.source_train.split = Split::train;
  pair.source_train.sentences =
      make_train(source_pool, kSourceSyllables, cfg.source_train_sentences);
  pair.source_train.rebuild_tag_alphabet();
  return pair;
}

}  // namespace gerbera

#ifndef GERBERA_EVALUATOR_HPP
#define GERBERA_EVALUATOR_HPP

#include <string>
#include <vector>

#include "gerbera/corpus.hpp"
#include "gerbera/tagset.hpp"

namespace gerbera {

// Gold-side boundary cases plus pure misses add up to fn; pred-side
// overlaps plus pure spurious hits add up to fp.
struct TaxonomyCounts {
  size_t pure_miss = 0;
  size_t pure_spurious = 0;
  size_t boundary_mismatch_gold = 0;  // unmatched gold overlapping a pred
  size_t boundary_overlap_pred = 0;   // unmatched pred overlapping a gold
};

struct BucketMetrics {
  std::string bucket;  // memorization | synonym | concept | novel_mention
  size_t gold_count = 0;
  size_t matched = 0;
  double recall = 0.0;
};

struct EvalReport {
  size_t tp = 0, fp = 0, fn = 0;
  double precision = 0.0, recall = 0.0, f1 = 0.0;
  TaxonomyCounts taxonomy;
  std::vector<BucketMetrics> buckets;  // filled by generalization_partition
  std::vector<std::string> notices;

  size_t boundary_mismatch_count() const {
    return taxonomy.boundary_mismatch_gold;
  }
};

using SpansPerSentence = std::vector<std::vector<Span>>;

// Two spans count as the same entity when start and end agree and, if both
// carry a type, the types agree too.
bool spans_match(const Span& gold, const Span& pred);

// Strict entity-level scoring. Zero-denominator metrics are defined as 0.
// Throws SentenceCountMismatchError when the two lists disagree in length.
EvalReport score_strict(const SpansPerSentence& gold,
                        const SpansPerSentence& pred);

// FP/FN partition into pure misses, pure spurious hits, and boundary
// mismatches. A gold span overlapping several predictions is one case.
TaxonomyCounts error_taxonomy(const SpansPerSentence& gold,
                              const SpansPerSentence& pred);

// Buckets gold test spans by what recognizing them requires:
// memorization (mention surface seen in training), synonym (concept seen,
// surface new), concept (neither). Without concept ids on both splits the
// partition degrades to {memorization, novel_mention} with a notice.
// Returns per-bucket recall computed from strict matches.
std::vector<BucketMetrics> generalization_partition(
    const Corpus& train, const SpansPerSentence& test_gold,
    const SpansPerSentence& pred, std::vector<std::string>* notices);

// Convenience: decode both sides from corpora (predicted tags live in the
// tag column of `pred`), repairing orphan predictions first.
EvalReport evaluate_corpora(const Corpus& gold, const Corpus& pred);

// Mention key used for bucket assignment: ASCII case-fold, tokens joined
// by single spaces.
std::string normalize_mention(const std::string& mention);

// {corpus, model_id, tp, fp, fn, precision, recall, f1, taxonomy, buckets}
std::string report_to_json(const EvalReport& report,
                           const std::string& corpus_name,
                           const std::string& model_id);

// Re-checks the published invariants of a finished report; throws
// InvariantError on any inconsistency. Used by the CLI --self-check flag.
void check_report_invariants(const EvalReport& report, size_t n_gold_spans,
                             size_t n_pred_spans);

}  // namespace gerbera

#endif  // GERBERA_EVALUATOR_HPP

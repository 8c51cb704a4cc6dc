#include "gerbera/evaluator.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <set>

#include <nlohmann/json.hpp>

#include "gerbera/error.hpp"

namespace gerbera {

bool spans_match(const Span& gold, const Span& pred) {
  if (gold.start != pred.start || gold.end != pred.end) return false;
  if (gold.entity_type && pred.entity_type)
    return *gold.entity_type == *pred.entity_type;
  return true;  // untyped side: boundaries decide
}

namespace {

bool overlaps(const Span& a, const Span& b) {
  return a.start < b.end && b.start < a.end;
}

// Per-sentence 1-1 matching. Spans on each side are disjoint, so a span
// has at most one exact-boundary counterpart.
struct SentenceMatch {
  std::vector<bool> gold_matched;
  std::vector<bool> pred_matched;
};

SentenceMatch match_sentence(const std::vector<Span>& gold,
                             const std::vector<Span>& pred) {
  SentenceMatch m;
  m.gold_matched.assign(gold.size(), false);
  m.pred_matched.assign(pred.size(), false);
  for (size_t gi = 0; gi < gold.size(); ++gi) {
    for (size_t pi = 0; pi < pred.size(); ++pi) {
      if (m.pred_matched[pi]) continue;
      if (spans_match(gold[gi], pred[pi])) {
        m.gold_matched[gi] = true;
        m.pred_matched[pi] = true;
        break;
      }
    }
  }
  return m;
}

void require_same_length(const SpansPerSentence& gold,
                         const SpansPerSentence& pred) {
  if (gold.size() != pred.size())
    throw SentenceCountMismatchError(
        "gold has " + std::to_string(gold.size()) + " sentences, pred has " +
        std::to_string(pred.size()));
}

}  // namespace

EvalReport score_strict(const SpansPerSentence& gold,
                        const SpansPerSentence& pred) {
  require_same_length(gold, pred);

  EvalReport report;
  for (size_t s = 0; s < gold.size(); ++s) {
    SentenceMatch m = match_sentence(gold[s], pred[s]);
    for (bool matched : m.gold_matched)
      matched ? ++report.tp : ++report.fn;
    for (bool matched : m.pred_matched)
      if (!matched) ++report.fp;
  }

  const size_t pd = report.tp + report.fp;
  const size_t rd = report.tp + report.fn;
  report.precision = pd == 0 ? 0.0 : static_cast<double>(report.tp) / pd;
  report.recall = rd == 0 ? 0.0 : static_cast<double>(report.tp) / rd;
  report.f1 = report.precision + report.recall == 0.0
                  ? 0.0
                  : 2.0 * report.precision * report.recall /
                        (report.precision + report.recall);
  report.taxonomy = error_taxonomy(gold, pred);
  return report;
}

TaxonomyCounts error_taxonomy(const SpansPerSentence& gold,
                              const SpansPerSentence& pred) {
  require_same_length(gold, pred);

  TaxonomyCounts counts;
  for (size_t s = 0; s < gold.size(); ++s) {
    SentenceMatch m = match_sentence(gold[s], pred[s]);
    for (size_t gi = 0; gi < gold[s].size(); ++gi) {
      if (m.gold_matched[gi]) continue;
      bool any_overlap = false;
      for (const Span& p : pred[s])
        if (overlaps(gold[s][gi], p)) {
          any_overlap = true;
          break;
        }
      any_overlap ? ++counts.boundary_mismatch_gold : ++counts.pure_miss;
    }
    for (size_t pi = 0; pi < pred[s].size(); ++pi) {
      if (m.pred_matched[pi]) continue;
      bool any_overlap = false;
      for (const Span& g : gold[s])
        if (overlaps(g, pred[s][pi])) {
          any_overlap = true;
          break;
        }
      any_overlap ? ++counts.boundary_overlap_pred : ++counts.pure_spurious;
    }
  }
  return counts;
}

std::string normalize_mention(const std::string& mention) {
  std::string out = mention;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::vector<BucketMetrics> generalization_partition(
    const Corpus& train, const SpansPerSentence& test_gold,
    const SpansPerSentence& pred, std::vector<std::string>* notices) {
  require_same_length(test_gold, pred);

  std::set<std::string> train_mentions;
  std::set<std::string> train_concepts;
  for (const auto& sent : train.sentences) {
    for (const Span& span : decode_spans(sent)) {
      train_mentions.insert(normalize_mention(span.mention));
      if (span.concept_id) train_concepts.insert(*span.concept_id);
    }
  }

  bool test_has_concepts = false;
  for (const auto& spans : test_gold)
    for (const Span& span : spans)
      if (span.concept_id) test_has_concepts = true;

  const bool concepts_available =
      !train_concepts.empty() && test_has_concepts;

  std::vector<BucketMetrics> buckets;
  if (concepts_available) {
    buckets = {{"memorization", 0, 0, 0.0},
               {"synonym", 0, 0, 0.0},
               {"concept", 0, 0, 0.0}};
  } else {
    buckets = {{"memorization", 0, 0, 0.0}, {"novel_mention", 0, 0, 0.0}};
    if (notices)
      notices->push_back(
          "concept ids missing on train or test; reporting two buckets "
          "(memorization, novel_mention) instead of three");
  }

  for (size_t s = 0; s < test_gold.size(); ++s) {
    SentenceMatch m = match_sentence(test_gold[s], pred[s]);
    for (size_t gi = 0; gi < test_gold[s].size(); ++gi) {
      const Span& span = test_gold[s][gi];
      size_t bucket;
      if (train_mentions.count(normalize_mention(span.mention))) {
        bucket = 0;  // memorization
      } else if (concepts_available && span.concept_id &&
                 train_concepts.count(*span.concept_id)) {
        bucket = 1;  // synonym
      } else {
        bucket = buckets.size() - 1;  // concept / novel_mention
      }
      ++buckets[bucket].gold_count;
      if (m.gold_matched[gi]) ++buckets[bucket].matched;
    }
  }

  for (auto& b : buckets)
    b.recall = b.gold_count == 0
                   ? 0.0
                   : static_cast<double>(b.matched) / b.gold_count;
  return buckets;
}

EvalReport evaluate_corpora(const Corpus& gold, const Corpus& pred) {
  if (gold.sentences.size() != pred.sentences.size())
    throw SentenceCountMismatchError(
        "gold corpus has " + std::to_string(gold.sentences.size()) +
        " sentences, prediction corpus has " +
        std::to_string(pred.sentences.size()));

  Corpus repaired_pred = repair_orphans(pred);
  SpansPerSentence gold_spans, pred_spans;
  gold_spans.reserve(gold.sentences.size());
  for (size_t i = 0; i < gold.sentences.size(); ++i) {
    if (gold.sentences[i].size() != repaired_pred.sentences[i].size())
      throw SentenceCountMismatchError("sentence " + std::to_string(i) +
                                       " length differs between gold and "
                                       "prediction");
    gold_spans.push_back(decode_spans(gold.sentences[i]));
    pred_spans.push_back(decode_spans(repaired_pred.sentences[i]));
  }
  return score_strict(gold_spans, pred_spans);
}

std::string report_to_json(const EvalReport& report,
                           const std::string& corpus_name,
                           const std::string& model_id) {
  nlohmann::json j;
  j["corpus"] = corpus_name;
  j["model_id"] = model_id;
  j["tp"] = report.tp;
  j["fp"] = report.fp;
  j["fn"] = report.fn;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  j["taxonomy"] = {{"pure_miss", report.taxonomy.pure_miss},
                   {"pure_spurious", report.taxonomy.pure_spurious},
                   {"boundary_mismatch", report.taxonomy.boundary_mismatch_gold},
                   {"boundary_overlap_pred", report.taxonomy.boundary_overlap_pred}};
  j["buckets"] = nlohmann::json::array();
  for (const auto& b : report.buckets)
    j["buckets"].push_back({{"bucket", b.bucket},
                            {"gold_count", b.gold_count},
                            {"matched", b.matched},
                            {"recall", b.recall}});
  if (!report.notices.empty()) j["notices"] = report.notices;
  return j.dump(2);
}

void check_report_invariants(const EvalReport& r, size_t n_gold_spans,
                             size_t n_pred_spans) {
  auto fail = [](const std::string& what) {
    throw InvariantError("evaluation report invariant violated: " + what);
  };
  if (r.tp + r.fn != n_gold_spans) fail("tp + fn != |gold spans|");
  if (r.tp + r.fp != n_pred_spans) fail("tp + fp != |pred spans|");
  if (r.taxonomy.pure_miss + r.taxonomy.boundary_mismatch_gold != r.fn)
    fail("pure_miss + boundary_mismatch != fn");
  if (r.taxonomy.pure_spurious + r.taxonomy.boundary_overlap_pred != r.fp)
    fail("pure_spurious + boundary_overlap_pred != fp");
  if (r.boundary_mismatch_count() > r.fp + r.fn)
    fail("boundary_mismatch_count > fp + fn");
  const double pd = static_cast<double>(r.tp + r.fp);
  const double rd = static_cast<double>(r.tp + r.fn);
  const double p = pd == 0 ? 0.0 : r.tp / pd;
  const double rec = rd == 0 ? 0.0 : r.tp / rd;
  const double f1 = p + rec == 0 ? 0.0 : 2 * p * rec / (p + rec);
  if (std::abs(p - r.precision) > 1e-12 || std::abs(rec - r.recall) > 1e-12 ||
      std::abs(f1 - r.f1) > 1e-12)
    fail("precision/recall/f1 do not match the counts");
  if (!r.buckets.empty()) {
    size_t total = 0;
    for (const auto& b : r.buckets) total += b.gold_count;
    if (total != n_gold_spans) fail("buckets do not partition gold spans");
  }
}

}  // namespace gerbera

#ifndef GERBERA_CORPUS_HPP
#define GERBERA_CORPUS_HPP

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace gerbera {

enum class DomainKind { biomedical, general };
enum class Split { train, dev, test };

std::string to_string(DomainKind k);
std::string to_string(Split s);

struct Token {
  std::string surface;  // non-empty, no whitespace
  std::string tag;      // raw tag label, e.g. "B-ORG", "I", "O"
  std::optional<std::string> concept_id;
};

struct Sentence {
  std::vector<Token> tokens;

  size_t size() const { return tokens.size(); }
  std::vector<std::string> tags() const;
  std::vector<std::string> surfaces() const;
};

struct Corpus {
  std::string name;
  DomainKind domain_kind = DomainKind::general;
  Split split = Split::train;
  std::vector<Sentence> sentences;
  std::set<std::string> tag_alphabet;  // exact set of tags in sentences

  // Recomputes tag_alphabet from the sentences. Call after editing tags.
  void rebuild_tag_alphabet();
};

struct CorpusStats {
  size_t sentence_count = 0;
  size_t entity_count = 0;
  size_t token_count = 0;
  // Untyped spans are keyed under "".
  std::map<std::string, size_t> per_type_entity_counts;
};

enum class ParseMode { strict, lenient };

struct FormatConfig {
  // Column holding the token surface.
  size_t token_column = 0;
  // Column holding the tag; -1 means "last column on the line".
  int tag_column = -1;
  // Optional column holding a concept identifier.
  std::optional<size_t> concept_column;
  ParseMode mode = ParseMode::strict;
};

struct SkippedLine {
  size_t line_no = 0;  // 1-based
  std::string content;
  std::string reason;
};

struct ParseOutcome {
  Corpus corpus;
  std::vector<SkippedLine> skipped;  // populated only in lenient mode
};

// One malformed position found by validate_bio.
struct Violation {
  size_t sentence_index = 0;
  size_t token_index = 0;
  std::string tag;
  std::string reason;  // "orphan I" or "tag outside BIO grammar"
};

// Parse CoNLL-style token/tag text. Lines are whitespace-separated columns,
// a blank line ends a sentence, lines starting with "-DOCSTART-" are
// skipped. Strict mode throws ParseError on the first malformed line;
// lenient mode skips it and records it in the outcome. Invalid UTF-8 is a
// hard error in both modes.
ParseOutcome parse_conll_full(const std::string& raw_text,
                              const FormatConfig& config = {});
Corpus parse_conll(const std::string& raw_text,
                   const FormatConfig& config = {});

// Reads a whole file and parses it. name/domain/split are stamped onto the
// returned corpus.
Corpus load_corpus_file(const std::string& path, const FormatConfig& config,
                        const std::string& name, DomainKind domain,
                        Split split);

// Reports every orphan I tag and every tag outside {B-*, I-*, O, B, I}.
// Read-only; an empty result means the corpus is clean IOB2.
std::vector<Violation> validate_bio(const Corpus& corpus);

// Sentence/token/entity counts. Entities are counted by decoding spans per
// sentence; throws InvalidTagsError if the corpus still has violations.
CorpusStats corpus_stats(const Corpus& corpus);

// Canonical line-oriented form: token<TAB>tag[<TAB>concept_id], one blank
// line between sentences, trailing newline. parse_conll round-trips it.
std::string serialize_corpus(const Corpus& corpus);
void save_corpus_file(const Corpus& corpus, const std::string& path);

// {name, split, sentence_count, entity_count, token_count,
//  per_type_entity_counts} as a JSON object string.
std::string stats_to_json(const Corpus& corpus, const CorpusStats& stats);

bool valid_utf8(const std::string& text);

}  // namespace gerbera

#endif  // GERBERA_CORPUS_HPP

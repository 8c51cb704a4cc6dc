#ifndef GERBERA_TAGSET_HPP
#define GERBERA_TAGSET_HPP

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gerbera/corpus.hpp"

namespace gerbera {

// Half-open token-index interval [start, end).
struct Span {
  size_t start = 0;
  size_t end = 0;
  std::optional<std::string> entity_type;  // nullopt for untyped B/I
  std::string mention;  // token surfaces joined by single spaces; may be
                        // empty when decoded from tags alone

  bool operator==(const Span& o) const {
    return start == o.start && end == o.end && entity_type == o.entity_type;
  }
  bool operator<(const Span& o) const {
    if (start != o.start) return start < o.start;
    if (end != o.end) return end < o.end;
    return entity_type < o.entity_type;
  }
};

enum class TagSchemeKind { typed_bio, untyped_bio };

// A task's label space. Class order is O first, then all B classes, then
// all I classes, so an argmax that prefers the lowest index breaks ties
// toward O, then B, then I.
struct TagScheme {
  TagSchemeKind kind = TagSchemeKind::untyped_bio;
  std::vector<std::string> types;  // sorted; empty when untyped

  size_t num_classes() const;
  // Index of a raw tag within this scheme; throws InvalidTagsError when the
  // tag does not belong to the scheme.
  size_t tag_index(const std::string& tag) const;
  std::string index_tag(size_t index) const;

  // Derives the scheme from a corpus tag alphabet.
  static TagScheme from_alphabet(const std::set<std::string>& alphabet);

  bool operator==(const TagScheme& o) const {
    return kind == o.kind && types == o.types;
  }
};

// Structure of one raw tag.
struct ParsedTag {
  enum Kind { O, B, I } kind = O;
  std::optional<std::string> type;  // nullopt for O and untyped B/I
  bool valid = false;               // false: outside the BIO grammar
};
ParsedTag parse_tag(const std::string& tag);

// B-x -> B, I-x -> I, O -> O. Boundaries survive because B always opens a
// new span, so adjacent distinct-type entities stay separate.
Corpus collapse_types(const Corpus& corpus);

// Keeps tags of entity type `keep` (still typed); every other B-*/I-*
// becomes O. Sentence and token counts are unchanged. A `keep` absent from
// the corpus yields an all-O corpus.
Corpus filter_entity_type(const Corpus& corpus, const std::string& keep);

// IOB2 span decoding. An orphan I (no same-type B/I before it) is treated
// as if it were B, matching repair_orphans.
std::vector<Span> decode_spans(const std::vector<std::string>& tags);
// Same, with mentions filled from the sentence's surfaces.
std::vector<Span> decode_spans(const Sentence& sentence);

// Writes IOB2 tags for a disjoint, ordered span set. Inverse of
// decode_spans on valid input.
std::vector<std::string> encode_tags(const std::vector<Span>& spans,
                                     size_t sentence_length);

// Promotes every orphan I to B (typed I-x to B-x). Idempotent; the result
// passes validate_bio.
Corpus repair_orphans(const Corpus& corpus);

}  // namespace gerbera

#endif  // GERBERA_TAGSET_HPP

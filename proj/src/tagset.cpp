#include "gerbera/tagset.hpp"

#include <algorithm>

#include "gerbera/error.hpp"

namespace gerbera {

ParsedTag parse_tag(const std::string& tag) {
  ParsedTag p;
  if (tag == "O") {
    p.kind = ParsedTag::O;
    p.valid = true;
  } else if (tag == "B" || tag == "I") {
    p.kind = tag == "B" ? ParsedTag::B : ParsedTag::I;
    p.valid = true;
  } else if (tag.size() > 2 && (tag[0] == 'B' || tag[0] == 'I') &&
             tag[1] == '-') {
    p.kind = tag[0] == 'B' ? ParsedTag::B : ParsedTag::I;
    p.type = tag.substr(2);
    p.valid = true;
  }
  return p;
}

size_t TagScheme::num_classes() const {
  return kind == TagSchemeKind::untyped_bio ? 3 : 1 + 2 * types.size();
}

// Class layout: [O, B-t1..B-tk, I-t1..I-tk] (untyped: [O, B, I]). Lowest
// index wins argmax ties, which realizes the O > B > I tie-break.
size_t TagScheme::tag_index(const std::string& tag) const {
  ParsedTag p = parse_tag(tag);
  if (!p.valid) throw InvalidTagsError("tag outside BIO grammar: " + tag);
  if (p.kind == ParsedTag::O) return 0;
  if (kind == TagSchemeKind::untyped_bio) {
    if (p.type)
      throw InvalidTagsError("typed tag in untyped scheme: " + tag);
    return p.kind == ParsedTag::B ? 1 : 2;
  }
  if (!p.type) throw InvalidTagsError("untyped tag in typed scheme: " + tag);
  auto it = std::lower_bound(types.begin(), types.end(), *p.type);
  if (it == types.end() || *it != *p.type)
    throw InvalidTagsError("tag type not in scheme: " + tag);
  size_t ti = static_cast<size_t>(it - types.begin());
  return 1 + ti + (p.kind == ParsedTag::I ? types.size() : 0);
}

std::string TagScheme::index_tag(size_t index) const {
  if (index == 0) return "O";
  if (kind == TagSchemeKind::untyped_bio) {
    if (index == 1) return "B";
    if (index == 2) return "I";
    throw InvariantError("class index out of range");
  }
  size_t k = types.size();
  if (index <= k) return "B-" + types[index - 1];
  if (index <= 2 * k) return "I-" + types[index - 1 - k];
  throw InvariantError("class index out of range");
}

TagScheme TagScheme::from_alphabet(const std::set<std::string>& alphabet) {
  TagScheme scheme;
  std::set<std::string> types;
  bool saw_untyped_bi = false;
  for (const auto& tag : alphabet) {
    ParsedTag p = parse_tag(tag);
    if (!p.valid) throw InvalidTagsError("tag outside BIO grammar: " + tag);
    if (p.kind == ParsedTag::O) continue;
    if (p.type)
      types.insert(*p.type);
    else
      saw_untyped_bi = true;
  }
  if (saw_untyped_bi && !types.empty())
    throw InvalidTagsError("alphabet mixes typed and untyped B/I tags");
  if (types.empty()) {
    scheme.kind = TagSchemeKind::untyped_bio;
  } else {
    scheme.kind = TagSchemeKind::typed_bio;
    scheme.types.assign(types.begin(), types.end());
  }
  return scheme;
}

Corpus collapse_types(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& sent : out.sentences) {
    for (auto& tok : sent.tokens) {
      ParsedTag p = parse_tag(tok.tag);
      if (!p.valid)
        throw InvalidTagsError("tag outside BIO grammar: " + tok.tag);
      switch (p.kind) {
        case ParsedTag::O: tok.tag = "O"; break;
        case ParsedTag::B: tok.tag = "B"; break;
        case ParsedTag::I: tok.tag = "I"; break;
      }
    }
  }
  out.rebuild_tag_alphabet();
  return out;
}

Corpus filter_entity_type(const Corpus& corpus, const std::string& keep) {
  Corpus out = corpus;
  for (auto& sent : out.sentences) {
    for (auto& tok : sent.tokens) {
      ParsedTag p = parse_tag(tok.tag);
      if (!p.valid)
        throw InvalidTagsError("tag outside BIO grammar: " + tok.tag);
      if (p.kind == ParsedTag::O) continue;
      if (!p.type)
        throw InvalidTagsError(
            "filter_entity_type needs a typed corpus, found: " + tok.tag);
      if (*p.type != keep) tok.tag = "O";
    }
  }
  out.rebuild_tag_alphabet();
  return out;
}

std::vector<Span> decode_spans(const std::vector<std::string>& tags) {
  std::vector<Span> spans;
  bool open = false;
  Span cur;
  auto close = [&](size_t end) {
    if (open) {
      cur.end = end;
      spans.push_back(cur);
      open = false;
    }
  };
  for (size_t i = 0; i < tags.size(); ++i) {
    ParsedTag p = parse_tag(tags[i]);
    if (!p.valid)
      throw InvalidTagsError("tag outside BIO grammar: " + tags[i]);
    if (p.kind == ParsedTag::O) {
      close(i);
    } else if (p.kind == ParsedTag::B) {
      close(i);
      open = true;
      cur = Span{i, i, p.type, ""};
    } else {  // I: continues a same-type span, otherwise acts as B
      if (open && cur.entity_type == p.type) continue;
      close(i);
      open = true;
      cur = Span{i, i, p.type, ""};
    }
  }
  close(tags.size());
  return spans;
}

std::vector<Span> decode_spans(const Sentence& sentence) {
  std::vector<Span> spans = decode_spans(sentence.tags());
  for (Span& span : spans) {
    std::string mention;
    for (size_t i = span.start; i < span.end; ++i) {
      if (i > span.start) mention += ' ';
      mention += sentence.tokens[i].surface;
    }
    span.mention = std::move(mention);
  }
  return spans;
}

std::vector<std::string> encode_tags(const std::vector<Span>& spans,
                                     size_t sentence_length) {
  std::vector<std::string> tags(sentence_length, "O");
  for (const Span& span : spans) {
    if (span.start >= span.end || span.end > sentence_length)
      throw InvariantError("span out of range");
    for (size_t i = span.start; i < span.end; ++i) {
      if (tags[i] != "O") throw InvariantError("overlapping spans");
      std::string prefix = i == span.start ? "B" : "I";
      tags[i] = span.entity_type ? prefix + "-" + *span.entity_type : prefix;
    }
  }
  return tags;
}

Corpus repair_orphans(const Corpus& corpus) {
  Corpus out = corpus;
  for (auto& sent : out.sentences) {
    ParsedTag prev;
    for (auto& tok : sent.tokens) {
      ParsedTag cur = parse_tag(tok.tag);
      if (!cur.valid)
        throw InvalidTagsError("tag outside BIO grammar: " + tok.tag);
      if (cur.kind == ParsedTag::I) {
        bool continues = (prev.kind == ParsedTag::B ||
                          prev.kind == ParsedTag::I) &&
                         prev.type == cur.type;
        if (!continues) {
          tok.tag = cur.type ? "B-" + *cur.type : "B";
          cur.kind = ParsedTag::B;
        }
      }
      prev = cur;
    }
  }
  out.rebuild_tag_alphabet();
  return out;
}

}  // namespace gerbera

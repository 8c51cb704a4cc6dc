#include "gerbera/corpus.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gerbera/error.hpp"
#include "gerbera/tagset.hpp"

namespace gerbera {

std::string to_string(DomainKind k) {
  return k == DomainKind::biomedical ? "biomedical" : "general";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::dev: return "dev";
    default: return "test";
  }
}

std::vector<std::string> Sentence::tags() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.tag);
  return out;
}

std::vector<std::string> Sentence::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  for (const auto& t : tokens) out.push_back(t.surface);
  return out;
}

void Corpus::rebuild_tag_alphabet() {
  tag_alphabet.clear();
  for (const auto& s : sentences)
    for (const auto& t : s.tokens) tag_alphabet.insert(t.tag);
}

bool valid_utf8(const std::string& text) {
  size_t i = 0;
  const auto* s = reinterpret_cast<const unsigned char*>(text.data());
  size_t n = text.size();
  while (i < n) {
    unsigned char c = s[i];
    size_t extra;
    unsigned cp_min;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xe0) == 0xc0) {
      extra = 1;
      cp_min = 0x80;
    } else if ((c & 0xf0) == 0xe0) {
      extra = 2;
      cp_min = 0x800;
    } else if ((c & 0xf8) == 0xf0) {
      extra = 3;
      cp_min = 0x10000;
    } else {
      return false;
    }
    if (i + extra >= n) return false;  // truncated sequence
    unsigned cp = c & (0x3f >> extra);
    for (size_t k = 1; k <= extra; ++k) {
      if ((s[i + k] & 0xc0) != 0x80) return false;
      cp = (cp << 6) | (s[i + k] & 0x3f);
    }
    if (cp < cp_min) return false;                  // overlong
    if (cp > 0x10ffff) return false;                // out of range
    if (cp >= 0xd800 && cp <= 0xdfff) return false; // surrogate
    i += extra + 1;
  }
  return true;
}

namespace {

std::vector<std::string> split_columns(const std::string& line) {
  std::vector<std::string> cols;
  size_t i = 0, n = line.size();
  while (i < n) {
    while (i < n && (line[i] == ' ' || line[i] == '\t')) ++i;
    size_t start = i;
    while (i < n && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) cols.push_back(line.substr(start, i - start));
  }
  return cols;
}

bool blank_line(const std::string& line) {
  for (char c : line)
    if (c != ' ' && c != '\t' && c != '\r') return false;
  return true;
}

}  // namespace

ParseOutcome parse_conll_full(const std::string& raw_text,
                              const FormatConfig& config) {
  if (!valid_utf8(raw_text))
    throw EncodingError("input is not valid UTF-8");

  ParseOutcome out;
  Corpus& corpus = out.corpus;
  Sentence current;

  auto flush = [&] {
    if (!current.tokens.empty()) {
      corpus.sentences.push_back(std::move(current));
      current = Sentence{};
    }
  };

  std::istringstream in(raw_text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (blank_line(line)) {
      flush();
      continue;
    }
    if (line.rfind("-DOCSTART-", 0) == 0) continue;

    std::vector<std::string> cols = split_columns(line);
    size_t tag_col = config.tag_column < 0
                         ? cols.size() - 1
                         : static_cast<size_t>(config.tag_column);
    size_t need = std::max(config.token_column, tag_col) + 1;
    if (config.concept_column)
      need = std::max(need, *config.concept_column + 1);
    bool bad = cols.size() < need || tag_col == config.token_column;
    if (bad) {
      if (config.mode == ParseMode::strict)
        throw ParseError("malformed line: expected at least " +
                             std::to_string(need) + " columns, got " +
                             std::to_string(cols.size()),
                         line_no);
      out.skipped.push_back({line_no, line, "wrong column count"});
      continue;
    }

    Token tok;
    tok.surface = cols[config.token_column];
    tok.tag = cols[tag_col];
    if (config.concept_column) {
      const std::string& cid = cols[*config.concept_column];
      // "-" and "_" are the usual placeholders for "no id".
      if (!cid.empty() && cid != "-" && cid != "_") tok.concept_id = cid;
    }
    corpus.tag_alphabet.insert(tok.tag);
    current.tokens.push_back(std::move(tok));
  }
  flush();
  return out;
}

Corpus parse_conll(const std::string& raw_text, const FormatConfig& config) {
  return parse_conll_full(raw_text, config).corpus;
}

Corpus load_corpus_file(const std::string& path, const FormatConfig& config,
                        const std::string& name, DomainKind domain,
                        Split split) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  Corpus c = parse_conll(buf.str(), config);
  c.name = name;
  c.domain_kind = domain;
  c.split = split;
  return c;
}

std::vector<Violation> validate_bio(const Corpus& corpus) {
  std::vector<Violation> violations;
  for (size_t si = 0; si < corpus.sentences.size(); ++si) {
    const Sentence& sent = corpus.sentences[si];
    ParsedTag prev;  // O before the sentence start
    for (size_t ti = 0; ti < sent.tokens.size(); ++ti) {
      const std::string& tag = sent.tokens[ti].tag;
      ParsedTag cur = parse_tag(tag);
      if (!cur.valid) {
        violations.push_back({si, ti, tag, "tag outside BIO grammar"});
        prev = ParsedTag{};  // treat as O for the continuation check
        continue;
      }
      if (cur.kind == ParsedTag::I) {
        bool continues = (prev.kind == ParsedTag::B ||
                          prev.kind == ParsedTag::I) &&
                         prev.type == cur.type;
        if (!continues) violations.push_back({si, ti, tag, "orphan I"});
      }
      prev = cur;
    }
  }
  return violations;
}

CorpusStats corpus_stats(const Corpus& corpus) {
  auto violations = validate_bio(corpus);
  if (!violations.empty()) {
    const Violation& v = violations.front();
    throw InvalidTagsError(
        "corpus has " + std::to_string(violations.size()) +
        " BIO violation(s); first: \"" + v.tag + "\" (" + v.reason +
        ") at sentence " + std::to_string(v.sentence_index) + ", token " +
        std::to_string(v.token_index));
  }

  CorpusStats stats;
  stats.sentence_count = corpus.sentences.size();
  for (const auto& sent : corpus.sentences) {
    stats.token_count += sent.size();
    for (const Span& span : decode_spans(sent.tags())) {
      ++stats.entity_count;
      stats.per_type_entity_counts[span.entity_type.value_or("")]++;
    }
  }
  return stats;
}

std::string serialize_corpus(const Corpus& corpus) {
  std::string out;
  bool first = true;
  for (const auto& sent : corpus.sentences) {
    if (!first) out += '\n';
    first = false;
    for (const auto& tok : sent.tokens) {
      out += tok.surface;
      out += '\t';
      out += tok.tag;
      if (tok.concept_id) {
        out += '\t';
        out += *tok.concept_id;
      }
      out += '\n';
    }
  }
  return out;
}

void save_corpus_file(const Corpus& corpus, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write corpus file: " + path);
  out << serialize_corpus(corpus);
  if (!out) throw DataError("write failed: " + path);
}

std::string stats_to_json(const Corpus& corpus, const CorpusStats& stats) {
  nlohmann::json j;
  j["name"] = corpus.name;
  j["split"] = to_string(corpus.split);
  j["sentence_count"] = stats.sentence_count;
  j["entity_count"] = stats.entity_count;
  j["token_count"] = stats.token_count;
  j["per_type_entity_counts"] = nlohmann::json::object();
  for (const auto& [type, count] : stats.per_type_entity_counts)
    j["per_type_entity_counts"][type] = count;
  return j.dump(2);
}

}  // namespace gerbera

#include "gerbera/mtl_data.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "gerbera/error.hpp"
#include "gerbera/rng.hpp"

namespace gerbera {

namespace {

std::string ascii_fold(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

}  // namespace

int32_t Vocab::lookup(const std::string& surface) const {
  const std::string key = fold_case_ ? ascii_fold(surface) : surface;
  auto it = index_.find(key);
  return it == index_.end() ? kUnk : it->second;
}

Vocab Vocab::from_entries(std::vector<std::string> entries, bool fold_case) {
  Vocab v;
  v.fold_case_ = fold_case;
  v.entries_ = std::move(entries);
  for (size_t i = 0; i < v.entries_.size(); ++i)
    v.index_.emplace(v.entries_[i], static_cast<int32_t>(i + 2));
  return v;
}

Vocab build_vocab(const std::vector<const Corpus*>& corpora, size_t min_freq,
                  bool fold_case) {
  if (corpora.empty()) throw EmptyCorporaError("no corpora given");

  std::unordered_map<std::string, size_t> freq;
  std::vector<std::string> order;  // first-occurrence order
  size_t total_tokens = 0;
  for (const Corpus* c : corpora) {
    for (const auto& sent : c->sentences) {
      for (const auto& tok : sent.tokens) {
        ++total_tokens;
        std::string key = fold_case ? ascii_fold(tok.surface) : tok.surface;
        if (freq[key]++ == 0) order.push_back(std::move(key));
      }
    }
  }
  if (total_tokens == 0) throw EmptyCorporaError("corpora contain no tokens");

  Vocab v;
  v.fold_case_ = fold_case;
  for (auto& key : order) {
    if (freq[key] < min_freq) continue;
    v.index_.emplace(key, static_cast<int32_t>(v.entries_.size() + 2));
    v.entries_.push_back(std::move(key));
  }
  return v;
}

std::vector<TaskSpec> make_task_specs(
    const Corpus& target, const std::vector<const Corpus*>& sources) {
  std::vector<TaskSpec> specs;
  specs.push_back({0, target.name, TaskRole::target,
                   TagScheme::from_alphabet(target.tag_alphabet)});
  int32_t id = 1;
  for (const Corpus* src : sources) {
    specs.push_back({id++, src->name, TaskRole::source,
                     TagScheme::from_alphabet(src->tag_alphabet)});
  }
  return specs;
}

size_t Batch::row_length(size_t r) const {
  size_t len = 0;
  while (len < cols && is_real(r, len)) ++len;
  return len;
}

namespace {

Batch make_batch(const TaskData& task, const Vocab& vocab,
                 const std::vector<size_t>& sentence_ids, size_t max_len) {
  Batch b;
  b.task_id = task.spec.task_id;
  b.rows = sentence_ids.size();
  b.cols = 0;
  for (size_t id : sentence_ids) {
    size_t len = std::min(task.corpus->sentences[id].size(), max_len);
    b.cols = std::max(b.cols, len);
  }
  b.tokens.assign(b.rows * b.cols, Vocab::kPad);
  b.labels.assign(b.rows * b.cols, 0);
  b.mask.assign(b.rows * b.cols, 0);
  for (size_t r = 0; r < b.rows; ++r) {
    const Sentence& sent = task.corpus->sentences[sentence_ids[r]];
    size_t len = std::min(sent.size(), max_len);
    for (size_t c = 0; c < len; ++c) {
      b.tokens[r * b.cols + c] = vocab.lookup(sent.tokens[c].surface);
      b.labels[r * b.cols + c] = static_cast<int32_t>(
          task.spec.label_space.tag_index(sent.tokens[c].tag));
      b.mask[r * b.cols + c] = 1;
    }
  }
  return b;
}

}  // namespace

std::vector<Batch> build_multitask_stream(const std::vector<TaskData>& tasks,
                                          const Vocab& vocab,
                                          size_t batch_size, size_t max_len,
                                          uint64_t seed) {
  if (batch_size == 0) throw InvariantError("batch_size must be >= 1");
  size_t n_targets = 0;
  for (const auto& t : tasks)
    if (t.spec.role == TaskRole::target) ++n_targets;
  if (n_targets != 1)
    throw InvariantError("exactly one target task required, got " +
                         std::to_string(n_targets));

  Rng rng(seed);
  std::vector<Batch> batches;
  for (const auto& task : tasks) {
    Rng task_rng(rng.fork_seed());
    std::vector<size_t> ids(task.corpus->sentences.size());
    for (size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    task_rng.shuffle(ids);
    for (size_t off = 0; off < ids.size(); off += batch_size) {
      size_t end = std::min(off + batch_size, ids.size());
      std::vector<size_t> chunk(ids.begin() + off, ids.begin() + end);
      batches.push_back(make_batch(task, vocab, chunk, max_len));
    }
  }
  rng.shuffle(batches);
  return batches;
}

}  // namespace gerbera

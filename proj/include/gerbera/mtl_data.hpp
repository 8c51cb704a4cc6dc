#ifndef GERBERA_MTL_DATA_HPP
#define GERBERA_MTL_DATA_HPP

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "gerbera/corpus.hpp"
#include "gerbera/tagset.hpp"

namespace gerbera {

// Surface -> index map with reserved PAD=0 and UNK=1. Built from training
// splits only; indices follow first occurrence, so a vocabulary is a pure
// function of the corpora order.
class Vocab {
 public:
  static constexpr int32_t kPad = 0;
  static constexpr int32_t kUnk = 1;

  Vocab() = default;

  int32_t lookup(const std::string& surface) const;
  size_t size() const { return entries_.size() + 2; }
  bool fold_case() const { return fold_case_; }

  // Surfaces for indices 2..size()-1, in index order.
  const std::vector<std::string>& entries() const { return entries_; }

  // Rebuilds the map from a serialized entry list (checkpoint load).
  static Vocab from_entries(std::vector<std::string> entries, bool fold_case);

  friend Vocab build_vocab(const std::vector<const Corpus*>&, size_t, bool);

 private:
  std::vector<std::string> entries_;
  std::unordered_map<std::string, int32_t> index_;
  bool fold_case_ = false;
};

// Every surface with frequency >= min_freq gets an index; everything else
// resolves to UNK at lookup time. Throws EmptyCorporaError when there is
// nothing to build from.
Vocab build_vocab(const std::vector<const Corpus*>& corpora, size_t min_freq,
                  bool fold_case);

enum class TaskRole { target, source };

struct TaskSpec {
  int32_t task_id = 0;
  std::string corpus_name;
  TaskRole role = TaskRole::target;
  TagScheme label_space;
};

// Assigns task_id 0 to the target and 1..n to the sources, deriving each
// label space from the corpus tag alphabet.
std::vector<TaskSpec> make_task_specs(const Corpus& target,
                                      const std::vector<const Corpus*>& sources);

// One task-homogeneous padded batch. Row-major rows x cols; cols is the
// longest (truncated) sentence in the batch. mask is 1 exactly on real
// tokens, labels are class indices under the owning task's label space.
struct Batch {
  int32_t task_id = 0;
  size_t rows = 0;
  size_t cols = 0;
  std::vector<int32_t> tokens;  // PAD-padded
  std::vector<int32_t> labels;  // 0-padded, masked out
  std::vector<uint8_t> mask;

  int32_t token(size_t r, size_t c) const { return tokens[r * cols + c]; }
  int32_t label(size_t r, size_t c) const { return labels[r * cols + c]; }
  bool is_real(size_t r, size_t c) const { return mask[r * cols + c] != 0; }
  // Number of real tokens in a row. Padding is always a suffix.
  size_t row_length(size_t r) const;
};

struct TaskData {
  TaskSpec spec;
  const Corpus* corpus = nullptr;
};

// One epoch of task-homogeneous batches: every sentence of every task
// appears exactly once (truncated to max_len), sentences are shuffled
// within their task, and the combined batch list is shuffled across tasks.
// Identical seeds give byte-identical streams.
std::vector<Batch> build_multitask_stream(const std::vector<TaskData>& tasks,
                                          const Vocab& vocab,
                                          size_t batch_size, size_t max_len,
                                          uint64_t seed);

}  // namespace gerbera

#endif  // GERBERA_MTL_DATA_HPP

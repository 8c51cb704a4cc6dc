#ifndef GERBERA_MODEL_HPP
#define GERBERA_MODEL_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gerbera/mtl_data.hpp"
#include "gerbera/rng.hpp"

namespace gerbera {

struct ModelConfig {
  size_t vocab_size = 0;         // includes PAD and UNK
  size_t embed_dim = 32;
  size_t encoder_hidden_dim = 48;  // per direction
  size_t head_hidden_dim = 32;
  double dropout_rate = 0.0;     // on embeddings and encoder output
  uint64_t init_seed = 1;

  void validate() const;
};

// Dual-layer MLP with a ReLU between, one per task, mapping the encoder
// state to class logits over that task's label space.
struct TaskHead {
  Eigen::MatrixXd w1;  // head_hidden x 2*encoder_hidden
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // n_classes x head_hidden
  Eigen::VectorXd b2;
};

struct Gradients {
  Eigen::MatrixXd embedding;
  Eigen::MatrixXd wf, uf;
  Eigen::VectorXd bf;
  Eigen::MatrixXd wb, ub;
  Eigen::VectorXd bb;
  // Only the task whose batch produced the gradients has an entry here;
  // absent heads received exactly zero gradient.
  std::map<int32_t, TaskHead> heads;
};

// Cached activations for one batch row (one sentence), kept for backward.
struct RowCache {
  std::vector<int32_t> token_ids;  // true (unpadded) tokens
  std::vector<int32_t> labels;
  Eigen::MatrixXd x;        // embed_dim x len, after embedding dropout
  Eigen::MatrixXd drop_x;   // scaled dropout mask, empty when unused
  Eigen::MatrixXd h;        // hidden x len, forward direction
  Eigen::MatrixXd g;        // hidden x len, backward direction
  Eigen::MatrixXd enc;      // 2*hidden x len, after encoder dropout
  Eigen::MatrixXd drop_enc;
  Eigen::MatrixXd a;        // head_hidden x len, post-ReLU
  Eigen::MatrixXd probs;    // n_classes x len
  Eigen::MatrixXd logprobs;
};

struct ForwardOutput {
  int32_t task_id = 0;
  bool train_mode = false;
  uint64_t model_version = 0;  // guards against backward-after-mutation
  std::vector<RowCache> rows;

  // Per-token class probabilities of a row, classes x len.
  const Eigen::MatrixXd& probabilities(size_t row) const {
    return rows[row].probs;
  }
};

// Embedding + bidirectional tanh recurrent encoder shared across tasks,
// plus one TaskHead per registered task. All math is double precision.
class TaggerModel {
 public:
  TaggerModel() : dropout_rng_(0) {}

  ModelConfig config;
  Vocab vocab;
  std::vector<TaskSpec> tasks;

  Eigen::MatrixXd embedding;  // vocab_size x embed_dim
  Eigen::MatrixXd wf, uf;     // forward recurrence
  Eigen::VectorXd bf;
  Eigen::MatrixXd wb, ub;     // backward recurrence
  Eigen::VectorXd bb;
  std::map<int32_t, TaskHead> heads;

  const TaskSpec& task(int32_t task_id) const;
  bool has_task(int32_t task_id) const;

  uint64_t version() const { return version_; }
  // Call after any parameter mutation so stale ForwardOutputs are rejected.
  void bump_version() { ++version_; }

  // Dropout draws come from this stream; reseeding makes a stochastic
  // forward reproducible (finite-difference tests rely on it).
  void reseed_dropout(uint64_t seed) { dropout_rng_ = Rng(seed); }
  Rng& dropout_rng() { return dropout_rng_; }

 private:
  uint64_t version_ = 0;
  Rng dropout_rng_;
};

// Flat view of one parameter (or gradient) tensor. Data is Eigen-native
// column-major.
struct TensorRef {
  std::string name;
  double* data = nullptr;
  size_t rows = 0;
  size_t cols = 0;
  size_t size() const { return rows * cols; }
};

// Every parameter tensor in a fixed order: embedding, wf, uf, bf, wb, ub,
// bb, then head<id>.{w1,b1,w2,b2} per registered task. Gradient tensors
// use the same names but list only the heads the batch touched.
std::vector<TensorRef> parameter_tensors(TaggerModel& model);
std::vector<TensorRef> gradient_tensors(Gradients& grads);

// Seeded fan-in-scaled uniform initialization; weights U(-1/sqrt(fan_in),
// +1/sqrt(fan_in)), biases zero. Throws DuplicateTaskError / NoTasksError.
TaggerModel init_model(const ModelConfig& config,
                       const std::vector<TaskSpec>& tasks, Vocab vocab);

// Softmax probabilities per real token under the batch's task head.
// Dropout is active only in train mode. Throws UnknownTaskError.
ForwardOutput forward(TaggerModel& model, const Batch& batch,
                      bool train_mode);

// Mean masked NLL of the batch given gold labels already inside `output`'s
// cache rows; returns the loss value.
double batch_nll(const ForwardOutput& output);

// Gradients of the batch mean NLL w.r.t. every parameter touched. Throws
// StaleCacheError when the model changed since `forward`.
Gradients backward(const TaggerModel& model, const ForwardOutput& output);

// Argmax tags for one sentence under a task's label space; ties break
// toward the lowest class index (O, then B, then I).
std::vector<std::string> predict_tags(TaggerModel& model,
                                      const Sentence& sentence,
                                      int32_t task_id);

// Binary checkpoint, little-endian (see docs/checkpoint_format.md).
void save_checkpoint(const TaggerModel& model, const std::string& path);
TaggerModel load_checkpoint(const std::string& path);

}  // namespace gerbera

#endif  // GERBERA_MODEL_HPP

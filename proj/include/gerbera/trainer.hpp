#ifndef GERBERA_TRAINER_HPP
#define GERBERA_TRAINER_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gerbera/evaluator.hpp"
#include "gerbera/model.hpp"

namespace gerbera {

enum class OptimizerKind { sgd, adaptive_moment };
enum class SelectionMetric { dev_f1, final_epoch };

struct TrainConfig {
  double learning_rate = 1e-3;
  size_t batch_size = 16;
  size_t max_epochs_phase1 = 10;
  size_t max_epochs_phase2 = 10;
  size_t max_len = 128;
  uint64_t seed = 1;
  OptimizerKind optimizer = OptimizerKind::adaptive_moment;
  SelectionMetric selection = SelectionMetric::dev_f1;
  size_t patience = 3;  // phase-2 early stop on dev F1; 0 disables
  bool reset_optimizer_between_phases = true;
  size_t vocab_min_freq = 1;
  bool vocab_fold_case = false;

  void validate() const;

  // Hyperparameters as published for the pretrained-LM setup; kept as a
  // reference preset. A from-scratch encoder needs the larger desk steps.
  static TrainConfig paper_preset();
  static TrainConfig desk_preset();
};

struct EpochRecord {
  int phase = 1;
  size_t epoch = 0;  // 0-based within its phase
  std::map<int32_t, double> task_mean_loss;
  std::optional<double> dev_loss;
  std::optional<double> dev_precision;
  std::optional<double> dev_recall;
  std::optional<double> dev_f1;
  bool selected = false;
  bool overfit_flag = false;
  double wall_time_ms = 0.0;
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::vector<std::string> warnings;

  void append(TrainLog other);
  // One JSON object per line, keys sorted. Timing is observational and
  // excluded from the canonical (deterministic) form.
  std::string to_jsonl(bool include_timing = true) const;
};

struct CorpusTriple {
  Corpus train;
  std::optional<Corpus> dev;
  std::optional<Corpus> test;
};

// SGD or bias-corrected adaptive-moment updates. Moment state is kept per
// tensor name and only tensors present in the gradient step advance, so a
// frozen head's parameters never move.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);
  void step(TaggerModel& model, Gradients& grads);
  void reset();

 private:
  struct Moments {
    std::vector<double> m, v;
    uint64_t t = 0;
  };
  OptimizerKind kind_;
  double lr_;
  std::map<std::string, Moments> state_;
};

// Mean NLL over all labeled tokens of a batch collection (dropout off).
// Throws EmptyTaskError when the collection has zero labeled tokens.
double task_mean_nll(TaggerModel& model, const std::vector<Batch>& batches);

// The two-term objective: target mean NLL plus source mean NLL.
double mtl_loss(TaggerModel& model, const std::vector<Batch>& target_batches,
                const std::vector<Batch>& source_batches);

// Multi-task phase over the merged stream. One optimizer step per
// task-homogeneous batch. dev, when given, adds per-epoch dev metrics.
TrainLog train_phase1(TaggerModel& model, Optimizer& opt,
                      const Corpus& target_train,
                      const std::vector<const Corpus*>& source_trains,
                      const TrainConfig& cfg, const Corpus* dev);

// Target-only fine-tuning with dev-F1 model selection; the best epoch's
// parameters are restored into `model` on return.
TrainLog train_phase2(TaggerModel& model, Optimizer& opt,
                      const Corpus& target_train, const TrainConfig& cfg,
                      const Corpus* dev);

struct GerberaRun {
  TaggerModel model;
  TrainLog log;
};

// Vocab build, model init, phase 1 over target+sources, phase 2 on the
// target. Empty `sources` gives the single-task baseline. Deterministic
// for fixed (corpora, configs, seed).
GerberaRun run_gerbera(const CorpusTriple& target,
                       const std::vector<Corpus>& sources,
                       const ModelConfig& model_cfg, const TrainConfig& cfg);

// Copy of `input` with the tag column replaced by model predictions.
Corpus predict_corpus(TaggerModel& model, const Corpus& input,
                      int32_t task_id);

// Dev-set strict F1 of the current model on task `task_id`.
EvalReport evaluate_model(TaggerModel& model, const Corpus& gold,
                          int32_t task_id);

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::map<std::string, double> per_tensor;
};

// Analytic gradients of the two-term loss vs central finite differences
// (step 1e-5) on a seeded toy model.
GradCheckReport grad_check(const ModelConfig& config, uint64_t seed);

}  // namespace gerbera

#endif  // GERBERA_TRAINER_HPP

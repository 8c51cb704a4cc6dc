#include "gerbera/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gerbera/error.hpp"

namespace gerbera {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvariantError("learning_rate must be > 0");
  if (batch_size < 1) throw InvariantError("batch_size must be >= 1");
  if (max_len < 1) throw InvariantError("max_len must be >= 1");
}

TrainConfig TrainConfig::paper_preset() {
  TrainConfig cfg;
  cfg.learning_rate = 3e-5;
  cfg.batch_size = 16;
  cfg.max_epochs_phase1 = 10;
  cfg.max_epochs_phase2 = 10;
  cfg.max_len = 128;
  cfg.optimizer = OptimizerKind::adaptive_moment;
  cfg.selection = SelectionMetric::dev_f1;
  cfg.patience = 0;  // fixed epoch budget, as published
  return cfg;
}

TrainConfig TrainConfig::desk_preset() {
  TrainConfig cfg;
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  cfg.max_epochs_phase1 = 10;
  cfg.max_epochs_phase2 = 10;
  cfg.max_len = 128;
  cfg.optimizer = OptimizerKind::adaptive_moment;
  cfg.selection = SelectionMetric::dev_f1;
  cfg.patience = 3;
  return cfg;
}

void TrainLog::append(TrainLog other) {
  for (auto& e : other.epochs) epochs.push_back(std::move(e));
  for (auto& w : other.warnings) warnings.push_back(std::move(w));
}

std::string TrainLog::to_jsonl(bool include_timing) const {
  std::string out;
  for (const auto& e : epochs) {
    nlohmann::json j;
    j["phase"] = e.phase;
    j["epoch"] = e.epoch;
    j["task_loss"] = nlohmann::json::object();
    for (const auto& [task_id, loss] : e.task_mean_loss)
      j["task_loss"][std::to_string(task_id)] = loss;
    if (e.dev_loss) j["dev_loss"] = *e.dev_loss;
    if (e.dev_precision) j["dev_precision"] = *e.dev_precision;
    if (e.dev_recall) j["dev_recall"] = *e.dev_recall;
    if (e.dev_f1) j["dev_f1"] = *e.dev_f1;
    j["selected"] = e.selected;
    j["overfit_flag"] = e.overfit_flag;
    if (include_timing) j["wall_time_ms"] = e.wall_time_ms;
    out += j.dump();
    out += '\n';
  }
  if (!warnings.empty()) {
    nlohmann::json j;
    j["warnings"] = warnings;
    out += j.dump();
    out += '\n';
  }
  return out;
}

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {}

void Optimizer::reset() { state_.clear(); }

void Optimizer::step(TaggerModel& model, Gradients& grads) {
  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;

  auto params = parameter_tensors(model);
  std::map<std::string, TensorRef> by_name;
  for (auto& p : params) by_name.emplace(p.name, p);

  for (auto& g : gradient_tensors(grads)) {
    auto it = by_name.find(g.name);
    if (it == by_name.end())
      throw InvariantError("gradient for unknown tensor " + g.name);
    TensorRef& p = it->second;
    if (p.rows != g.rows || p.cols != g.cols)
      throw InvariantError("gradient shape mismatch for " + g.name);

    if (kind_ == OptimizerKind::sgd) {
      for (size_t i = 0; i < p.size(); ++i) p.data[i] -= lr_ * g.data[i];
      continue;
    }

    Moments& mom = state_[g.name];
    if (mom.m.empty()) {
      mom.m.assign(p.size(), 0.0);
      mom.v.assign(p.size(), 0.0);
    }
    ++mom.t;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(mom.t));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(mom.t));
    for (size_t i = 0; i < p.size(); ++i) {
      mom.m[i] = kBeta1 * mom.m[i] + (1.0 - kBeta1) * g.data[i];
      mom.v[i] = kBeta2 * mom.v[i] + (1.0 - kBeta2) * g.data[i] * g.data[i];
      const double mhat = mom.m[i] / bc1;
      const double vhat = mom.v[i] / bc2;
      p.data[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
    }
  }
  model.bump_version();
}

namespace {

struct NllSum {
  double total = 0.0;
  size_t tokens = 0;
};

NllSum accumulate_nll(TaggerModel& model, const Batch& batch) {
  ForwardOutput out = forward(model, batch, /*train_mode=*/false);
  NllSum sum;
  for (const RowCache& row : out.rows) {
    for (size_t t = 0; t < row.labels.size(); ++t) {
      sum.total -= row.logprobs(row.labels[t], t);
      ++sum.tokens;
    }
  }
  return sum;
}

}  // namespace

double task_mean_nll(TaggerModel& model, const std::vector<Batch>& batches) {
  NllSum sum;
  for (const Batch& b : batches) {
    NllSum s = accumulate_nll(model, b);
    sum.total += s.total;
    sum.tokens += s.tokens;
  }
  if (sum.tokens == 0)
    throw EmptyTaskError("loss term has zero labeled tokens");
  return sum.total / static_cast<double>(sum.tokens);
}

double mtl_loss(TaggerModel& model, const std::vector<Batch>& target_batches,
                const std::vector<Batch>& source_batches) {
  return task_mean_nll(model, target_batches) +
         task_mean_nll(model, source_batches);
}

Corpus predict_corpus(TaggerModel& model, const Corpus& input,
                      int32_t task_id) {
  Corpus pred = input;
  for (auto& sent : pred.sentences) {
    std::vector<std::string> tags = predict_tags(model, sent, task_id);
    for (size_t t = 0; t < tags.size(); ++t) sent.tokens[t].tag = tags[t];
  }
  pred.rebuild_tag_alphabet();
  return pred;
}

EvalReport evaluate_model(TaggerModel& model, const Corpus& gold,
                          int32_t task_id) {
  return evaluate_corpora(repair_orphans(gold),
                          predict_corpus(model, gold, task_id));
}

namespace {

// Builds single-task batches for loss evaluation (unshuffled chunks).
std::vector<Batch> eval_batches(const Corpus& corpus, const TaskSpec& spec,
                                const Vocab& vocab, size_t batch_size,
                                size_t max_len) {
  TaskData td{spec, &corpus};
  std::vector<Batch> out;
  std::vector<TaskData> tasks{td};
  // A fixed seed gives a deterministic (and irrelevant) batch order.
  return build_multitask_stream(tasks, vocab, batch_size, max_len, 0);
}

struct DevMetrics {
  double loss = 0.0;
  EvalReport report;
};

DevMetrics compute_dev_metrics(TaggerModel& model, const Corpus& dev,
                               const TrainConfig& cfg) {
  DevMetrics m;
  const TaskSpec& spec = model.task(0);
  m.loss = task_mean_nll(
      model, eval_batches(dev, spec, model.vocab, cfg.batch_size, cfg.max_len));
  m.report = evaluate_model(model, dev, 0);
  return m;
}

// Flags epochs where training loss stays far below dev loss, the published
// overfitting filter. Two consecutive epochs count as "persistent".
class OverfitWatch {
 public:
  bool observe(double train_loss, double dev_loss) {
    if (train_loss < 0.5 * dev_loss)
      ++streak_;
    else
      streak_ = 0;
    return streak_ >= 2;
  }

 private:
  int streak_ = 0;
};

double ms_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double, std::milli>(
             std::chrono::steady_clock::now() - start)
      .count();
}

}  // namespace

TrainLog train_phase1(TaggerModel& model, Optimizer& opt,
                      const Corpus& target_train,
                      const std::vector<const Corpus*>& source_trains,
                      const TrainConfig& cfg, const Corpus* dev) {
  cfg.validate();
  TrainLog log;
  if (cfg.max_epochs_phase1 == 0) return log;

  std::vector<TaskData> tasks;
  tasks.push_back({model.task(0), &target_train});
  for (size_t i = 0; i < source_trains.size(); ++i)
    tasks.push_back(
        {model.task(static_cast<int32_t>(i + 1)), source_trains[i]});

  Rng epoch_rng(cfg.seed);
  OverfitWatch watch;
  for (size_t epoch = 0; epoch < cfg.max_epochs_phase1; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    std::vector<Batch> stream = build_multitask_stream(
        tasks, model.vocab, cfg.batch_size, cfg.max_len, epoch_rng.fork_seed());

    std::map<int32_t, NllSum> task_sums;
    for (const Batch& batch : stream) {
      ForwardOutput out = forward(model, batch, /*train_mode=*/true);
      NllSum& sum = task_sums[batch.task_id];
      for (const RowCache& row : out.rows) {
        for (size_t t = 0; t < row.labels.size(); ++t) {
          sum.total -= row.logprobs(row.labels[t], t);
          ++sum.tokens;
        }
      }
      Gradients grads = backward(model, out);
      opt.step(model, grads);
    }

    EpochRecord rec;
    rec.phase = 1;
    rec.epoch = epoch;
    for (const auto& [task_id, sum] : task_sums)
      rec.task_mean_loss[task_id] =
          sum.tokens == 0 ? 0.0 : sum.total / static_cast<double>(sum.tokens);
    if (dev) {
      DevMetrics m = compute_dev_metrics(model, *dev, cfg);
      rec.dev_loss = m.loss;
      rec.dev_precision = m.report.precision;
      rec.dev_recall = m.report.recall;
      rec.dev_f1 = m.report.f1;
      double train_loss = rec.task_mean_loss.count(0) ? rec.task_mean_loss[0]
                                                      : 0.0;
      rec.overfit_flag = watch.observe(train_loss, m.loss);
    }
    rec.wall_time_ms = ms_since(start);
    log.epochs.push_back(std::move(rec));
  }
  return log;
}

TrainLog train_phase2(TaggerModel& model, Optimizer& opt,
                      const Corpus& target_train, const TrainConfig& cfg,
                      const Corpus* dev) {
  cfg.validate();
  if (!model.has_task(0))
    throw UnknownTaskError("model carries no target task (id 0)");

  TrainLog log;
  if (cfg.max_epochs_phase2 == 0) return log;

  const bool select_on_dev =
      cfg.selection == SelectionMetric::dev_f1 && dev != nullptr;
  if (cfg.selection == SelectionMetric::dev_f1 && dev == nullptr)
    log.warnings.push_back(
        "selection metric dev_f1 requested but no dev split given; "
        "falling back to the final epoch");

  std::vector<TaskData> tasks{{model.task(0), &target_train}};

  Rng epoch_rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);  // distinct phase stream
  OverfitWatch watch;
  double best_f1 = -1.0;
  size_t best_epoch = 0;
  TaggerModel best_model;
  size_t no_improve = 0;

  for (size_t epoch = 0; epoch < cfg.max_epochs_phase2; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    std::vector<Batch> stream = build_multitask_stream(
        tasks, model.vocab, cfg.batch_size, cfg.max_len, epoch_rng.fork_seed());

    NllSum sum;
    for (const Batch& batch : stream) {
      ForwardOutput out = forward(model, batch, /*train_mode=*/true);
      for (const RowCache& row : out.rows) {
        for (size_t t = 0; t < row.labels.size(); ++t) {
          sum.total -= row.logprobs(row.labels[t], t);
          ++sum.tokens;
        }
      }
      Gradients grads = backward(model, out);
      opt.step(model, grads);
    }

    EpochRecord rec;
    rec.phase = 2;
    rec.epoch = epoch;
    rec.task_mean_loss[0] =
        sum.tokens == 0 ? 0.0 : sum.total / static_cast<double>(sum.tokens);

    if (dev) {
      DevMetrics m = compute_dev_metrics(model, *dev, cfg);
      rec.dev_loss = m.loss;
      rec.dev_precision = m.report.precision;
      rec.dev_recall = m.report.recall;
      rec.dev_f1 = m.report.f1;
      rec.overfit_flag = watch.observe(rec.task_mean_loss[0], m.loss);

      if (select_on_dev) {
        if (m.report.f1 > best_f1) {
          best_f1 = m.report.f1;
          best_epoch = epoch;
          best_model = model;
          no_improve = 0;
        } else {
          ++no_improve;
        }
      }
    }
    rec.wall_time_ms = ms_since(start);
    log.epochs.push_back(std::move(rec));

    if (select_on_dev && cfg.patience > 0 && no_improve >= cfg.patience) {
      log.warnings.push_back("early stop after phase-2 epoch " +
                             std::to_string(epoch) + ": dev F1 stalled for " +
                             std::to_string(cfg.patience) + " epochs");
      break;
    }
  }

  if (select_on_dev && best_f1 >= 0.0) {
    model = best_model;
    log.epochs[best_epoch].selected = true;
  } else if (!log.epochs.empty()) {
    log.epochs.back().selected = true;
  }
  return log;
}

GerberaRun run_gerbera(const CorpusTriple& target,
                       const std::vector<Corpus>& sources,
                       const ModelConfig& model_cfg, const TrainConfig& cfg) {
  cfg.validate();
  if (target.train.sentences.empty())
    throw EmptyCorporaError("target train split is empty");

  std::vector<const Corpus*> source_ptrs;
  for (const Corpus& s : sources) source_ptrs.push_back(&s);

  std::vector<const Corpus*> vocab_sources{&target.train};
  vocab_sources.insert(vocab_sources.end(), source_ptrs.begin(),
                       source_ptrs.end());
  Vocab vocab =
      build_vocab(vocab_sources, cfg.vocab_min_freq, cfg.vocab_fold_case);

  std::vector<TaskSpec> specs = make_task_specs(target.train, source_ptrs);

  ModelConfig mc = model_cfg;
  mc.vocab_size = vocab.size();
  mc.init_seed = cfg.seed;

  GerberaRun run;
  run.model = init_model(mc, specs, std::move(vocab));

  Optimizer opt(cfg.optimizer, cfg.learning_rate);
  const Corpus* dev = target.dev ? &*target.dev : nullptr;
  run.log = train_phase1(run.model, opt, target.train, source_ptrs, cfg, dev);
  if (cfg.reset_optimizer_between_phases) opt.reset();
  run.log.append(train_phase2(run.model, opt, target.train, cfg, dev));

  // Exactly one selected epoch per run; with no phase-2 epochs the last
  // phase-1 epoch stands in.
  bool any_selected = false;
  for (const auto& e : run.log.epochs) any_selected |= e.selected;
  if (!any_selected && !run.log.epochs.empty())
    run.log.epochs.back().selected = true;
  return run;
}

GradCheckReport grad_check(const ModelConfig& config, uint64_t seed) {
  Rng rng(seed);

  // Toy vocab: a handful of invented surfaces.
  std::vector<std::string> entries;
  for (int i = 0; i < 12; ++i) entries.push_back("w" + std::to_string(i));
  Vocab vocab = Vocab::from_entries(entries, false);

  TagScheme untyped;
  std::vector<TaskSpec> specs{
      {0, "toy-target", TaskRole::target, untyped},
      {1, "toy-source", TaskRole::source, untyped},
  };

  ModelConfig mc = config;
  mc.vocab_size = vocab.size();
  mc.init_seed = rng.fork_seed();
  TaggerModel model = init_model(mc, specs, std::move(vocab));

  auto random_batch = [&](int32_t task_id) {
    Batch b;
    b.task_id = task_id;
    b.rows = 2;
    b.cols = 5;
    b.tokens.resize(b.rows * b.cols);
    b.labels.resize(b.rows * b.cols);
    b.mask.resize(b.rows * b.cols);
    for (size_t r = 0; r < b.rows; ++r) {
      size_t len = 3 + rng.below(3);  // 3..5 real tokens
      for (size_t c = 0; c < b.cols; ++c) {
        bool real = c < len;
        b.tokens[r * b.cols + c] =
            real ? static_cast<int32_t>(2 + rng.below(12)) : Vocab::kPad;
        b.labels[r * b.cols + c] =
            real ? static_cast<int32_t>(rng.below(3)) : 0;
        b.mask[r * b.cols + c] = real ? 1 : 0;
      }
    }
    return b;
  };

  std::vector<Batch> target_batches{random_batch(0)};
  std::vector<Batch> source_batches{random_batch(1)};

  // Analytic gradient of the two-term loss: each term is a whole-dataset
  // batch, so the batch means are the term means.
  ForwardOutput out_t = forward(model, target_batches[0], false);
  Gradients g_target = backward(model, out_t);
  ForwardOutput out_s = forward(model, source_batches[0], false);
  Gradients g_source = backward(model, out_s);

  std::map<std::string, std::vector<double>> analytic;
  for (auto& t : gradient_tensors(g_target))
    analytic[t.name].assign(t.data, t.data + t.size());
  for (auto& t : gradient_tensors(g_source)) {
    auto& acc = analytic[t.name];
    if (acc.empty())
      acc.assign(t.data, t.data + t.size());
    else
      for (size_t i = 0; i < t.size(); ++i) acc[i] += t.data[i];
  }

  const double h = 1e-5;
  GradCheckReport report;
  for (auto& p : parameter_tensors(model)) {
    const auto& ga = analytic.at(p.name);
    double worst = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
      const double saved = p.data[i];
      p.data[i] = saved + h;
      const double up = mtl_loss(model, target_batches, source_batches);
      p.data[i] = saved - h;
      const double down = mtl_loss(model, target_batches, source_batches);
      p.data[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double denom =
          std::max(std::max(std::abs(ga[i]), std::abs(numeric)), 1e-4);
      worst = std::max(worst, std::abs(ga[i] - numeric) / denom);
    }
    report.per_tensor[p.name] = worst;
    report.max_rel_error = std::max(report.max_rel_error, worst);
  }
  return report;
}

}  // namespace gerbera

#include "gerbera/model.hpp"

#include <algorithm>
#include <cmath>

#include "gerbera/error.hpp"

namespace gerbera {

void ModelConfig::validate() const {
  if (vocab_size < 2) throw InvariantError("vocab_size must cover PAD/UNK");
  if (embed_dim < 1 || encoder_hidden_dim < 1 || head_hidden_dim < 1)
    throw InvariantError("model dimensions must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
    throw InvariantError("dropout_rate must lie in [0,1)");
}

const TaskSpec& TaggerModel::task(int32_t task_id) const {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return t;
  throw UnknownTaskError("no task with id " + std::to_string(task_id));
}

bool TaggerModel::has_task(int32_t task_id) const {
  for (const auto& t : tasks)
    if (t.task_id == task_id) return true;
  return false;
}

namespace {

void fill_uniform(Eigen::MatrixXd& m, size_t fan_in, Rng& rng) {
  const double a = 1.0 / std::sqrt(static_cast<double>(fan_in));
  // Row-major draw order keeps init independent of Eigen's storage layout.
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-a, a);
}

}  // namespace

TaggerModel init_model(const ModelConfig& config,
                       const std::vector<TaskSpec>& tasks, Vocab vocab) {
  config.validate();
  if (tasks.empty()) throw NoTasksError("at least one task is required");
  for (size_t i = 0; i < tasks.size(); ++i)
    for (size_t j = i + 1; j < tasks.size(); ++j)
      if (tasks[i].task_id == tasks[j].task_id)
        throw DuplicateTaskError("duplicate task id " +
                                 std::to_string(tasks[i].task_id));
  if (vocab.size() != config.vocab_size)
    throw InvariantError("config.vocab_size does not match the vocab");

  TaggerModel m;
  m.config = config;
  m.vocab = std::move(vocab);
  m.tasks = tasks;

  Rng rng(config.init_seed);
  const size_t E = config.embed_dim;
  const size_t H = config.encoder_hidden_dim;
  const size_t HH = config.head_hidden_dim;

  m.embedding.resize(config.vocab_size, E);
  fill_uniform(m.embedding, E, rng);
  m.wf.resize(H, E);
  fill_uniform(m.wf, E, rng);
  m.uf.resize(H, H);
  fill_uniform(m.uf, H, rng);
  m.bf = Eigen::VectorXd::Zero(H);
  m.wb.resize(H, E);
  fill_uniform(m.wb, E, rng);
  m.ub.resize(H, H);
  fill_uniform(m.ub, H, rng);
  m.bb = Eigen::VectorXd::Zero(H);

  for (const auto& spec : m.tasks) {
    TaskHead head;
    head.w1.resize(HH, 2 * H);
    fill_uniform(head.w1, 2 * H, rng);
    head.b1 = Eigen::VectorXd::Zero(HH);
    head.w2.resize(spec.label_space.num_classes(), HH);
    fill_uniform(head.w2, HH, rng);
    head.b2 = Eigen::VectorXd::Zero(spec.label_space.num_classes());
    m.heads.emplace(spec.task_id, std::move(head));
  }

  m.reseed_dropout(rng.fork_seed());
  return m;
}

namespace {

// Scaled inverted-dropout mask: entries are 1/(1-p) with probability 1-p,
// else 0. Applying the same mask in forward and backward keeps the
// sampled loss differentiable.
Eigen::MatrixXd draw_dropout_mask(size_t rows, size_t cols, double p,
                                  Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  const double keep_scale = 1.0 / (1.0 - p);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = rng.uniform() < p ? 0.0 : keep_scale;
  return m;
}

}  // namespace

ForwardOutput forward(TaggerModel& model, const Batch& batch,
                      bool train_mode) {
  const TaskSpec& spec = model.task(batch.task_id);  // throws UnknownTask
  const TaskHead& head = model.heads.at(batch.task_id);
  const size_t H = model.config.encoder_hidden_dim;
  const size_t E = model.config.embed_dim;
  const double p = model.config.dropout_rate;
  const bool dropout = train_mode && p > 0.0;

  ForwardOutput out;
  out.task_id = batch.task_id;
  out.train_mode = train_mode;
  out.model_version = model.version();
  out.rows.resize(batch.rows);

  for (size_t r = 0; r < batch.rows; ++r) {
    RowCache& row = out.rows[r];
    const size_t len = batch.row_length(r);
    if (len == 0) continue;  // fully padded row contributes nothing

    row.token_ids.resize(len);
    row.labels.resize(len);
    for (size_t t = 0; t < len; ++t) {
      int32_t id = batch.token(r, t);
      if (id < 0 || static_cast<size_t>(id) >= model.config.vocab_size)
        throw InvariantError("token index out of vocab range");
      row.token_ids[t] = id;
      row.labels[t] = batch.label(r, t);
    }

    row.x.resize(E, len);
    for (size_t t = 0; t < len; ++t)
      row.x.col(t) = model.embedding.row(row.token_ids[t]).transpose();
    if (dropout) {
      row.drop_x = draw_dropout_mask(E, len, p, model.dropout_rng());
      row.x = row.x.cwiseProduct(row.drop_x);
    }

    row.h.resize(H, len);
    Eigen::VectorXd prev = Eigen::VectorXd::Zero(H);
    for (size_t t = 0; t < len; ++t) {
      prev = (model.wf * row.x.col(t) + model.uf * prev + model.bf)
                 .array()
                 .tanh();
      row.h.col(t) = prev;
    }
    row.g.resize(H, len);
    prev.setZero();
    for (size_t t = len; t-- > 0;) {
      prev = (model.wb * row.x.col(t) + model.ub * prev + model.bb)
                 .array()
                 .tanh();
      row.g.col(t) = prev;
    }

    row.enc.resize(2 * H, len);
    row.enc.topRows(H) = row.h;
    row.enc.bottomRows(H) = row.g;
    if (dropout) {
      row.drop_enc = draw_dropout_mask(2 * H, len, p, model.dropout_rng());
      row.enc = row.enc.cwiseProduct(row.drop_enc);
    }

    row.a = ((head.w1 * row.enc).colwise() + head.b1).cwiseMax(0.0);
    Eigen::MatrixXd logits = (head.w2 * row.a).colwise() + head.b2;

    // Log-sum-exp stabilized softmax; probabilities stay strictly positive.
    const size_t C = spec.label_space.num_classes();
    row.probs.resize(C, len);
    row.logprobs.resize(C, len);
    for (size_t t = 0; t < len; ++t) {
      const double zmax = logits.col(t).maxCoeff();
      Eigen::VectorXd shifted = logits.col(t).array() - zmax;
      const double lse = std::log(shifted.array().exp().sum());
      row.logprobs.col(t) = shifted.array() - lse;
      row.probs.col(t) = row.logprobs.col(t).array().exp();
    }
  }
  return out;
}

double batch_nll(const ForwardOutput& output) {
  double total = 0.0;
  size_t n = 0;
  for (const RowCache& row : output.rows) {
    for (size_t t = 0; t < row.labels.size(); ++t) {
      total -= row.logprobs(row.labels[t], t);
      ++n;
    }
  }
  if (n == 0) throw EmptyTaskError("batch has zero labeled tokens");
  return total / static_cast<double>(n);
}

Gradients backward(const TaggerModel& model, const ForwardOutput& output) {
  if (output.model_version != model.version())
    throw StaleCacheError("model mutated since forward");
  const TaskSpec& spec = model.task(output.task_id);
  const TaskHead& head = model.heads.at(output.task_id);
  const size_t H = model.config.encoder_hidden_dim;
  const size_t E = model.config.embed_dim;
  const bool dropout = output.train_mode && model.config.dropout_rate > 0.0;

  size_t n_tokens = 0;
  for (const RowCache& row : output.rows) n_tokens += row.labels.size();
  if (n_tokens == 0) throw EmptyTaskError("batch has zero labeled tokens");
  const double inv_n = 1.0 / static_cast<double>(n_tokens);

  Gradients g;
  g.embedding = Eigen::MatrixXd::Zero(model.embedding.rows(),
                                      model.embedding.cols());
  g.wf = Eigen::MatrixXd::Zero(H, E);
  g.uf = Eigen::MatrixXd::Zero(H, H);
  g.bf = Eigen::VectorXd::Zero(H);
  g.wb = Eigen::MatrixXd::Zero(H, E);
  g.ub = Eigen::MatrixXd::Zero(H, H);
  g.bb = Eigen::VectorXd::Zero(H);
  TaskHead hg;
  hg.w1 = Eigen::MatrixXd::Zero(head.w1.rows(), head.w1.cols());
  hg.b1 = Eigen::VectorXd::Zero(head.b1.size());
  hg.w2 = Eigen::MatrixXd::Zero(head.w2.rows(), head.w2.cols());
  hg.b2 = Eigen::VectorXd::Zero(head.b2.size());

  const size_t C = spec.label_space.num_classes();

  for (const RowCache& row : output.rows) {
    const size_t len = row.labels.size();
    if (len == 0) continue;

    // d loss / d logits = (p - onehot(y)) / N
    Eigen::MatrixXd dlogits = row.probs * inv_n;
    for (size_t t = 0; t < len; ++t) {
      const int32_t y = row.labels[t];
      if (y < 0 || static_cast<size_t>(y) >= C)
        throw InvariantError("label index outside the task's label space");
      dlogits(y, t) -= inv_n;
    }

    hg.w2.noalias() += dlogits * row.a.transpose();
    hg.b2 += dlogits.rowwise().sum();
    Eigen::MatrixXd da = head.w2.transpose() * dlogits;
    // ReLU: pass gradient only where the activation was positive.
    Eigen::MatrixXd dpre1 =
        da.cwiseProduct((row.a.array() > 0.0).cast<double>().matrix());
    hg.w1.noalias() += dpre1 * row.enc.transpose();
    hg.b1 += dpre1.rowwise().sum();

    Eigen::MatrixXd denc = head.w1.transpose() * dpre1;
    if (dropout) denc = denc.cwiseProduct(row.drop_enc);
    Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(E, len);

    // Forward-direction BPTT, t = len-1 .. 0.
    Eigen::VectorXd carry = Eigen::VectorXd::Zero(H);
    for (size_t t = len; t-- > 0;) {
      Eigen::VectorXd dh = denc.topRows(H).col(t) + carry;
      Eigen::VectorXd dpre =
          dh.cwiseProduct((1.0 - row.h.col(t).array().square()).matrix());
      g.wf.noalias() += dpre * row.x.col(t).transpose();
      if (t > 0) g.uf.noalias() += dpre * row.h.col(t - 1).transpose();
      g.bf += dpre;
      dx.col(t) += model.wf.transpose() * dpre;
      carry = model.uf.transpose() * dpre;
    }

    // Backward-direction BPTT, t = 0 .. len-1.
    carry.setZero();
    for (size_t t = 0; t < len; ++t) {
      Eigen::VectorXd dg = denc.bottomRows(H).col(t) + carry;
      Eigen::VectorXd dpre =
          dg.cwiseProduct((1.0 - row.g.col(t).array().square()).matrix());
      g.wb.noalias() += dpre * row.x.col(t).transpose();
      if (t + 1 < len) g.ub.noalias() += dpre * row.g.col(t + 1).transpose();
      g.bb += dpre;
      dx.col(t) += model.wb.transpose() * dpre;
      carry = model.ub.transpose() * dpre;
    }

    if (dropout) dx = dx.cwiseProduct(row.drop_x);
    for (size_t t = 0; t < len; ++t)
      g.embedding.row(row.token_ids[t]) += dx.col(t).transpose();
  }

  g.heads.emplace(output.task_id, std::move(hg));
  return g;
}

std::vector<std::string> predict_tags(TaggerModel& model,
                                      const Sentence& sentence,
                                      int32_t task_id) {
  const TaskSpec& spec = model.task(task_id);

  Batch b;
  b.task_id = task_id;
  b.rows = 1;
  b.cols = sentence.size();
  b.tokens.resize(b.cols);
  b.labels.assign(b.cols, 0);
  b.mask.assign(b.cols, 1);
  for (size_t t = 0; t < b.cols; ++t)
    b.tokens[t] = model.vocab.lookup(sentence.tokens[t].surface);

  ForwardOutput out = forward(model, b, /*train_mode=*/false);
  std::vector<std::string> tags;
  tags.reserve(sentence.size());
  const Eigen::MatrixXd& probs = out.rows[0].probs;
  for (size_t t = 0; t < sentence.size(); ++t) {
    // Strict > comparison keeps the lowest index on ties; class order is
    // O, then B classes, then I classes.
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < probs.rows(); ++c)
      if (probs(c, t) > probs(best, t)) best = c;
    tags.push_back(spec.label_space.index_tag(static_cast<size_t>(best)));
  }
  return tags;
}

std::vector<TensorRef> parameter_tensors(TaggerModel& m) {
  std::vector<TensorRef> out;
  auto add = [&out](const std::string& name, Eigen::MatrixXd& t) {
    out.push_back({name, t.data(), static_cast<size_t>(t.rows()),
                   static_cast<size_t>(t.cols())});
  };
  auto addv = [&out](const std::string& name, Eigen::VectorXd& t) {
    out.push_back({name, t.data(), static_cast<size_t>(t.size()), 1});
  };
  add("embedding", m.embedding);
  add("wf", m.wf);
  add("uf", m.uf);
  addv("bf", m.bf);
  add("wb", m.wb);
  add("ub", m.ub);
  addv("bb", m.bb);
  for (const auto& spec : m.tasks) {
    TaskHead& h = m.heads.at(spec.task_id);
    const std::string prefix = "head" + std::to_string(spec.task_id) + ".";
    add(prefix + "w1", h.w1);
    addv(prefix + "b1", h.b1);
    add(prefix + "w2", h.w2);
    addv(prefix + "b2", h.b2);
  }
  return out;
}

std::vector<TensorRef> gradient_tensors(Gradients& g) {
  std::vector<TensorRef> out;
  auto add = [&out](const std::string& name, Eigen::MatrixXd& t) {
    out.push_back({name, t.data(), static_cast<size_t>(t.rows()),
                   static_cast<size_t>(t.cols())});
  };
  auto addv = [&out](const std::string& name, Eigen::VectorXd& t) {
    out.push_back({name, t.data(), static_cast<size_t>(t.size()), 1});
  };
  add("embedding", g.embedding);
  add("wf", g.wf);
  add("uf", g.uf);
  addv("bf", g.bf);
  add("wb", g.wb);
  add("ub", g.ub);
  addv("bb", g.bb);
  for (auto& [task_id, h] : g.heads) {
    const std::string prefix = "head" + std::to_string(task_id) + ".";
    add(prefix + "w1", h.w1);
    addv(prefix + "b1", h.b1);
    add(prefix + "w2", h.w2);
    addv(prefix + "b2", h.b2);
  }
  return out;
}

}  // namespace gerbera

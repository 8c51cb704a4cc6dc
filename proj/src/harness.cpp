#include "gerbera/harness.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "gerbera/error.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gerbera {

std::string resolve_data_path(const std::string& path) {
  if (fs::exists(path)) return path;
  if (!fs::path(path).is_absolute()) {
    const char* root = std::getenv("GERBERA_DATA_DIR");
    if (root && *root) {
      fs::path joined = fs::path(root) / path;
      if (fs::exists(joined)) return joined.string();
    }
  }
  return path;  // let the open fail with the original name
}

void write_file_atomic(const std::string& path, const std::string& content) {
  fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  fs::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write " + tmp.string());
    out << content;
    if (!out) throw DataError("write failed: " + tmp.string());
  }
  fs::rename(tmp, target);
}

void ExperimentConfig::apply_preset() {
  const uint64_t keep_seed = train.seed;
  if (preset == "paper")
    train = TrainConfig::paper_preset();
  else if (preset == "desk")
    train = TrainConfig::desk_preset();
  else
    throw InvariantError("unknown preset: " + preset +
                         " (expected paper or desk)");
  train.seed = keep_seed;
}

namespace {

json model_config_json(const ModelConfig& m) {
  return json{{"embed_dim", m.embed_dim},
              {"encoder_hidden_dim", m.encoder_hidden_dim},
              {"head_hidden_dim", m.head_hidden_dim},
              {"dropout_rate", m.dropout_rate}};
}

json train_config_json(const TrainConfig& t) {
  return json{
      {"learning_rate", t.learning_rate},
      {"batch_size", t.batch_size},
      {"max_epochs_phase1", t.max_epochs_phase1},
      {"max_epochs_phase2", t.max_epochs_phase2},
      {"max_len", t.max_len},
      {"optimizer",
       t.optimizer == OptimizerKind::sgd ? "sgd" : "adaptive_moment"},
      {"selection",
       t.selection == SelectionMetric::dev_f1 ? "dev_f1" : "final_epoch"},
      {"patience", t.patience},
      {"reset_optimizer_between_phases", t.reset_optimizer_between_phases},
      {"vocab_min_freq", t.vocab_min_freq},
      {"vocab_fold_case", t.vocab_fold_case}};
}

json experiment_config_json(const ExperimentConfig& cfg) {
  return json{{"name", cfg.name},
              {"target_train", cfg.target.train},
              {"target_dev", cfg.target.dev},
              {"target_test", cfg.target.test},
              {"sources", cfg.sources},
              {"single_task", cfg.single_task},
              {"collapse", cfg.collapse},
              {"keep_type", cfg.keep_type},
              {"preset", cfg.preset},
              {"train", train_config_json(cfg.train)},
              {"model", model_config_json(cfg.model)},
              {"seeds", cfg.seeds},
              {"out_dir", cfg.out_dir},
              {"log_timing", cfg.log_timing}};
}

uint64_t fnv1a(const std::string& bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[v & 0xf];
    v >>= 4;
  }
  return s;
}

json report_json_obj(const EvalReport& r) {
  return json::parse(report_to_json(r, "", ""));
}

struct MeanStdev {
  double mean = 0.0;
  double stdev = 0.0;
};

MeanStdev mean_stdev(const std::vector<double>& xs) {
  MeanStdev out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.stdev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
  }
  return out;
}

std::string file_stem(const std::string& path) {
  return fs::path(path).stem().string();
}

}  // namespace

std::string config_hash(const ExperimentConfig& cfg) {
  return hex64(fnv1a(experiment_config_json(cfg).dump()));
}

Corpus load_prepared(const std::string& path, const std::string& name,
                     DomainKind domain, Split split, bool collapse,
                     const std::string& keep_type) {
  FormatConfig format;
  Corpus c = load_corpus_file(resolve_data_path(path), format, name, domain,
                              split);
  c = repair_orphans(c);
  if (!keep_type.empty()) c = filter_entity_type(c, keep_type);
  if (collapse) c = collapse_types(c);
  return c;
}

void cmd_ingest(const IngestOptions& opts, std::ostream& out) {
  if (opts.paths.empty()) throw InvariantError("no input files");

  Split split = Split::train;
  if (opts.split == "dev")
    split = Split::dev;
  else if (opts.split == "test")
    split = Split::test;
  else if (opts.split != "train")
    throw InvariantError("bad split: " + opts.split);

  std::string last_json;
  for (const auto& raw_path : opts.paths) {
    const std::string path = resolve_data_path(raw_path);
    Corpus c = load_corpus_file(
        path, opts.format, opts.name.empty() ? file_stem(path) : opts.name,
        DomainKind::general, split);
    if (opts.repair) c = repair_orphans(c);
    CorpusStats stats = corpus_stats(c);
    last_json = stats_to_json(c, stats);
    out << last_json << "\n";

    if (opts.expect_sentences && *opts.expect_sentences != stats.sentence_count)
      throw DataError(path + ": expected " +
                      std::to_string(*opts.expect_sentences) +
                      " sentences, found " +
                      std::to_string(stats.sentence_count));
    if (opts.expect_entities && *opts.expect_entities != stats.entity_count)
      throw DataError(path + ": expected " +
                      std::to_string(*opts.expect_entities) +
                      " entities, found " + std::to_string(stats.entity_count));
  }
  if (!opts.out_path.empty()) write_file_atomic(opts.out_path, last_json + "\n");
}

void cmd_derive(const DeriveOptions& opts, std::ostream& out) {
  if (!opts.collapse && opts.keep_type.empty())
    throw InvariantError("derive needs --collapse and/or --keep-type");

  Corpus c = load_corpus_file(resolve_data_path(opts.input), opts.format,
                              file_stem(opts.input), DomainKind::general,
                              Split::train);
  c = repair_orphans(c);
  if (!opts.keep_type.empty()) {
    Corpus filtered = filter_entity_type(c, opts.keep_type);
    CorpusStats stats = corpus_stats(filtered);
    if (stats.entity_count == 0)
      out << "warning: no entities of type \"" << opts.keep_type
          << "\" found; output is all O\n";
    c = std::move(filtered);
  }
  if (opts.collapse) c = collapse_types(c);
  write_file_atomic(opts.output, serialize_corpus(c));
  CorpusStats stats = corpus_stats(c);
  out << "wrote " << opts.output << ": " << stats.sentence_count
      << " sentences, " << stats.entity_count << " entities\n";
}

namespace {

CorpusTriple load_target(const TargetPaths& paths, bool collapse) {
  CorpusTriple triple;
  triple.train = load_prepared(paths.train, file_stem(paths.train),
                               DomainKind::biomedical, Split::train, collapse,
                               "");
  if (!paths.dev.empty())
    triple.dev = load_prepared(paths.dev, file_stem(paths.dev),
                               DomainKind::biomedical, Split::dev, collapse,
                               "");
  if (!paths.test.empty())
    triple.test = load_prepared(paths.test, file_stem(paths.test),
                                DomainKind::biomedical, Split::test, collapse,
                                "");
  return triple;
}

std::vector<Corpus> load_sources(const ExperimentConfig& cfg) {
  std::vector<Corpus> sources;
  if (cfg.single_task) return sources;
  for (const auto& path : cfg.sources)
    sources.push_back(load_prepared(path, file_stem(path),
                                    DomainKind::general, Split::train,
                                    cfg.collapse, cfg.keep_type));
  return sources;
}

// Trains every seed and evaluates on test (dev when test is absent),
// writing per-seed artifacts under `dir`.
RunRecord run_study(const ExperimentConfig& cfg, const CorpusTriple& target,
                    const std::vector<Corpus>& sources, const fs::path& dir,
                    std::ostream& out) {
  RunRecord record;
  record.config_hash = config_hash(cfg);
  record.seeds = cfg.seeds;
  if (cfg.seeds.empty()) throw InvariantError("at least one seed required");

  const Corpus* eval_corpus = nullptr;
  if (target.test)
    eval_corpus = &*target.test;
  else if (target.dev)
    eval_corpus = &*target.dev;

  std::vector<double> f1s;
  for (uint64_t seed : cfg.seeds) {
    TrainConfig tc = cfg.train;
    tc.seed = seed;
    GerberaRun run = run_gerbera(target, sources, cfg.model, tc);

    const std::string tag = "seed" + std::to_string(seed);
    const std::string log_path = (dir / (tag + ".log.jsonl")).string();
    write_file_atomic(log_path, run.log.to_jsonl(cfg.log_timing));
    record.train_log_paths.push_back(log_path);

    const std::string ckpt_path = (dir / (tag + ".ckpt")).string();
    save_checkpoint(run.model, ckpt_path);
    record.checkpoint_paths.push_back(ckpt_path);

    EvalReport report;
    if (eval_corpus) {
      report = evaluate_model(run.model, *eval_corpus, 0);
      f1s.push_back(report.f1);
      out << "  seed " << seed << ": test F1 " << report.f1 << "\n";
    } else {
      out << "  seed " << seed << ": trained (no eval split)\n";
    }
    record.per_seed.push_back(std::move(report));
  }

  MeanStdev ms = mean_stdev(f1s);
  record.f1_mean = ms.mean;
  record.f1_stdev = ms.stdev;

  json j;
  j["config_hash"] = record.config_hash;
  j["config"] = experiment_config_json(cfg);
  j["seeds"] = record.seeds;
  j["per_seed"] = json::array();
  for (const auto& r : record.per_seed) j["per_seed"].push_back(report_json_obj(r));
  j["f1_mean"] = record.f1_mean;
  j["f1_stdev"] = record.f1_stdev;
  j["train_log_paths"] = record.train_log_paths;
  j["checkpoint_paths"] = record.checkpoint_paths;
  record.record_path = (dir / "record.json").string();
  write_file_atomic(record.record_path, j.dump(2) + "\n");
  return record;
}

}  // namespace

RunRecord cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  CorpusTriple target = load_target(cfg.target, cfg.collapse);
  std::vector<Corpus> sources = load_sources(cfg);

  const std::string hash = config_hash(cfg);
  fs::path dir = fs::path(cfg.out_dir) / (cfg.name + "-" + hash.substr(0, 8));
  fs::create_directories(dir);

  out << cfg.name << " (" << (cfg.single_task ? "single-task" : "gerbera")
      << ", " << sources.size() << " source(s), hash " << hash.substr(0, 8)
      << ")\n";
  RunRecord record = run_study(cfg, target, sources, dir, out);
  out << "mean test F1 " << record.f1_mean << " (stdev " << record.f1_stdev
      << ") -> " << record.record_path << "\n";
  return record;
}

EvalReport cmd_eval(const EvalOptions& opts, std::ostream& out) {
  if (opts.checkpoint.empty() == opts.pred_file.empty())
    throw InvariantError("give exactly one of --checkpoint or --pred-file");

  Corpus gold = load_corpus_file(resolve_data_path(opts.corpus), opts.format,
                                 file_stem(opts.corpus), DomainKind::general,
                                 Split::test);
  gold = repair_orphans(gold);

  Corpus pred;
  std::string model_id = opts.model_id;
  if (!opts.checkpoint.empty()) {
    TaggerModel model = load_checkpoint(resolve_data_path(opts.checkpoint));
    pred = predict_corpus(model, gold, 0);
    if (model_id.empty()) model_id = file_stem(opts.checkpoint);
  } else {
    pred = load_corpus_file(resolve_data_path(opts.pred_file), opts.format,
                            file_stem(opts.pred_file), DomainKind::general,
                            Split::test);
    pred = repair_orphans(pred);
    if (model_id.empty()) model_id = file_stem(opts.pred_file);
  }

  EvalReport report = evaluate_corpora(gold, pred);

  SpansPerSentence gold_spans, pred_spans;
  for (const auto& s : gold.sentences) gold_spans.push_back(decode_spans(s));
  for (const auto& s : repair_orphans(pred).sentences)
    pred_spans.push_back(decode_spans(s));

  if (opts.buckets) {
    if (opts.train_corpus.empty())
      throw InvariantError("--buckets needs --train-corpus for the lexicon");
    Corpus train = load_corpus_file(resolve_data_path(opts.train_corpus),
                                    opts.format, file_stem(opts.train_corpus),
                                    DomainKind::general, Split::train);
    train = repair_orphans(train);
    report.buckets = generalization_partition(train, gold_spans, pred_spans,
                                              &report.notices);
  }

  if (opts.self_check) {
    size_t n_gold = 0, n_pred = 0;
    for (const auto& v : gold_spans) n_gold += v.size();
    for (const auto& v : pred_spans) n_pred += v.size();
    check_report_invariants(report, n_gold, n_pred);
    for (const auto& notice : report.notices) out << "notice: " << notice << "\n";
    out << "self-check: all report invariants hold\n";
  }

  const std::string payload =
      report_to_json(report, gold.name, model_id) + "\n";
  out << payload;
  if (!opts.out_path.empty()) write_file_atomic(opts.out_path, payload);
  if (!opts.write_predictions.empty())
    write_file_atomic(opts.write_predictions, serialize_corpus(pred));
  return report;
}

IncrementalResult cmd_experiment_incremental(const ExperimentConfig& cfg,
                                             std::ostream& out) {
  CorpusTriple target = load_target(cfg.target, cfg.collapse);
  std::vector<Corpus> all_sources = load_sources(cfg);

  IncrementalResult result;
  fs::path dir = fs::path(cfg.out_dir) /
                 (cfg.name + "-incremental-" + config_hash(cfg).substr(0, 8));
  fs::create_directories(dir);

  json rows = json::array();
  std::string csv = "k,sources,f1_mean,f1_stdev\n";
  for (size_t k = 0; k <= all_sources.size(); ++k) {
    std::vector<Corpus> sources(all_sources.begin(),
                                all_sources.begin() + k);
    ExperimentConfig sub = cfg;
    sub.name = cfg.name + "-k" + std::to_string(k);
    out << "k=" << k << " (" << sources.size() << " source(s))\n";
    fs::path subdir = dir / ("k" + std::to_string(k));
    fs::create_directories(subdir);
    RunRecord rec = run_study(sub, target, sources, subdir, out);

    std::vector<std::string> names;
    for (const auto& s : sources) names.push_back(s.name);
    result.k_values.push_back(k);
    result.source_names.push_back(names);
    result.f1_mean.push_back(rec.f1_mean);
    result.f1_stdev.push_back(rec.f1_stdev);

    std::string joined;
    for (size_t i = 0; i < names.size(); ++i)
      joined += (i ? "+" : "") + names[i];
    csv += std::to_string(k) + "," + joined + "," +
           std::to_string(rec.f1_mean) + "," + std::to_string(rec.f1_stdev) +
           "\n";
    rows.push_back(json{{"k", k},
                        {"sources", names},
                        {"f1_mean", rec.f1_mean},
                        {"f1_stdev", rec.f1_stdev}});
  }

  result.csv_path = (dir / "incremental.csv").string();
  result.json_path = (dir / "incremental.json").string();
  write_file_atomic(result.csv_path, csv);
  write_file_atomic(result.json_path, rows.dump(2) + "\n");
  out << "wrote " << result.csv_path << "\n";
  return result;
}

AblationResult cmd_experiment_ablation(const std::vector<TargetPaths>& targets,
                                       const ExperimentConfig& cfg,
                                       std::ostream& out) {
  if (targets.empty()) throw InvariantError("no targets given");
  std::vector<Corpus> all_sources = load_sources(cfg);

  AblationResult result;
  result.settings.push_back("N/A");
  for (const auto& s : all_sources) result.settings.push_back(s.name);
  if (all_sources.size() > 1) result.settings.push_back("ALL");

  fs::path dir = fs::path(cfg.out_dir) /
                 (cfg.name + "-ablation-" + config_hash(cfg).substr(0, 8));
  fs::create_directories(dir);

  json grid = json::array();
  for (const auto& tp : targets) {
    CorpusTriple target = load_target(tp, cfg.collapse);
    result.targets.push_back(target.train.name);
    std::vector<double> row;
    json jrow;
    jrow["target"] = target.train.name;

    for (size_t si = 0; si < result.settings.size(); ++si) {
      std::vector<Corpus> sources;
      if (result.settings[si] == "ALL")
        sources = all_sources;
      else if (si >= 1 && si <= all_sources.size())
        sources = {all_sources[si - 1]};
      // "N/A": no sources, exclusively fine-tuned on the target.

      out << target.train.name << " / " << result.settings[si] << "\n";
      fs::path subdir =
          dir / (target.train.name + "-" + std::to_string(si));
      fs::create_directories(subdir);
      RunRecord rec = run_study(cfg, target, sources, subdir, out);
      row.push_back(rec.f1_mean);
      jrow["f1"][result.settings[si]] = rec.f1_mean;
    }
    result.f1.push_back(row);
    grid.push_back(jrow);
  }

  std::string csv = "target";
  for (const auto& s : result.settings) csv += "," + s;
  csv += "\n";
  for (size_t r = 0; r < result.targets.size(); ++r) {
    csv += result.targets[r];
    for (double v : result.f1[r]) csv += "," + std::to_string(v);
    csv += "\n";
  }

  result.csv_path = (dir / "ablation.csv").string();
  result.json_path = (dir / "ablation.json").string();
  write_file_atomic(result.csv_path, csv);
  write_file_atomic(result.json_path, grid.dump(2) + "\n");
  out << "wrote " << result.csv_path << "\n";
  return result;
}

void cmd_synth(const SynthOptions& opts, std::ostream& out) {
  TransferPair pair = make_transfer_pair(opts.config);
  fs::path dir(opts.out_dir);
  fs::create_directories(dir);
  write_file_atomic((dir / "target.train.conll").string(),
                    serialize_corpus(pair.target.train));
  write_file_atomic((dir / "target.dev.conll").string(),
                    serialize_corpus(*pair.target.dev));
  write_file_atomic((dir / "target.test.conll").string(),
                    serialize_corpus(*pair.target.test));
  write_file_atomic((dir / "source.train.conll").string(),
                    serialize_corpus(pair.source_train));
  out << "wrote synthetic benchmark pair under " << dir.string() << "\n";
}

}  // namespace gerbera

#ifndef GERBERA_HARNESS_HPP
#define GERBERA_HARNESS_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gerbera/synthetic.hpp"
#include "gerbera/trainer.hpp"

namespace gerbera {

// Joins relative paths against $GERBERA_DATA_DIR when the file does not
// exist as given.
std::string resolve_data_path(const std::string& path);

// Write-temp-then-rename; parent directories are created.
void write_file_atomic(const std::string& path, const std::string& content);

struct TargetPaths {
  std::string train;
  std::string dev;   // optional, "" = none
  std::string test;  // optional, "" = none
};

struct ExperimentConfig {
  std::string name = "run";
  TargetPaths target;
  std::vector<std::string> sources;  // train-split paths
  bool single_task = false;          // drop sources (baseline regime)
  bool collapse = true;              // untyped B/I/O for every corpus
  std::string keep_type;             // entity-type filter for sources
  std::string preset = "desk";       // {paper, desk}
  TrainConfig train;                 // preset values + CLI overrides
  ModelConfig model;
  std::vector<uint64_t> seeds{1, 2, 3, 4, 5};
  std::string out_dir = "runs";
  bool log_timing = true;

  // Applies the named preset to `train`, keeping seed untouched.
  void apply_preset();
};

// FNV-1a over the canonical JSON form; changes iff any field changes.
std::string config_hash(const ExperimentConfig& cfg);

struct RunRecord {
  std::string config_hash;
  std::vector<uint64_t> seeds;
  std::vector<EvalReport> per_seed;  // test-set reports (dev when no test)
  double f1_mean = 0.0;
  double f1_stdev = 0.0;
  std::vector<std::string> train_log_paths;
  std::vector<std::string> checkpoint_paths;
  std::string record_path;
};

// Loads a corpus and applies the experiment's tag transformations:
// orphan repair, optional entity-type filter, optional collapse.
Corpus load_prepared(const std::string& path, const std::string& name,
                     DomainKind domain, Split split, bool collapse,
                     const std::string& keep_type);

struct IngestOptions {
  std::vector<std::string> paths;
  FormatConfig format;
  std::string name;   // defaults to the file stem
  std::string split = "train";
  std::optional<size_t> expect_sentences;
  std::optional<size_t> expect_entities;
  bool repair = false;  // promote orphan I before counting
  std::string out_path; // write the last stats JSON here as well
};
// Prints one stats JSON per file; throws DataError when --expect fails.
void cmd_ingest(const IngestOptions& opts, std::ostream& out);

struct DeriveOptions {
  std::string input;
  std::string output;
  FormatConfig format;
  bool collapse = false;
  std::string keep_type;
};
void cmd_derive(const DeriveOptions& opts, std::ostream& out);

// One full training study: run_gerbera per seed, test-set evaluation,
// checkpoints, JSONL logs and a record.json under
// <out_dir>/<name>-<hash8>/.
RunRecord cmd_train(const ExperimentConfig& cfg, std::ostream& out);

struct EvalOptions {
  std::string checkpoint;  // exactly one of checkpoint / pred_file
  std::string pred_file;
  std::string corpus;      // gold corpus path
  FormatConfig format;
  bool buckets = false;
  std::string train_corpus;  // lexicon source for --buckets
  bool self_check = false;
  std::string out_path;
  std::string write_predictions;
  std::string model_id;
};
EvalReport cmd_eval(const EvalOptions& opts, std::ostream& out);

struct IncrementalResult {
  // Row k: mean/stdev test F1 with the first k sources.
  std::vector<size_t> k_values;
  std::vector<std::vector<std::string>> source_names;
  std::vector<double> f1_mean;
  std::vector<double> f1_stdev;
  std::string csv_path, json_path;
};
IncrementalResult cmd_experiment_incremental(const ExperimentConfig& cfg,
                                             std::ostream& out);

struct AblationResult {
  std::vector<std::string> targets;       // row labels
  std::vector<std::string> settings;      // "N/A", sources..., "ALL"
  std::vector<std::vector<double>> f1;    // [target][setting]
  std::string csv_path, json_path;
};
AblationResult cmd_experiment_ablation(const std::vector<TargetPaths>& targets,
                                       const ExperimentConfig& cfg,
                                       std::ostream& out);

struct SynthOptions {
  SynthConfig config;
  std::string out_dir = "data/synthetic";
};
// Writes the generated benchmark pair as canonical corpus files.
void cmd_synth(const SynthOptions& opts, std::ostream& out);

}  // namespace gerbera

#endif  // GERBERA_HARNESS_HPP

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "karmarank/corpus.hpp"
#include "karmarank/eval.hpp"
#include "karmarank/features.hpp"
#include "karmarank/metrics.hpp"
#include "karmarank/synth.hpp"

namespace karmarank {

// Every setting of a run. Config files hold one "key = value" per line;
// '#' starts a comment, lists are comma separated. See config_keys().
struct RunConfig {
  std::vector<std::string> inputs;
  std::string input_schema = kRedditJsonlSchema;
  std::vector<std::string> subreddits;  // empty keeps all
  std::string out_dir = "karmarank-out";
  std::string data_dir;  // empty uses the bundled data
  std::uint64_t seed = 1;

  ListParams lists;
  double train_frac = 0.75;
  double val_frac = 0.20;

  ModelConfig models;
  RankerOptions ranker;
  SurrogateOptions surrogate;
  GainKind gain = GainKind::Linear;
  int random_repetitions = 100;
  bool kindex_include_post_author = false;

  SynthConfig synth;
  std::string synth_output = "synth.jsonl";

  std::string resolved_data_dir() const;
};

std::vector<std::string> config_keys();
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const RunConfig& cfg, const std::string& key);
// "key=value"; surrounding spaces are ignored.
void apply_override(RunConfig& cfg, const std::string& assignment);
RunConfig load_run_config(const std::string& path);
// Canonical text with every key, in config_keys() order.
std::string config_text(const RunConfig& cfg);

const std::vector<std::string>& stage_names();
const std::vector<std::string>& stage_upstream(const std::string& stage);
// Hash of the config keys a stage depends on.
std::string stage_config_hash(const RunConfig& cfg, const std::string& stage);

class Pipeline {
 public:
  explicit Pipeline(RunConfig cfg);

  void ingest();
  void lists();
  void split();
  void train_models();
  void featurize();
  void train();
  void select();
  void evaluate();
  void kindex_report();
  void synth();
  void run(const std::string& stage);
  // Every stage from ingest through evaluate, then the k-index report.
  void run_all();

  // Fails with a data error naming the stage to rerun when a manifest is
  // missing, stale, or its outputs changed.
  void validate(const std::string& stage) const;

  std::string path(const std::string& relative) const;
  const RunConfig& config() const { return cfg_; }

 private:
  void require_upstream(const std::string& stage) const;
  void write_manifest(const std::string& stage, const std::vector<std::string>& inputs,
                      const std::vector<std::string>& outputs, const std::string& notes) const;
  CorpusStore load_corpus() const;
  SubredditSplit subreddit_split(const std::string& sub) const;
  std::vector<std::string> feature_subreddits() const;

  RunConfig cfg_;
};

}  // namespace karmarank

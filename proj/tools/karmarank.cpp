#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "karmarank/common.hpp"
#include "karmarank/pipeline.hpp"

using namespace karmarank;

int main(int argc, char** argv) {
  CLI::App app{"karmarank: comment karma ranking pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  std::int64_t seed = -1;
  app.add_option("-c,--config", config_path, "key = value config file")->check(CLI::ExistingFile);
  app.add_option("-s,--set", overrides, "override one config key (key=value), repeatable");
  app.add_option("-o,--out-dir", out_dir, "output directory");
  app.add_option("--seed", seed, "root seed")->check(CLI::NonNegativeNumber);

  std::vector<std::string> inputs;
  std::vector<std::string> signal_groups;
  int synth_threads = 0;
  std::string synth_output;
  bool include_post_author = false;
  std::string run_from;

  auto* ingest = app.add_subcommand("ingest", "read JSONL dumps into the corpus store");
  ingest->add_option("inputs", inputs, "dump files (override the 'inputs' key)");
  app.add_subcommand("lists", "build comment lists");
  app.add_subcommand("split", "thread-level train/validation/test split");
  app.add_subcommand("train-models", "fit topic, embedding, lexicon and classifier models on the train part");
  app.add_subcommand("featurize", "extract and normalize features for every list");
  app.add_subcommand("train", "train the G&T baseline and the all-feature ranker per subreddit");
  app.add_subcommand("select", "greedy feature-group selection per subreddit");
  app.add_subcommand("evaluate", "write the P@1, NDCG, surrogate and ablation reports");
  auto* kindex = app.add_subcommand("kindex-report", "top-comment rate of high k-index participants");
  kindex->add_flag("--include-post-author", include_post_author, "count the post author as a participant");
  auto* synth = app.add_subcommand("synth", "write a synthetic dump with planted feature signal");
  synth->add_option("--signal-group", signal_groups, "GROUP or GROUP=weight, repeatable");
  synth->add_option("--threads", synth_threads, "thread count")->check(CLI::PositiveNumber);
  synth->add_option("--output", synth_output, "dump path");
  auto* run = app.add_subcommand("run", "every stage from ingest through kindex-report");
  run->add_option("--from", run_from, "first stage to run");
  auto* show = app.add_subcommand("show-config", "print the resolved configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    if (seed >= 0) cfg.seed = static_cast<std::uint64_t>(seed);
    if (!inputs.empty()) cfg.inputs = inputs;
    if (include_post_author) cfg.kindex_include_post_author = true;
    if (!signal_groups.empty()) {
      cfg.synth.signal.clear();
      for (const auto& g : signal_groups) cfg.synth.signal.insert(parse_signal(g));
    }
    if (synth_threads > 0) cfg.synth.threads = synth_threads;
    if (!synth_output.empty()) cfg.synth_output = synth_output;

    if (show->parsed()) {
      std::cout << config_text(cfg);
      return 0;
    }
    Pipeline p(cfg);
    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage != "run") {
      p.run(stage);
      return 0;
    }
    bool started = run_from.empty();
    for (const char* s : {"ingest", "lists", "split", "train-models", "featurize", "train", "select", "evaluate",
                          "kindex-report"}) {
      started = started || run_from == s;
      if (started) p.run(s);
    }
    if (!started) fail_config("unknown stage '" + run_from + "'");
    return 0;
  } catch (const Error& e) {
    std::cerr << "karmarank: " << e.what() << '\n';
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "karmarank: " << e.what() << '\n';
    return 3;
  }
}

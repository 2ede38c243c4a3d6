#pragma once

// Small synthetic corpora and model settings sized for unit tests.

#include <memory>
#include <string>
#include <vector>

#include "karmarank/features.hpp"
#include "karmarank/synth.hpp"
#include "karmarank/textprep.hpp"

namespace fixture {

inline std::shared_ptr<const karmarank::TextAnalyzer> shared_analyzer() {
  static const auto a = std::make_shared<const karmarank::TextAnalyzer>(
      karmarank::TextResources::load(karmarank::default_data_dir()));
  return a;
}

inline karmarank::SynthConfig small_synth(int threads, std::uint64_t seed) {
  karmarank::SynthConfig c;
  c.threads = threads;
  c.seed = seed;
  return c;
}

inline karmarank::ModelConfig small_models() {
  karmarank::ModelConfig m;
  m.skipgram.dim = 16;
  m.skipgram.epochs = 2;
  m.skipgram.min_count = 2;
  m.nmf.rank = 8;
  m.nmf.iterations = 30;
  m.nmf.fold_in_iterations = 30;
  m.bow.min_class_examples = 20;
  m.expansion.budget = 50;
  m.seeds_dir = karmarank::default_data_dir() + "/seeds";
  return m;
}

inline std::vector<const karmarank::Thread*> all_threads(const karmarank::CorpusStore& store) {
  std::vector<const karmarank::Thread*> out;
  for (const auto& [sub, threads] : store.by_subreddit())
    for (const auto& t : threads) out.push_back(&t);
  return out;
}

}  // namespace fixture

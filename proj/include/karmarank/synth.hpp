#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "karmarank/corpus.hpp"

namespace karmarank {

// Synthetic threads where every comment carries a latent level 0..3 per
// feature group and karma = round(exp(sum_g w_g * level_g + noise)) + offset.
// Each level shows up only in the text or structure read by its own group:
//   GT    depth in the reply tree (direct replies to the post score 3)
//   AR    author drawn from the matching expertise tier; tiers 2-3 carry flair
//   INFO  capitalized one-off names and, at level 3, a URL
//   LEX   second-person pronouns and commas
//   RESP  bait words that draw late replies (two hours or more after the comment)
//   REL   words reused from the post title
//   MOOD  positive sentiment words
//   COMM  words specific to the subreddit
// Comment length is fixed, so no level changes token counts.
struct SynthConfig {
  std::vector<std::string> subreddits{"askmen", "askscience", "askwomen", "fitness", "politics", "worldnews"};
  int threads = 200;  // spread round-robin over the subreddits
  int min_comments = 20;
  int max_comments = 40;
  std::map<std::string, double> signal{{"REL", 1.0}};  // group -> weight
  double noise_sd = 0.3;
  std::int64_t karma_offset = -2;
  double deleted_rate = 0.02;
  std::uint64_t seed = 1;
  std::int64_t start_utc = 1420070400;
  std::string data_dir;  // sentiment lexicon and seeds; empty uses the bundled data
};

inline constexpr int kSynthMaxLevel = 3;

struct SynthCorpus {
  CorpusStore store;
  // comment id -> level per group, in canonical group order
  std::map<std::string, std::array<int, 8>> levels;
};

SynthCorpus generate_synth(const SynthConfig& config);

// Parses "REL" or "REL=0.8"; unknown groups and non-positive weights are config errors.
std::pair<std::string, double> parse_signal(const std::string& spec);

// Writes the store as a JSONL dump in the Reddit export field layout read by ingest_dump.
void write_reddit_dump(const CorpusStore& store, const std::string& path);

}  // namespace karmarank

#pragma once

#include <Eigen/Dense>

#include <array>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "karmarank/corpus.hpp"
#include "karmarank/lexicons.hpp"
#include "karmarank/ranker.hpp"
#include "karmarank/reputation.hpp"
#include "karmarank/semantics.hpp"
#include "karmarank/textprep.hpp"

namespace karmarank {

// Canonical group order; also the tie order of greedy selection.
inline const std::array<std::string, 8> kFeatureGroups{"GT", "AR", "INFO", "LEX", "RESP", "REL", "MOOD", "COMM"};
std::vector<std::string> feature_group_order();
bool is_feature_group(const std::string& g);

struct ModelConfig {
  SkipGramConfig skipgram;
  NmfConfig nmf;
  BowOptions bow;
  ExpansionOptions expansion;
  std::size_t flair_top_k = 20;
  bool community_uniform_prior = false;
  std::string seeds_dir;  // politeness.txt, argument.txt, profanity.txt, neutral.txt
};

// Everything the feature extractor reads, fit on training threads only.
struct ModelSet {
  explicit ModelSet(std::shared_ptr<const TextAnalyzer> a) : analyzer(std::move(a)) {}

  std::shared_ptr<const TextAnalyzer> analyzer;
  ReputationTable reputation;
  std::map<std::string, std::vector<std::string>> top_flairs;  // per subreddit, most frequent first
  std::size_t flair_slots = 20;
  NgramBackground background;
  EmbeddingTable embeddings;
  NmfModel nmf;
  BowClassifier reply;
  BowClassifier response;
  WordList politeness, argument, profanity;
  CommunityModel community;

  void save(const std::string& dir) const;
  static ModelSet load(const std::string& dir, std::shared_ptr<const TextAnalyzer> analyzer);
};

ModelSet train_models(const std::vector<const Thread*>& train_threads, std::shared_ptr<const TextAnalyzer> analyzer,
                      const ModelConfig& config);

// Content tokens of every non-deleted comment plus post title and body, for topic models.
std::vector<std::vector<std::string>> topic_corpus(const std::vector<const Thread*>& threads,
                                                   const TextAnalyzer& analyzer);

// The thread as visible at `cutoff`: later comments removed and every karma zeroed.
Thread history_view(const Thread& thread, std::int64_t cutoff);

struct NamedVector {
  std::vector<std::string> names;  // "GROUP:feature"
  std::vector<double> values;
  double at(const std::string& name) const;
};

class FeatureExtractor {
 public:
  explicit FeatureExtractor(const ModelSet& models);

  const FeatureSchema& schema() const { return schema_; }
  std::vector<std::string> group_names(const std::string& group) const;

  // One row per list member, columns in schema order.
  Eigen::MatrixXd list_features(const CommentList& list, const Thread& thread);
  NamedVector extract_group(const std::string& comment_id, const CommentList& list, const Thread& thread,
                            const std::string& group);

 private:
  struct PostText;
  struct CommentText;

  Eigen::VectorXd gt_features(const Thread& history, std::size_t i) const;
  Eigen::VectorXd ar_features(const Thread& history, std::size_t i) const;
  const CommentText& comment_text(const Comment& c);
  const PostText& post_text(const Thread& thread);
  Eigen::VectorXd text_features(const Thread& history, std::size_t i);
  Eigen::VectorXd member_row(const Thread& history, std::size_t i);

  const ModelSet& models_;
  FeatureSchema schema_;
  std::map<std::string, std::pair<std::size_t, std::size_t>> group_span_;  // offset, width
  std::unordered_map<std::string, std::shared_ptr<CommentText>> comment_cache_;
  std::unordered_map<std::string, std::shared_ptr<PostText>> post_cache_;
};

// Raw features for a set of lists; lists whose thread is missing are a data error.
RankingData featurize_lists(const std::vector<CommentList>& lists, const CorpusStore& store,
                            FeatureExtractor& extractor);

// Per-subreddit z-scoring with training statistics.
struct Normalizer {
  FeatureSchema input;
  std::vector<std::size_t> kept;  // input columns retained
  std::vector<std::string> dropped;
  std::map<std::string, Eigen::VectorXd> mean, scale;  // over kept columns

  FeatureSchema output() const;
  RankingData apply(const RankingData& raw) const;

  void save(const std::string& path) const;  // schema.json
  static Normalizer load(const std::string& path);
};

// Columns whose training standard deviation is <= 1e-12 in every subreddit are
// dropped; a subreddit where a kept column is constant is centered only.
Normalizer fit_normalizer(const RankingData& train);

// TSV: list_id, thread_id, subreddit, comment_id, created_utc, features..., karma.
void write_feature_tsv(const RankingData& data, const std::string& path);
RankingData read_feature_tsv(const std::string& path);

}  // namespace karmarank

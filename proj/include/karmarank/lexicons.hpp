#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "karmarank/corpus.hpp"
#include "karmarank/semantics.hpp"
#include "karmarank/textprep.hpp"

namespace karmarank {

struct WordList {
  std::string name;
  std::set<std::string> seeds;
  std::set<std::string> expanded;  // seeds plus the added words
  // Signed distance to the separating hyperplane, for every vocabulary word scored.
  std::map<std::string, double> margin;
  std::vector<std::string> dropped_seeds;  // seeds missing from the embedding vocabulary

  bool contains(const std::string& w) const { return expanded.count(w) > 0; }
  // Fraction of the tokens found in the list; 0 for no tokens.
  double hit_rate(const std::vector<std::string>& tokens) const;

  void save(const std::string& path) const;
  static WordList load(const std::string& path);
};

struct ExpansionOptions {
  std::size_t budget = 500;
  double C = 10.0;
  int epochs = 50;
  std::uint64_t seed = 1;
  std::size_t min_seeds = 5;
};

// Linear max-margin classifier over seed embeddings; adds the `budget`
// non-seed words with the largest positive signed distance.
WordList expand_wordlist(const std::string& name, const std::vector<std::string>& seed_pos,
                         const std::vector<std::string>& seed_neg, const EmbeddingTable& table,
                         const ExpansionOptions& opt = {});

// Mean polarity of lexicon hits; a negator right before a hit flips it.
double sentence_sentiment(const std::vector<std::string>& tokens, const TextResources& res);

struct SentimentSummary {
  double mean = 0;
  double std = 0;
};
// Over sentences of the comment; population standard deviation.
SentimentSummary comment_sentiment(const TokenizedComment& tc, const TextResources& res);

enum class SurrogateTask { Reply, ResponseSentiment };
const char* surrogate_task_name(SurrogateTask t);

struct BowOptions {
  double l2 = 1e-4;
  int epochs = 10;
  int min_df = 2;
  std::uint64_t seed = 1;
  std::size_t min_class_examples = 50;
};

// Binary bag-of-words logistic regression over token presence.
class BowClassifier {
 public:
  std::string task;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  std::vector<double> weights;
  double bias = 0;
  double prior = 0.5;  // training fraction of the positive class

  // P(positive | tokens); the class prior when no token is in the vocabulary.
  double probability(const std::vector<std::string>& tokens) const;

  void save(const std::string& path) const;
  static BowClassifier load(const std::string& path);
};

BowClassifier train_bow_classifier(const std::string& task, const std::vector<std::vector<std::string>>& docs,
                                   const std::vector<int>& labels, const BowOptions& opt = {});

struct LabeledDoc {
  std::string comment_id;
  std::vector<std::string> tokens;
  int label = 0;
};

// Reply: 1 iff the comment has at least one direct reply.
// ResponseSentiment: sign of the mean sentiment of direct replies; comments
// without replies or with a zero mean are left out.
std::vector<LabeledDoc> surrogate_labels(SurrogateTask task, const Thread& thread, const TextAnalyzer& analyzer);

// Multinomial naive Bayes over subreddits, add-one smoothing.
class CommunityModel {
 public:
  std::vector<std::string> classes;
  std::vector<double> log_prior;
  std::vector<std::string> vocab;
  std::unordered_map<std::string, std::size_t> index;
  Eigen::MatrixXd log_likelihood;  // classes x vocab

  // Posterior over classes; the prior when no token is in the vocabulary.
  std::vector<double> posterior(const std::vector<std::string>& tokens) const;

  void save(const std::string& path) const;
  static CommunityModel load(const std::string& path);

  // From per-class document counts and token counts (classes x vocab).
  static CommunityModel from_counts(std::vector<std::string> classes, const std::vector<double>& doc_counts,
                                    std::vector<std::string> vocab, const Eigen::MatrixXd& token_counts,
                                    bool uniform_prior);
};

CommunityModel train_community_model(const std::vector<std::vector<std::string>>& docs,
                                     const std::vector<std::string>& subreddits, bool uniform_prior = false);

}  // namespace karmarank

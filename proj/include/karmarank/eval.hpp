#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "karmarank/metrics.hpp"
#include "karmarank/ranker.hpp"

namespace karmarank {

std::vector<std::string> subreddits_of(const RankingData& data);
RankingData filter_subreddit(const RankingData& data, const std::string& subreddit);

struct SubredditSplit {
  RankingData train, validation, test;
};

struct RankerOptions {
  std::vector<double> c_grid = default_c_grid();
  SvmOptions svm;
};

// Graph-and-timing-only model, C tuned on validation P@1.
TuneResult train_gt_baseline(const SubredditSplit& data, const RankerOptions& opt);

// Greedy forward selection over the feature groups in canonical order.
SelectionResult select_groups(const SubredditSplit& data, const RankerOptions& opt);

// (p1_group - p1_gt) / p1_gt; a zero baseline is a numeric error unless both are zero.
double relative_improvement(double p1_group, double p1_gt);

// Mean over rows of value / baseline - 1, the "Improvement" row of the P@1 and NDCG tables.
double mean_relative_improvement(const std::vector<double>& values, const std::vector<double>& baselines);

struct GroupAblation {
  std::string group;
  double p1_group = 0;  // test P@1 of a model on GT plus this group
  double relative_improvement = 0;
};

// One entry per non-GT group present in the schema, in canonical order.
std::vector<GroupAblation> group_ablation(const SubredditSplit& data, double p1_gt, const RankerOptions& opt);

enum class BalancedTask { PosNeg, HighMid };
const char* balanced_task_name(BalancedTask t);

struct SurrogateOptions {
  double positive_min_karma = 2;  // positive: karma >= 2
  double negative_max_karma = 0;  // negative: karma <= 0
  double high_quantile = 0.95;    // high: karma >= train quantile
  double mid_low_quantile = 0.40;
  double mid_high_quantile = 0.60;
  std::size_t min_class = 100;  // per class, training comments
  std::uint64_t seed = 1;
  bool shuffle_labels = false;  // permutation null
};

struct SurrogateResult {
  double accuracy = 0;
  std::size_t class_a = 0, class_b = 0;  // training comments in each class
  std::size_t test_pairs = 0;
};

// Balanced pairs (one comment from each class, cross-thread allowed, random
// orientation) classified by the pairwise SVM; C tuned on validation pairs.
SurrogateResult balanced_surrogate(BalancedTask task, const SubredditSplit& data, const RankerOptions& ranker,
                                   const SurrogateOptions& opt);

// Linear-interpolated quantile of unsorted values; q in [0, 1].
double quantile(std::vector<double> values, double q);

struct SubredditReport {
  std::string subreddit;
  double p1_random = 0, p1_gt = 0, p1_all = 0;
  double ndcg_random = 0, ndcg_gt = 0, ndcg_all = 0;
  double pos_neg = 0, high_mid = 0, ranking = 0;
  std::vector<GroupAblation> ablation;
};

void write_p1_report(const std::vector<SubredditReport>& rows, const std::string& path);
void write_ndcg_report(const std::vector<SubredditReport>& rows, const std::string& path);
void write_surrogate_report(const std::vector<SubredditReport>& rows, const std::string& path);
void write_ablation_report(const std::vector<SubredditReport>& rows, const std::string& path);

}  // namespace karmarank

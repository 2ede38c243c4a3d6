#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "karmarank/metrics.hpp"

namespace karmarank {

struct FeatureSchema {
  std::vector<std::string> names;   // "GROUP:feature"
  std::vector<std::string> groups;  // group id per column

  std::size_t size() const { return names.size(); }
  std::vector<std::size_t> columns_of(const std::vector<std::string>& group_ids) const;
  std::vector<std::string> group_ids() const;  // in column order of first appearance
  std::string hash() const;
};

struct RankingList {
  std::string id;
  std::string thread_id;
  std::string subreddit;
  std::vector<std::string> member_ids;
  std::vector<std::int64_t> created_utc;
  Eigen::MatrixXd features;  // members x features
  std::vector<double> karma;
};

struct RankingData {
  FeatureSchema schema;
  std::vector<RankingList> lists;

  RankingData select_columns(const std::vector<std::size_t>& columns) const;
  RankingData select_groups(const std::vector<std::string>& group_ids) const;
};

// Signed difference vectors: for karma(i) > karma(j) within one list, emits
// (x_i - x_j, +1) and (x_j - x_i, -1). Equal-karma pairs emit nothing.
struct PairwiseSet {
  Eigen::MatrixXd diffs;
  std::vector<double> labels;
  std::vector<std::size_t> list_index;  // source list of each signed example
  std::size_t unordered_pairs = 0;
};

PairwiseSet pair_transform(const std::vector<RankingList>& lists);

struct SvmOptions {
  double C = 1.0;
  int epochs = 10;
  std::uint64_t seed = 1;
  bool fit_bias = false;
};

struct LinearSvm {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double C = 1.0;
  // Objective of the retained iterate after each epoch (non-increasing).
  std::vector<double> loss_trace;

  double decision(const Eigen::Ref<const Eigen::VectorXd>& x) const { return weights.dot(x) + bias; }
};

// (1 / (2 C n)) ||w||^2 + mean hinge, i.e. the C-weighted sum of slacks
// rescaled by C n.
double svm_objective(const Eigen::MatrixXd& X, std::span<const double> y, const Eigen::VectorXd& w,
                     double b, double C);

// Averaged stochastic subgradient descent on the L2-regularized hinge loss.
// Keeps the best averaged iterate by training objective after each epoch.
LinearSvm train_hinge_sgd(const Eigen::MatrixXd& X, std::span<const double> y, const SvmOptions& opt);

struct RankModel {
  std::vector<std::string> feature_names;
  Eigen::VectorXd weights;
  double C = 1.0;
  std::vector<std::string> selected_groups;
  std::uint64_t seed = 0;
  int epochs = 0;
  std::vector<double> loss_trace;
  std::string schema_hash;
  std::string corpus_hash;

  void save(const std::string& path) const;
  static RankModel load(const std::string& path);
};

RankModel train_ranksvm(const PairwiseSet& pairs, const FeatureSchema& schema, const SvmOptions& opt);

// Score order, descending; ties broken by earlier created_utc, then member id.
Order rank_list(const RankModel& model, const FeatureSchema& schema, const RankingList& list);
Eigen::VectorXd score_list(const RankModel& model, const FeatureSchema& schema, const RankingList& list);

double mean_p_at_1(const RankModel& model, const RankingData& data);
double mean_ndcg(const RankModel& model, const RankingData& data, GainKind gain);
PairCount pairwise_accuracy(const RankModel& model, const RankingData& data);

std::vector<double> default_c_grid();

struct TuneResult {
  double C = 1.0;
  std::vector<double> grid;
  std::vector<double> validation_p1;
  RankModel model;
};

// Grid value maximizing validation P@1; ties go to the smaller C.
TuneResult tune_C(const std::vector<double>& grid, const RankingData& train, const RankingData& validation,
                  const SvmOptions& base);

struct SelectionUnit {
  std::string name;
  std::vector<std::size_t> columns;
};

// Units are feature groups by default; one unit per feature in per-feature mode.
std::vector<SelectionUnit> group_units(const FeatureSchema& schema, const std::vector<std::string>& group_order);
std::vector<SelectionUnit> feature_units(const FeatureSchema& schema);

struct SelectionStep {
  std::string added;
  double validation_p1 = 0;
  double C = 0;
};

struct SelectionResult {
  std::vector<SelectionStep> trace;
  std::size_t best_prefix = 0;  // number of units in the chosen subset
  double best_p1 = 0;
  RankModel model;

  std::vector<std::string> selected() const;
};

// Forward selection by validation P@1 until every unit is used; returns the
// best prefix (shortest on ties). Ties among candidates keep unit order.
SelectionResult greedy_select(const std::vector<SelectionUnit>& units, const RankingData& train,
                              const RankingData& validation, const std::vector<double>& grid,
                              const SvmOptions& base);

}  // namespace karmarank

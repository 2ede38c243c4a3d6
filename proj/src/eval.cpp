#include "karmarank/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>
#include <unordered_set>

#include "karmarank/common.hpp"
#include "karmarank/features.hpp"

namespace karmarank {

std::vector<std::string> subreddits_of(const RankingData& data) {
  std::set<std::string> s;
  for (const auto& l : data.lists) s.insert(l.subreddit);
  return {s.begin(), s.end()};
}

RankingData filter_subreddit(const RankingData& data, const std::string& subreddit) {
  RankingData out;
  out.schema = data.schema;
  for (const auto& l : data.lists)
    if (l.subreddit == subreddit) out.lists.push_back(l);
  return out;
}

TuneResult train_gt_baseline(const SubredditSplit& data, const RankerOptions& opt) {
  const auto cols = data.train.schema.columns_of({"GT"});
  if (cols.empty()) fail_data("feature schema has no GT columns for the baseline");
  auto r = tune_C(opt.c_grid, data.train.select_columns(cols), data.validation.select_columns(cols), opt.svm);
  r.model.selected_groups = {"GT"};
  return r;
}

SelectionResult select_groups(const SubredditSplit& data, const RankerOptions& opt) {
  return greedy_select(group_units(data.train.schema, feature_group_order()), data.train, data.validation,
                       opt.c_grid, opt.svm);
}

double relative_improvement(double p1_group, double p1_gt) {
  if (p1_gt == 0) {
    if (p1_group == 0) return 0.0;
    fail_numeric("relative improvement over a zero G&T baseline is undefined");
  }
  return (p1_group - p1_gt) / p1_gt;
}

double mean_relative_improvement(const std::vector<double>& values, const std::vector<double>& baselines) {
  if (values.size() != baselines.size() || values.empty()) fail_data("improvement needs matching non-empty rows");
  double s = 0;
  for (std::size_t i = 0; i < values.size(); ++i) s += relative_improvement(values[i], baselines[i]);
  return s / static_cast<double>(values.size());
}

std::vector<GroupAblation> group_ablation(const SubredditSplit& data, double p1_gt, const RankerOptions& opt) {
  std::vector<GroupAblation> out;
  const auto present = data.train.schema.group_ids();
  for (const auto& g : kFeatureGroups) {
    if (g == "GT" || std::find(present.begin(), present.end(), g) == present.end()) continue;
    const auto cols = data.train.schema.columns_of({"GT", g});
    const auto tuned =
        tune_C(opt.c_grid, data.train.select_columns(cols), data.validation.select_columns(cols), opt.svm);
    GroupAblation a;
    a.group = g;
    a.p1_group = mean_p_at_1(tuned.model, data.test);
    a.relative_improvement = relative_improvement(a.p1_group, p1_gt);
    out.push_back(a);
  }
  return out;
}

const char* balanced_task_name(BalancedTask t) { return t == BalancedTask::PosNeg ? "pos-neg" : "high-mid"; }

double quantile(std::vector<double> v, double q) {
  if (v.empty()) fail_data("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

struct Row {
  Eigen::VectorXd x;
  double karma;
};

// Every list member once, in list order.
std::vector<Row> unique_rows(const RankingData& d) {
  std::vector<Row> out;
  std::unordered_set<std::string> seen;
  for (const auto& l : d.lists)
    for (Eigen::Index m = 0; m < l.features.rows(); ++m)
      if (seen.insert(l.member_ids[static_cast<std::size_t>(m)]).second)
        out.push_back({l.features.row(m).transpose(), l.karma[static_cast<std::size_t>(m)]});
  return out;
}

struct Thresholds {
  BalancedTask task;
  double a_min = 0;                // class A: karma >= a_min
  double b_low = 0, b_high = 0;    // class B: b_low <= karma <= b_high (and below a_min)

  int label(double k) const {
    if (k >= a_min) return 1;
    if (k >= b_low && k <= b_high) return 0;
    return -1;
  }
};

Thresholds thresholds(BalancedTask task, const std::vector<Row>& train, const SurrogateOptions& opt) {
  Thresholds t{task};
  if (task == BalancedTask::PosNeg) {
    t.a_min = opt.positive_min_karma;
    t.b_low = -std::numeric_limits<double>::infinity();
    t.b_high = opt.negative_max_karma;
    return t;
  }
  std::vector<double> k;
  for (const auto& r : train) k.push_back(r.karma);
  t.a_min = quantile(k, opt.high_quantile);
  t.b_low = quantile(k, opt.mid_low_quantile);
  t.b_high = quantile(k, opt.mid_high_quantile);
  return t;
}

struct PairSet {
  Eigen::MatrixXd X;
  std::vector<double> y;
};

PairSet balanced_pairs(const std::vector<Row>& rows, std::vector<int> labels, Rng& rng) {
  std::vector<std::size_t> a, b;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (labels[i] == 1) a.push_back(i);
    if (labels[i] == 0) b.push_back(i);
  }
  rng.shuffle(a);
  rng.shuffle(b);
  const std::size_t n = std::min(a.size(), b.size());
  PairSet p;
  p.X.resize(static_cast<Eigen::Index>(n), rows.empty() ? 0 : rows.front().x.size());
  for (std::size_t i = 0; i < n; ++i) {
    const bool flip = rng.uniform() < 0.5;
    const auto& hi = rows[a[i]].x;
    const auto& lo = rows[b[i]].x;
    p.X.row(static_cast<Eigen::Index>(i)) = (flip ? lo - hi : hi - lo).transpose();
    p.y.push_back(flip ? -1.0 : 1.0);
  }
  return p;
}

double pair_accuracy(const LinearSvm& m, const PairSet& p) {
  if (p.y.empty()) return 0.0;
  const Eigen::VectorXd s = p.X * m.weights;
  double correct = 0;
  for (std::size_t i = 0; i < p.y.size(); ++i) {
    const double v = s(static_cast<Eigen::Index>(i));
    correct += v == 0 ? 0.5 : (v > 0) == (p.y[i] > 0) ? 1.0 : 0.0;
  }
  return correct / static_cast<double>(p.y.size());
}

std::vector<int> labels_of(const std::vector<Row>& rows, const Thresholds& t) {
  std::vector<int> out;
  for (const auto& r : rows) out.push_back(t.label(r.karma));
  return out;
}

}  // namespace

SurrogateResult balanced_surrogate(BalancedTask task, const SubredditSplit& data, const RankerOptions& ranker,
                                   const SurrogateOptions& opt) {
  const std::string name = balanced_task_name(task);
  const auto train = unique_rows(data.train), val = unique_rows(data.validation), test = unique_rows(data.test);
  if (train.empty()) fail_data(name + " surrogate: no training comments");
  const Thresholds th = thresholds(task, train, opt);

  auto ytr = labels_of(train, th);
  SurrogateResult res;
  res.class_a = static_cast<std::size_t>(std::count(ytr.begin(), ytr.end(), 1));
  res.class_b = static_cast<std::size_t>(std::count(ytr.begin(), ytr.end(), 0));
  if (res.class_a < opt.min_class || res.class_b < opt.min_class)
    fail_data(name + " surrogate needs at least " + std::to_string(opt.min_class) +
              " training comments per class (have " + std::to_string(res.class_a) + " and " +
              std::to_string(res.class_b) + ")");

  Rng rng(derive_seed(opt.seed, "surrogate/" + name));
  auto yva = labels_of(val, th), yte = labels_of(test, th);
  if (opt.shuffle_labels)
    for (auto* y : {&ytr, &yva, &yte}) {
      // Permute class labels among the comments that carry one.
      std::vector<std::size_t> idx;
      std::vector<int> vals;
      for (std::size_t i = 0; i < y->size(); ++i)
        if ((*y)[i] >= 0) {
          idx.push_back(i);
          vals.push_back((*y)[i]);
        }
      rng.shuffle(vals);
      for (std::size_t k = 0; k < idx.size(); ++k) (*y)[idx[k]] = vals[k];
    }
  const PairSet ptr = balanced_pairs(train, ytr, rng);
  const PairSet pva = balanced_pairs(val, yva, rng);
  const PairSet pte = balanced_pairs(test, yte, rng);
  if (pte.y.empty()) fail_data(name + " surrogate: the test split has no comment of one class");

  std::vector<double> grid = ranker.c_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  if (grid.empty()) fail_config("C grid is empty");
  LinearSvm best;
  double best_acc = -1;
  for (double c : grid) {
    SvmOptions o = ranker.svm;
    o.C = c;
    o.fit_bias = false;
    LinearSvm m = train_hinge_sgd(ptr.X, ptr.y, o);
    // Without validation pairs every C scores alike and the smallest is kept.
    const double acc = pva.y.empty() ? 0.0 : pair_accuracy(m, pva);
    if (acc > best_acc) {
      best_acc = acc;
      best = std::move(m);
    }
  }
  res.accuracy = pair_accuracy(best, pte);
  res.test_pairs = pte.y.size();
  return res;
}

namespace {

std::ofstream open_report(const std::string& path) {
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  return out;
}

std::string pct(double v) { return format_fixed(100.0 * v, 2); }

template <class Get>
std::vector<double> column(const std::vector<SubredditReport>& rows, Get get) {
  std::vector<double> v;
  for (const auto& r : rows) v.push_back(get(r));
  return v;
}

}  // namespace

void write_p1_report(const std::vector<SubredditReport>& rows, const std::string& path) {
  auto out = open_report(path);
  out << "subreddit,random,gt,all\n";
  for (const auto& r : rows) out << r.subreddit << ',' << pct(r.p1_random) << ',' << pct(r.p1_gt) << ',' << pct(r.p1_all) << '\n';
  if (rows.empty()) return;
  const auto random = column(rows, [](const auto& r) { return r.p1_random; });
  out << "improvement,," << pct(mean_relative_improvement(column(rows, [](const auto& r) { return r.p1_gt; }), random))
      << ',' << pct(mean_relative_improvement(column(rows, [](const auto& r) { return r.p1_all; }), random)) << '\n';
}

void write_ndcg_report(const std::vector<SubredditReport>& rows, const std::string& path) {
  auto out = open_report(path);
  out << "subreddit,random,gt,all\n";
  for (const auto& r : rows)
    out << r.subreddit << ',' << format_fixed(r.ndcg_random, 4) << ',' << format_fixed(r.ndcg_gt, 4) << ','
        << format_fixed(r.ndcg_all, 4) << '\n';
  if (rows.empty()) return;
  const auto random = column(rows, [](const auto& r) { return r.ndcg_random; });
  out << "improvement,,"
      << pct(mean_relative_improvement(column(rows, [](const auto& r) { return r.ndcg_gt; }), random)) << ','
      << pct(mean_relative_improvement(column(rows, [](const auto& r) { return r.ndcg_all; }), random)) << '\n';
}

void write_surrogate_report(const std::vector<SubredditReport>& rows, const std::string& path) {
  auto out = open_report(path);
  out << "subreddit,pos_neg,high_mid,ranking\n";
  double a = 0, b = 0, c = 0;
  for (const auto& r : rows) {
    out << r.subreddit << ',' << pct(r.pos_neg) << ',' << pct(r.high_mid) << ',' << pct(r.ranking) << '\n';
    a += r.pos_neg;
    b += r.high_mid;
    c += r.ranking;
  }
  if (rows.empty()) return;
  const double n = static_cast<double>(rows.size());
  out << "average," << pct(a / n) << ',' << pct(b / n) << ',' << pct(c / n) << '\n';
}

void write_ablation_report(const std::vector<SubredditReport>& rows, const std::string& path) {
  auto out = open_report(path);
  out << "subreddit,group,p1_gt,p1_group,relative_improvement\n";
  for (const auto& r : rows)
    for (const auto& a : r.ablation)
      out << r.subreddit << ',' << a.group << ',' << pct(r.p1_gt) << ',' << pct(a.p1_group) << ','
          << format_fixed(a.relative_improvement, 4) << '\n';
}

}  // namespace karmarank

#include "karmarank/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <unordered_map>

#include <json.hpp>

#include "karmarank/common.hpp"

namespace karmarank {

using nlohmann::json;

std::vector<std::size_t> FeatureSchema::columns_of(const std::vector<std::string>& group_ids) const {
  std::vector<std::size_t> cols;
  for (std::size_t c = 0; c < groups.size(); ++c)
    if (std::find(group_ids.begin(), group_ids.end(), groups[c]) != group_ids.end()) cols.push_back(c);
  return cols;
}

std::vector<std::string> FeatureSchema::group_ids() const {
  std::vector<std::string> out;
  for (const auto& g : groups)
    if (std::find(out.begin(), out.end(), g) == out.end()) out.push_back(g);
  return out;
}

std::string FeatureSchema::hash() const {
  Fnv1a h;
  for (const auto& n : names) {
    h.update(n);
    h.update(std::string_view("\n", 1));
  }
  return h.hex();
}

RankingData RankingData::select_columns(const std::vector<std::size_t>& columns) const {
  RankingData out;
  for (auto c : columns) {
    out.schema.names.push_back(schema.names.at(c));
    out.schema.groups.push_back(schema.groups.at(c));
  }
  const auto idx = Eigen::Map<const Eigen::Matrix<std::size_t, Eigen::Dynamic, 1>>(columns.data(),
                                                                                  static_cast<Eigen::Index>(columns.size()));
  out.lists.reserve(lists.size());
  for (const auto& l : lists) {
    RankingList s;
    s.id = l.id;
    s.thread_id = l.thread_id;
    s.subreddit = l.subreddit;
    s.member_ids = l.member_ids;
    s.created_utc = l.created_utc;
    s.karma = l.karma;
    s.features = l.features(Eigen::placeholders::all, idx);
    out.lists.push_back(std::move(s));
  }
  return out;
}

RankingData RankingData::select_groups(const std::vector<std::string>& group_ids) const {
  return select_columns(schema.columns_of(group_ids));
}

PairwiseSet pair_transform(const std::vector<RankingList>& lists) {
  PairwiseSet ps;
  Eigen::Index dim = lists.empty() ? 0 : lists.front().features.cols();
  std::size_t total = 0;
  for (const auto& l : lists) {
    if (l.features.cols() != dim) fail_data("pair_transform: inconsistent feature dimensions");
    for (std::size_t i = 0; i < l.karma.size(); ++i)
      for (std::size_t j = i + 1; j < l.karma.size(); ++j)
        if (l.karma[i] != l.karma[j]) ++total;
  }
  ps.unordered_pairs = total;
  ps.diffs.resize(static_cast<Eigen::Index>(2 * total), dim);
  ps.labels.reserve(2 * total);
  ps.list_index.reserve(2 * total);
  Eigen::Index row = 0;
  for (std::size_t li = 0; li < lists.size(); ++li) {
    const auto& l = lists[li];
    for (std::size_t i = 0; i < l.karma.size(); ++i)
      for (std::size_t j = i + 1; j < l.karma.size(); ++j) {
        if (l.karma[i] == l.karma[j]) continue;
        const auto hi = static_cast<Eigen::Index>(l.karma[i] > l.karma[j] ? i : j);
        const auto lo = static_cast<Eigen::Index>(l.karma[i] > l.karma[j] ? j : i);
        ps.diffs.row(row++) = l.features.row(hi) - l.features.row(lo);
        ps.labels.push_back(1.0);
        ps.list_index.push_back(li);
        ps.diffs.row(row++) = l.features.row(lo) - l.features.row(hi);
        ps.labels.push_back(-1.0);
        ps.list_index.push_back(li);
      }
  }
  return ps;
}

double svm_objective(const Eigen::MatrixXd& X, std::span<const double> y, const Eigen::VectorXd& w, double b,
                     double C) {
  const auto n = static_cast<double>(X.rows());
  if (n == 0) return 0.0;
  const double lambda = 1.0 / (C * n);
  const Eigen::VectorXd margins = X * w;
  double hinge = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    hinge += std::max(0.0, 1.0 - y[static_cast<std::size_t>(i)] * (margins(i) + b));
  return 0.5 * lambda * w.squaredNorm() + hinge / n;
}

LinearSvm train_hinge_sgd(const Eigen::MatrixXd& X, std::span<const double> y, const SvmOptions& opt) {
  if (X.rows() == 0) fail_data("cannot train a linear SVM on an empty example set");
  if (static_cast<std::size_t>(X.rows()) != y.size()) fail_data("SVM: example and label counts differ");
  if (!(opt.C > 0)) fail_config("SVM penalty C must be positive");
  if (opt.epochs < 1) fail_config("SVM epochs must be positive");

  const auto n = static_cast<std::size_t>(X.rows());
  const Eigen::Index d = X.cols();
  const double lambda = 1.0 / (opt.C * static_cast<double>(n));
  const double mean_sq = X.rowwise().squaredNorm().mean();
  const double eta0 = mean_sq > 0 ? 1.0 / mean_sq : 1.0;
  const double t0 = std::max(1.0, 1.0 / (lambda * eta0));

  Rng rng(derive_seed(opt.seed, "optimizer"));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});

  Eigen::VectorXd w = Eigen::VectorXd::Zero(d);
  double b = 0;
  Eigen::VectorXd avg_w = Eigen::VectorXd::Zero(d);
  double avg_b = 0;
  double avg_count = 0;

  LinearSvm best;
  best.C = opt.C;
  best.weights = Eigen::VectorXd::Zero(d);
  double best_obj = svm_objective(X, y, best.weights, 0.0, opt.C);
  double t = 0;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    for (auto i : order) {
      const double eta = 1.0 / (lambda * (t + t0));
      const auto xi = X.row(static_cast<Eigen::Index>(i));
      const double yi = y[i];
      const double margin = yi * (xi.dot(w) + b);
      w *= (1.0 - eta * lambda);
      if (margin < 1.0) {
        w.noalias() += (eta * yi) * xi.transpose();
        if (opt.fit_bias) b += eta * yi;
      }
      t += 1;
      // Polyak averaging starts after the first epoch.
      if (epoch > 0 || opt.epochs == 1) {
        avg_count += 1;
        const double r = 1.0 / avg_count;
        avg_w += r * (w - avg_w);
        avg_b += r * (b - avg_b);
      }
    }
    const double obj = svm_objective(X, y, avg_w, avg_b, opt.C);
    if (!std::isfinite(obj) || !avg_w.allFinite())
      fail_numeric("SVM training diverged at epoch " + std::to_string(epoch + 1) + " (C=" +
                   format_double(opt.C) + ", eta0=" + format_double(eta0) + ", objective=" +
                   format_double(obj) + ")");
    if (obj < best_obj) {
      best_obj = obj;
      best.weights = avg_w;
      best.bias = avg_b;
    }
    best.loss_trace.push_back(best_obj);
  }
  return best;
}

RankModel train_ranksvm(const PairwiseSet& pairs, const FeatureSchema& schema, const SvmOptions& opt) {
  if (pairs.diffs.rows() == 0) fail_data("ranking SVM needs at least one comment pair with distinct karma");
  if (static_cast<std::size_t>(pairs.diffs.cols()) != schema.size())
    fail_data("pair dimension does not match the feature schema");
  SvmOptions o = opt;
  o.fit_bias = false;
  auto svm = train_hinge_sgd(pairs.diffs, pairs.labels, o);
  RankModel m;
  m.feature_names = schema.names;
  m.weights = std::move(svm.weights);
  m.C = opt.C;
  m.selected_groups = schema.group_ids();
  m.seed = opt.seed;
  m.epochs = opt.epochs;
  m.loss_trace = std::move(svm.loss_trace);
  m.schema_hash = schema.hash();
  return m;
}

Eigen::VectorXd score_list(const RankModel& model, const FeatureSchema& schema, const RankingList& list) {
  if (list.features.cols() != static_cast<Eigen::Index>(schema.size()))
    fail_data("ranking list " + list.id + " does not match its feature schema");
  if (schema.names == model.feature_names) return list.features * model.weights;
  std::unordered_map<std::string, Eigen::Index> col;
  for (std::size_t c = 0; c < schema.names.size(); ++c) col.emplace(schema.names[c], static_cast<Eigen::Index>(c));
  Eigen::VectorXd scores = Eigen::VectorXd::Zero(list.features.rows());
  for (std::size_t k = 0; k < model.feature_names.size(); ++k) {
    auto it = col.find(model.feature_names[k]);
    if (it == col.end()) fail_data("feature schema mismatch: model feature '" + model.feature_names[k] + "' absent");
    scores += model.weights(static_cast<Eigen::Index>(k)) * list.features.col(it->second);
  }
  return scores;
}

Order rank_list(const RankModel& model, const FeatureSchema& schema, const RankingList& list) {
  const Eigen::VectorXd s = score_list(model, schema, list);
  Order order(static_cast<std::size_t>(s.size()));
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
    if (s(ia) != s(ib)) return s(ia) > s(ib);
    if (list.created_utc[a] != list.created_utc[b]) return list.created_utc[a] < list.created_utc[b];
    return list.member_ids[a] < list.member_ids[b];
  });
  return order;
}

double mean_p_at_1(const RankModel& model, const RankingData& data) {
  if (data.lists.empty()) return 0.0;
  double sum = 0;
  for (const auto& l : data.lists) sum += p_at_1(rank_list(model, data.schema, l), l.karma);
  return sum / static_cast<double>(data.lists.size());
}

double mean_ndcg(const RankModel& model, const RankingData& data, GainKind gain) {
  if (data.lists.empty()) return 0.0;
  double sum = 0;
  for (const auto& l : data.lists) sum += ndcg(rank_list(model, data.schema, l), l.karma, gain);
  return sum / static_cast<double>(data.lists.size());
}

PairCount pairwise_accuracy(const RankModel& model, const RankingData& data) {
  PairCount pc;
  for (const auto& l : data.lists) {
    const Eigen::VectorXd s = score_list(model, data.schema, l);
    pc += pairwise_agreement(std::span<const double>(s.data(), static_cast<std::size_t>(s.size())), l.karma);
  }
  return pc;
}

void RankModel::save(const std::string& path) const {
  json w = json::array();
  for (std::size_t k = 0; k < feature_names.size(); ++k)
    w.push_back({feature_names[k], weights(static_cast<Eigen::Index>(k))});
  json j = {{"format", "karmarank-rankmodel"},
            {"version", 1},
            {"C", C},
            {"seed", seed},
            {"epochs", epochs},
            {"selected_groups", selected_groups},
            {"schema_hash", schema_hash},
            {"corpus_hash", corpus_hash},
            {"loss_trace", loss_trace},
            {"weights", w}};
  std::ofstream out(path);
  if (!out) fail_data("cannot write " + path);
  out << j.dump(1) << '\n';
}

RankModel RankModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail_data("cannot read " + path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded() || j.value("format", "") != "karmarank-rankmodel" || j.value("version", 0) != 1)
    fail_data("unsupported rank model file " + path);
  RankModel m;
  m.C = j.at("C").get<double>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.epochs = j.at("epochs").get<int>();
  m.selected_groups = j.at("selected_groups").get<std::vector<std::string>>();
  m.schema_hash = j.at("schema_hash").get<std::string>();
  m.corpus_hash = j.at("corpus_hash").get<std::string>();
  m.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  const auto& w = j.at("weights");
  m.weights.resize(static_cast<Eigen::Index>(w.size()));
  for (std::size_t k = 0; k < w.size(); ++k) {
    m.feature_names.push_back(w[k].at(0).get<std::string>());
    m.weights(static_cast<Eigen::Index>(k)) = w[k].at(1).get<double>();
  }
  return m;
}

std::vector<double> default_c_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2}; }

TuneResult tune_C(const std::vector<double>& grid, const RankingData& train, const RankingData& validation,
                  const SvmOptions& base) {
  if (grid.empty()) fail_config("C grid is empty");
  std::vector<double> sorted = grid;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());

  const PairwiseSet pairs = pair_transform(train.lists);
  TuneResult out;
  out.grid = sorted;
  double best = -1;
  for (double c : sorted) {
    SvmOptions o = base;
    o.C = c;
    RankModel m = train_ranksvm(pairs, train.schema, o);
    const double p1 = mean_p_at_1(m, validation);
    out.validation_p1.push_back(p1);
    // Ascending grid with strict improvement keeps the smallest C on ties.
    if (p1 > best) {
      best = p1;
      out.C = c;
      out.model = std::move(m);
    }
  }
  return out;
}

std::vector<SelectionUnit> group_units(const FeatureSchema& schema, const std::vector<std::string>& group_order) {
  std::vector<SelectionUnit> units;
  for (const auto& g : group_order) {
    auto cols = schema.columns_of({g});
    if (!cols.empty()) units.push_back({g, std::move(cols)});
  }
  // Groups present in the schema but missing from the preferred order go last.
  for (const auto& g : schema.group_ids())
    if (std::find(group_order.begin(), group_order.end(), g) == group_order.end())
      units.push_back({g, schema.columns_of({g})});
  return units;
}

std::vector<SelectionUnit> feature_units(const FeatureSchema& schema) {
  std::vector<SelectionUnit> units;
  for (std::size_t c = 0; c < schema.size(); ++c) units.push_back({schema.names[c], {c}});
  return units;
}

std::vector<std::string> SelectionResult::selected() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < best_prefix && i < trace.size(); ++i) out.push_back(trace[i].added);
  return out;
}

SelectionResult greedy_select(const std::vector<SelectionUnit>& units, const RankingData& train,
                              const RankingData& validation, const std::vector<double>& grid,
                              const SvmOptions& base) {
  if (units.empty()) fail_config("greedy selection needs at least one feature unit");
  SelectionResult result;
  std::vector<bool> used(units.size(), false);
  std::vector<std::size_t> current;
  result.best_p1 = -1;

  for (std::size_t step = 0; step < units.size(); ++step) {
    double step_best = -1;
    std::size_t pick = units.size();
    TuneResult pick_tune;
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (used[u]) continue;
      std::vector<std::size_t> cols = current;
      cols.insert(cols.end(), units[u].columns.begin(), units[u].columns.end());
      std::sort(cols.begin(), cols.end());
      auto tr = train.select_columns(cols);
      auto va = validation.select_columns(cols);
      TuneResult tuned = tune_C(grid, tr, va, base);
      const double p1 = *std::max_element(tuned.validation_p1.begin(), tuned.validation_p1.end());
      if (p1 > step_best) {
        step_best = p1;
        pick = u;
        pick_tune = std::move(tuned);
      }
    }
    used[pick] = true;
    current.insert(current.end(), units[pick].columns.begin(), units[pick].columns.end());
    std::sort(current.begin(), current.end());
    result.trace.push_back({units[pick].name, step_best, pick_tune.C});
    if (step_best > result.best_p1) {
      result.best_p1 = step_best;
      result.best_prefix = step + 1;
      result.model = std::move(pick_tune.model);
    }
  }
  std::vector<std::string> chosen = result.selected();
  result.model.selected_groups = chosen;
  return result;
}

}  // namespace karmarank

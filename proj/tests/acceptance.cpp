// Acceptance checks 1-12. Prints one line per criterion; exits non-zero if any fails.
// Criterion 12 needs the published Reddit dump: set KARMARANK_DATASET to its
// path(s), comma separated, and optionally KARMARANK_DATASET_CONFIG.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "corpus_fixtures.hpp"
#include "fixtures.hpp"
#include "karmarank/common.hpp"
#include "karmarank/lexicons.hpp"
#include "karmarank/metrics.hpp"
#include "karmarank/nmf.hpp"
#include "karmarank/pipeline.hpp"
#include "karmarank/ranker.hpp"
#include "karmarank/reputation.hpp"
#include "karmarank/semantics.hpp"
#include "oracles.hpp"
#include "pipeline_fixtures.hpp"

using namespace karmarank;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome check(bool ok, std::string detail) { return {ok ? Verdict::Pass : Verdict::Fail, std::move(detail)}; }

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int d = 4) { return format_fixed(v, d); }

Outcome kindex_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(1001);
  int mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::int64_t> karmas(rng.index(501));
    for (auto& k : karmas) k = static_cast<std::int64_t>(rng.index(10011)) - 10;
    if (k_index(karmas) != oracle::k_index(karmas)) ++mismatches;
  }
  const double s = seconds_since(t0);
  return check(mismatches == 0 && s < 1.0, std::to_string(mismatches) + " mismatches in 1000, " + fmt(s, 3) + " s");
}

Outcome ndcg_oracle() {
  Rng rng(1002);
  double worst = 0;
  bool ideal_one = true;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    std::vector<double> karma(n), gains(n);
    for (std::size_t i = 0; i < n; ++i) {
      karma[i] = static_cast<double>(rng.index(20)) - 4;
      gains[i] = std::max(karma[i], 0.0);
    }
    Order order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);
    worst = std::max(worst, std::abs(ndcg(order, karma) - oracle::ndcg_bruteforce(order, gains)));
    Order ideal = order;
    std::stable_sort(ideal.begin(), ideal.end(), [&](auto a, auto b) { return karma[a] > karma[b]; });
    ideal_one = ideal_one && std::abs(ndcg(ideal, karma) - 1.0) <= 1e-12;
  }
  const double hand = ndcg(Order{2, 1, 0}, std::vector<double>{3, 1, 0});
  return check(worst <= 1e-9 && ideal_one && std::abs(hand - 0.5869) <= 1e-4,
               "max |diff| " + format_double(worst) + ", hand case " + fmt(hand));
}

Outcome p1_ties() {
  Rng rng(1003);
  bool tied_ok = true;
  for (int i = 0; i < 100; ++i) {
    Order o(10);
    std::iota(o.begin(), o.end(), std::size_t{0});
    rng.shuffle(o);
    tied_ok = tied_ok && p_at_1(o, std::vector<double>(10, 5.0)) == 1;
  }
  auto random_p1 = [&](double dup_rate) {
    int hits = 0;
    for (int i = 0; i < 10000; ++i) {
      std::vector<double> k(10);
      std::iota(k.begin(), k.end(), 0.0);
      rng.shuffle(k);
      if (rng.uniform() < dup_rate) *std::min_element(k.begin(), k.end()) = 9;
      Order o(10);
      std::iota(o.begin(), o.end(), std::size_t{0});
      rng.shuffle(o);
      hits += p_at_1(o, k);
    }
    return hits / 10000.0;
  };
  const double unique = random_p1(0.0), dup = random_p1(0.3);
  return check(tied_ok && std::abs(unique - 0.1) <= 0.01 && dup > 0.1,
               "unique maxima " + fmt(unique) + ", 30% duplicated " + fmt(dup));
}

Outcome pair_counts() {
  auto list = [](std::vector<double> karma) {
    RankingList l;
    l.features = Eigen::MatrixXd::Ones(10, 2);
    l.karma = std::move(karma);
    return l;
  };
  std::vector<double> distinct(10);
  std::iota(distinct.begin(), distinct.end(), -3.0);
  const auto a = pair_transform({list(distinct)}).unordered_pairs;
  const auto b = pair_transform({list(std::vector<double>(10, 2.0))}).unordered_pairs;
  return check(a == 45 && b == 0, std::to_string(a) + " and " + std::to_string(b) + " pairs");
}

Outcome ranker_recovery() {
  const auto schema = fixture::grouped_schema(2, 4);
  Eigen::VectorXd w(8);
  w << 1.5, -2.0, 0.5, 0.0, 1.0, 3.0, -0.7, 0.2;
  auto fn = [&](const Eigen::VectorXd& x, Rng&) { return w.dot(x); };
  auto all = fixture::ranking_data(schema, 500, 10, fn, 1005);
  RankingData train{schema, {}}, val{schema, {}}, test{schema, {}};
  for (std::size_t i = 0; i < all.lists.size(); ++i)
    (i < 350 ? train : i < 425 ? val : test).lists.push_back(all.lists[i]);
  const auto t0 = std::chrono::steady_clock::now();
  const auto tuned = tune_C(default_c_grid(), train, val, SvmOptions{});
  const double s = seconds_since(t0);
  const double acc = pairwise_accuracy(tuned.model, test).accuracy();
  const double p1 = mean_p_at_1(tuned.model, test);
  return check(acc >= 0.98 && p1 >= 0.95 && s < 60,
               "pairwise " + fmt(acc) + ", P@1 " + fmt(p1) + ", C " + format_double(tuned.C) + ", " + fmt(s, 1) + " s");
}

Outcome greedy_selection() {
  const std::vector<double> grid{1e-2, 1.0, 1e2};
  SvmOptions opt;
  opt.epochs = 5;
  const auto train = fixture::planted_group_data(150, 5, 1061, "t");
  const auto val = fixture::planted_group_data(100, 5, 1062, "v");
  const auto planted = greedy_select(group_units(train.schema, fixture::group_names()), train, val, grid, opt);
  const bool first = planted.trace.front().added == "REL" && planted.best_p1 == 1.0;

  // All groups noise: karma is uniform and independent of every feature.
  auto noise = [](int n, std::uint64_t seed, const std::string& prefix) {
    return fixture::ranking_data(
        fixture::grouped_schema(8, 3), n, 10, [](const Eigen::VectorXd&, Rng& r) { return r.uniform(); }, seed,
        prefix);
  };
  const auto ntrain = noise(150, 1063, "t"), nval = noise(100, 1064, "v"), ntest = noise(3000, 1065, "x");
  const auto sel = greedy_select(group_units(ntrain.schema, fixture::group_names()), ntrain, nval, grid, opt);
  const double p1 = mean_p_at_1(sel.model, ntest);
  std::vector<std::vector<double>> karmas;
  for (const auto& l : ntest.lists) karmas.push_back(l.karma);
  const double base = random_baseline(karmas, 100, 1066).p_at_1;
  return check(first && std::abs(p1 - base) <= 0.03,
               "planted first=" + planted.trace.front().added + " best P@1 " + fmt(planted.best_p1) +
                   "; noise test P@1 " + fmt(p1) + " vs random " + fmt(base));
}

Outcome nmf_checks() {
  Rng rng(1007);
  double worst_rise = -1e300;
  for (int trial = 0; trial < 20; ++trial) {
    const int rows = 5 + static_cast<int>(rng.index(30)), cols = 5 + static_cast<int>(rng.index(30));
    Eigen::MatrixXd V(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) V(i, j) = rng.uniform() < 0.3 ? 0.0 : rng.uniform(0.0, 4.0);
    NmfOptions<double> opt;
    opt.rank = 1 + static_cast<int>(rng.index(static_cast<std::size_t>(std::min(rows, cols))));
    opt.iterations = 100;
    opt.seed = static_cast<std::uint64_t>(trial);
    const auto f = nmf_multiplicative(V, opt);
    for (std::size_t t = 1; t < f.objective.size(); ++t)
      worst_rise = std::max(worst_rise, f.objective[t] - f.objective[t - 1]);
  }
  Eigen::VectorXd w = Eigen::VectorXd::LinSpaced(15, 0.2, 2.0);
  Eigen::RowVectorXd h = Eigen::RowVectorXd::LinSpaced(11, 3.0, 0.5);
  const Eigen::MatrixXd V = w * h;
  NmfOptions<double> opt;
  opt.rank = 1;
  opt.iterations = 500;
  const auto f = nmf_multiplicative(V, opt);
  const double rel = (V - f.W * f.H).norm() / V.norm();
  return check(worst_rise <= 1e-8 && rel <= 1e-6,
               "largest objective change " + format_double(worst_rise) + ", rank-1 relative error " + format_double(rel));
}

Outcome skipgram_sanity() {
  const std::vector<std::string> a{"cat", "dog", "pet", "fur", "paw", "vet"};
  const std::vector<std::string> b{"stock", "bond", "market", "fund", "yield", "trade"};
  Rng rng(1008);
  std::vector<std::vector<std::string>> docs;
  for (int i = 0; i < 400; ++i) {
    const auto& g = i % 2 ? a : b;
    std::vector<std::string> d;
    for (int k = 0; k < 12; ++k) d.push_back(g[rng.index(g.size())]);
    docs.push_back(std::move(d));
  }
  SkipGramConfig cfg;
  cfg.dim = 24;
  cfg.window = 3;
  cfg.epochs = 3;
  cfg.min_count = 2;
  cfg.seed = 9;
  const auto t = train_skipgram(docs, cfg);
  double within = 0, cross = 0;
  int nw = 0, nc = 0;
  for (const auto* g : {&a, &b})
    for (std::size_t i = 0; i < g->size(); ++i)
      for (std::size_t j = i + 1; j < g->size(); ++j, ++nw)
        within += cosine_similarity(t.vector((*g)[i]), t.vector((*g)[j]));
  for (const auto& x : a)
    for (const auto& y : b) {
      cross += cosine_similarity(t.vector(x), t.vector(y));
      ++nc;
    }
  const double gap = within / nw - cross / nc;
  const auto again = train_skipgram(docs, cfg);
  const bool same = again.vocab == t.vocab && again.vectors == t.vectors;
  return check(gap >= 0.2 && same, "within - cross cosine " + fmt(gap) + (same ? ", identical rerun" : ", rerun differs"));
}

Outcome wordlist_expansion() {
  const auto table = fixture::planted_embeddings(800, 10, 1009);
  std::vector<std::string> pos, neg;
  for (int i = 0; i < 10; ++i) {
    pos.push_back("pos" + std::to_string(i));
    neg.push_back("neg" + std::to_string(i));
  }
  const auto wl = expand_wordlist("planted", pos, neg, table);
  std::size_t added = 0, outside = 0;
  for (const auto& w : wl.expanded) {
    if (wl.seeds.count(w)) continue;
    ++added;
    if (table.vector(w)(0) < 0.5) ++outside;
  }
  return check(added == 500 && outside == 0,
               std::to_string(added) + " added, " + std::to_string(outside) + " outside the positive region");
}

Outcome leakage_audit() {
  const auto synth = generate_synth(fixture::small_synth(36, 1010));
  const auto threads = fixture::all_threads(synth.store);
  const auto lists = build_all_lists(synth.store, ListParams{}, 1011);
  const auto models = train_models(threads, fixture::shared_analyzer(), fixture::small_models());
  FeatureExtractor full(models);
  Rng rng(1012);
  int changed = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto& l = lists[rng.index(lists.size())];
    const Thread& t = *synth.store.find_thread(l.thread_id);
    Thread cut = t;
    cut.comments.clear();
    for (const auto& c : t.comments)
      if (c.created_utc <= l.history_cutoff_utc) {
        cut.comments.push_back(c);
        if (std::find(l.members.begin(), l.members.end(), c.id) != l.members.end()) cut.comments.back().karma = 0;
      }
    cut.sort_comments();
    FeatureExtractor fresh(models);
    const Eigen::MatrixXd x = full.list_features(l, t);
    const Eigen::MatrixXd y = fresh.list_features(l, cut);
    if (x.rows() != y.rows() || x.cols() != y.cols() || !(x.array() == y.array()).all()) ++changed;
  }
  return check(changed == 0, std::to_string(changed) + " of 200 fixtures changed");
}

Outcome end_to_end_determinism() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> dirs;
  for (const char* name : {"acceptance_run_a", "acceptance_run_b"}) {
    const auto dir = fixture::scratch_dir(name);
    Pipeline p(fixture::fixture_run(dir));
    p.synth();
    p.run_all();
    dirs.push_back(dir);
  }
  int identical = 0, present = 0;
  for (const auto* r : fixture::kReports) {
    const auto x = fixture::slurp(dirs[0] + "/out/" + r);
    present += !x.empty();
    identical += !x.empty() && x == fixture::slurp(dirs[1] + "/out/" + r);
  }
  return check(identical == 4, std::to_string(identical) + " of 4 reports byte-identical (" +
                                   std::to_string(present) + " written), two 200-thread runs in " +
                                   fmt(seconds_since(t0), 1) + " s");
}

Outcome published_dataset() {
  const char* data = std::getenv("KARMARANK_DATASET");
  if (!data || !*data) return {Verdict::Skip, "KARMARANK_DATASET not set; the published dump is not bundled"};
  const char* conf = std::getenv("KARMARANK_DATASET_CONFIG");
  RunConfig cfg = conf && *conf ? load_run_config(conf) : RunConfig{};
  cfg.inputs = split(data, ',');
  cfg.out_dir = fixture::scratch_dir("acceptance_dataset") + "/out";
  Pipeline p(cfg);
  for (const auto* s : {"ingest", "lists", "split", "train-models", "featurize", "train", "kindex-report"}) p.run(s);

  bool in_band = true;
  std::string detail = "G&T P@1";
  const auto test = read_feature_tsv(p.path("features/test.tsv"));
  for (const auto& sub : subreddits_of(test)) {
    std::string safe;
    for (char c : sub) safe += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
    const auto gt = RankModel::load(p.path("train/" + safe + ".gt.json"));
    const double p1 = mean_p_at_1(gt, filter_subreddit(test, sub));
    in_band = in_band && p1 >= 0.16 && p1 <= 0.37;
    detail += " " + sub + "=" + fmt(100 * p1, 1);
  }
  const auto rows = kindex_report(load_store(p.path("corpus")));
  bool shape = rows.size() >= 6;
  for (const auto& r : rows) shape = shape && r.top3_pct >= r.top1_pct;
  return check(in_band && shape, detail + "; Top3 >= Top1 in " + std::to_string(rows.size()) + " subreddits: " +
                                     (shape ? "yes" : "no"));
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"k-index matches the brute-force oracle", kindex_oracle},
      {"NDCG matches the permutation oracle", ndcg_oracle},
      {"P@1 tie semantics", p1_ties},
      {"pair transform counts", pair_counts},
      {"ranker recovers a noiseless linear karma", ranker_recovery},
      {"greedy selection: planted group first, noise at chance", greedy_selection},
      {"NMF monotone objective and rank-1 recovery", nmf_checks},
      {"skip-gram cluster separation and determinism", skipgram_sanity},
      {"word-list expansion stays in the positive region", wordlist_expansion},
      {"leakage audit on 200 fixtures", leakage_audit},
      {"end-to-end determinism", end_to_end_determinism},
      {"published dataset: G&T band and Top3 >= Top1", published_dataset},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {Verdict::Fail, std::string("error: ") + e.what()};
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    failed += o.verdict == Verdict::Fail;
    std::printf("criterion %2zu: %s  %s (%s)\n", i + 1, tag, criteria[i].first.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
